#include "trigan/nets/network.hpp"

#include <bit>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "trigan/common/random.hpp"

namespace trigan {
namespace {

constexpr double kLeakySlope = 0.2;
constexpr std::size_t kKernel = 4;

layers::Conv make_conv(std::string name, std::size_t in, std::size_t out, std::size_t stride, std::size_t padding,
                       bool with_bias, bool transposed = false) {
    layers::Conv conv;
    conv.name = std::move(name);
    conv.weight = transposed ? Tensor::zeros({in, out, kKernel, kKernel}, true)
                             : Tensor::zeros({out, in, kKernel, kKernel}, true);
    if (with_bias) conv.bias = Tensor::zeros({out}, true);
    conv.attrs = {stride, padding};
    conv.transposed = transposed;
    return conv;
}

layers::BatchNorm make_bn(std::string name, std::size_t channels) {
    return {std::move(name), Tensor::full({channels}, 1.0, true), Tensor::zeros({channels}, true),
            Tensor::zeros({channels}), Tensor::full({channels}, 1.0)};
}

// Strided-conv trunk shared by the discriminator and the classifier; the
// head emits `outputs` values per sample at 1x1 resolution.
std::vector<Layer> conv_trunk(const NetworkSpec& spec, std::size_t outputs) {
    std::vector<Layer> stack;
    std::size_t in = spec.channels;
    std::size_t width = spec.base_width;
    for (std::size_t stage = 1; stage <= spec.stages(); ++stage) {
        const std::string name = "conv" + std::to_string(stage);
        const bool first = stage == 1;
        stack.emplace_back(make_conv(name, in, width, 2, 1, first));
        if (!first) stack.emplace_back(make_bn("bn" + std::to_string(stage), width));
        stack.emplace_back(layers::Act{layers::Activation::leaky_relu, kLeakySlope});
        in = width;
        width *= 2;
    }
    stack.emplace_back(make_conv("head", in, outputs, 1, 0, true));
    return stack;
}

void require_role(const NetworkSpec& spec, Role role) {
    if (spec.role != role) {
        throw std::invalid_argument("cannot build a " + std::string(role_name(role)) + " from a " +
                                    std::string(role_name(spec.role)) + " spec");
    }
}

}  // namespace

std::string_view role_name(Role role) noexcept {
    switch (role) {
        case Role::generator: return "generator";
        case Role::discriminator: return "discriminator";
        case Role::classifier: return "classifier";
    }
    return "unknown";
}

std::size_t NetworkSpec::stages() const { return static_cast<std::size_t>(std::countr_zero(image_size / 4)); }

std::size_t NetworkSpec::top_width() const { return base_width << (stages() - 1); }

void NetworkSpec::validate() const {
    if (image_size < 32 || image_size > 256 || !std::has_single_bit(image_size)) {
        throw std::invalid_argument("image_size must be a power of two in [32, 256], got " +
                                    std::to_string(image_size));
    }
    if (channels == 0) throw std::invalid_argument("channels must be positive");
    if (latent_dim == 0) throw std::invalid_argument("latent_dim must be positive");
    if (base_width == 0) throw std::invalid_argument("base_width must be positive");
    if (role == Role::classifier && num_classes < 2) {
        throw std::invalid_argument("classifier needs num_classes >= 2, got " + std::to_string(num_classes));
    }
}

Network::Network(NetworkSpec spec, std::vector<Layer> stack) : spec_(spec), layers_(std::move(stack)) {
    std::set<std::string> seen;
    auto add = [&](std::vector<NamedTensor>& into, const std::string& name, const Tensor& t) {
        if (!t.defined()) return;
        if (!seen.insert(name).second) throw std::invalid_argument("duplicate parameter name '" + name + "'");
        into.push_back({name, t});
    };
    for (const Layer& layer : layers_) {
        if (const auto* d = std::get_if<layers::Dense>(&layer)) {
            add(parameters_, d->name + ".weight", d->weight);
            add(parameters_, d->name + ".bias", d->bias);
        } else if (const auto* c = std::get_if<layers::Conv>(&layer)) {
            add(parameters_, c->name + ".weight", c->weight);
            add(parameters_, c->name + ".bias", c->bias);
        } else if (const auto* bn = std::get_if<layers::BatchNorm>(&layer)) {
            add(parameters_, bn->name + ".gamma", bn->gamma);
            add(parameters_, bn->name + ".beta", bn->beta);
            add(buffers_, bn->name + ".running_mean", bn->running_mean);
            add(buffers_, bn->name + ".running_var", bn->running_var);
        }
    }
}

void Network::check_input(const Tensor& input) const {
    const Shape& s = input.shape();
    if (spec_.role == Role::generator) {
        if (s.size() != 2 || s[1] != spec_.latent_dim) {
            throw ShapeError("generator expects (B, " + std::to_string(spec_.latent_dim) + ") noise, got " +
                             shape_string(s));
        }
        return;
    }
    if (s.size() != 4 || s[1] != spec_.channels || s[2] != spec_.image_size || s[3] != spec_.image_size) {
        throw ShapeError(std::string(role_name(spec_.role)) + " expects (B, " + std::to_string(spec_.channels) +
                         ", " + std::to_string(spec_.image_size) + ", " + std::to_string(spec_.image_size) +
                         ") images, got " + shape_string(s));
    }
}

Tensor Network::forward(Graph& g, const Tensor& input, ForwardMode mode) {
    check_input(input);
    const std::size_t batch = input.dim(0);
    Tensor h = input;
    for (Layer& layer : layers_) {
        if (auto* d = std::get_if<layers::Dense>(&layer)) {
            h = ops::linear(g, h, d->weight, d->bias);
        } else if (auto* c = std::get_if<layers::Conv>(&layer)) {
            h = c->transposed ? ops::conv2d_transpose(g, h, c->weight, c->bias, c->attrs)
                              : ops::conv2d(g, h, c->weight, c->bias, c->attrs);
        } else if (auto* bn = std::get_if<layers::BatchNorm>(&layer)) {
            h = ops::batchnorm2d(g, h, bn->gamma, bn->beta, bn->running_mean, bn->running_var, {mode});
        } else if (auto* a = std::get_if<layers::Act>(&layer)) {
            switch (a->kind) {
                case layers::Activation::relu: h = ops::relu(g, h); break;
                case layers::Activation::leaky_relu: h = ops::leaky_relu(g, h, a->slope); break;
                case layers::Activation::tanh: h = ops::tanh(g, h); break;
                case layers::Activation::sigmoid: h = ops::sigmoid(g, h); break;
            }
        } else if (auto* r = std::get_if<layers::Reshape>(&layer)) {
            Shape target{batch};
            target.insert(target.end(), r->trailing.begin(), r->trailing.end());
            h = ops::reshape(g, h, std::move(target));
        }
    }
    return h;
}

std::size_t Network::parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : parameters_) total += p.tensor.numel();
    return total;
}

void Network::zero_grad() {
    for (auto& p : parameters_) p.tensor.zero_grad();
}

void Network::set_trainable(bool trainable) {
    trainable_ = trainable;
    for (auto& p : parameters_) p.tensor.set_requires_grad(trainable);
}

FreezeGuard::FreezeGuard(std::initializer_list<Network*> nets) {
    for (Network* net : nets) {
        if (net && net->trainable()) {
            net->set_trainable(false);
            nets_.push_back(net);
        }
    }
}

FreezeGuard::~FreezeGuard() {
    for (Network* net : nets_) net->set_trainable(true);
}

Network build_generator(const NetworkSpec& spec) {
    require_role(spec, Role::generator);
    spec.validate();
    const std::size_t top = spec.top_width();
    std::vector<Layer> stack;
    stack.emplace_back(layers::Dense{"project", Tensor::zeros({top * 16, spec.latent_dim}, true), {}});
    stack.emplace_back(layers::Reshape{{top, 4, 4}});
    stack.emplace_back(make_bn("project_bn", top));
    stack.emplace_back(layers::Act{layers::Activation::relu});
    std::size_t width = top;
    for (std::size_t stage = 1; stage < spec.stages(); ++stage) {
        const std::string name = "up" + std::to_string(stage);
        stack.emplace_back(make_conv(name, width, width / 2, 2, 1, false, true));
        stack.emplace_back(make_bn(name + "_bn", width / 2));
        stack.emplace_back(layers::Act{layers::Activation::relu});
        width /= 2;
    }
    stack.emplace_back(make_conv("out", width, spec.channels, 2, 1, true, true));
    stack.emplace_back(layers::Act{layers::Activation::tanh});
    return Network(spec, std::move(stack));
}

Network build_discriminator(const NetworkSpec& spec) {
    require_role(spec, Role::discriminator);
    spec.validate();
    std::vector<Layer> stack = conv_trunk(spec, 1);
    stack.emplace_back(layers::Act{layers::Activation::sigmoid});
    stack.emplace_back(layers::Reshape{{}});
    return Network(spec, std::move(stack));
}

Network build_classifier(const NetworkSpec& spec) {
    require_role(spec, Role::classifier);
    spec.validate();
    std::vector<Layer> stack = conv_trunk(spec, spec.num_classes);
    stack.emplace_back(layers::Reshape{{spec.num_classes}});
    return Network(spec, std::move(stack));
}

Network build_network(const NetworkSpec& spec) {
    switch (spec.role) {
        case Role::generator: return build_generator(spec);
        case Role::discriminator: return build_discriminator(spec);
        case Role::classifier: return build_classifier(spec);
    }
    throw std::invalid_argument("unknown network role");
}

void init_weights(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> weight(0.0, 0.02);
    std::normal_distribution<double> scale(1.0, 0.02);
    auto fill = [&](Tensor& t, auto& dist) {
        for (double& v : t.values()) v = dist(rng);
    };
    auto zero = [](Tensor& t) {
        if (t.defined()) std::fill(t.values().begin(), t.values().end(), 0.0);
    };
    for (const Layer& layer : net.layer_stack()) {
        if (const auto* d = std::get_if<layers::Dense>(&layer)) {
            Tensor w = d->weight, b = d->bias;
            fill(w, weight);
            zero(b);
        } else if (const auto* c = std::get_if<layers::Conv>(&layer)) {
            Tensor w = c->weight, b = c->bias;
            fill(w, weight);
            zero(b);
        } else if (const auto* bn = std::get_if<layers::BatchNorm>(&layer)) {
            Tensor gamma = bn->gamma, beta = bn->beta, rm = bn->running_mean, rv = bn->running_var;
            fill(gamma, scale);
            zero(beta);
            zero(rm);
            std::fill(rv.values().begin(), rv.values().end(), 1.0);
        }
    }
}

}  // namespace trigan
