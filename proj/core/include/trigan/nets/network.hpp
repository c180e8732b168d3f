#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trigan/autodiff/adam.hpp"
#include "trigan/autodiff/graph.hpp"
#include "trigan/autodiff/ops.hpp"

namespace trigan {

enum class Role : std::uint8_t { generator = 0, discriminator = 1, classifier = 2 };

std::string_view role_name(Role role) noexcept;

struct NetworkSpec {
    Role role = Role::classifier;
    std::size_t image_size = 64;
    std::size_t channels = 1;
    std::size_t latent_dim = 100;
    std::size_t base_width = 64;
    std::size_t num_classes = 2;

    /// Number of stride-2 stages between 4x4 and image_size.
    std::size_t stages() const;
    /// Channel width at the 4x4 end of the stack.
    std::size_t top_width() const;
    /// Throws std::invalid_argument naming the bad field.
    void validate() const;

    bool operator==(const NetworkSpec&) const = default;
};

using ForwardMode = ops::BatchNormMode;

namespace layers {

struct Dense {
    std::string name;
    Tensor weight, bias;
};
struct Conv {
    std::string name;
    Tensor weight, bias;
    ops::Conv2dAttrs attrs;
    bool transposed = false;
};
struct BatchNorm {
    std::string name;
    Tensor gamma, beta, running_mean, running_var;
};
enum class Activation { relu, leaky_relu, tanh, sigmoid };
struct Act {
    Activation kind;
    double slope = 0.0;
};
/// Keeps the batch axis, reshapes the rest.
struct Reshape {
    Shape trailing;
};

}  // namespace layers

using Layer = std::variant<layers::Dense, layers::Conv, layers::BatchNorm, layers::Act, layers::Reshape>;

/// Ordered layer stack for one of the three DCGAN-family roles.
///
/// Generator:      (B, latent_dim)        -> (B, channels, S, S) in [-1, 1]
/// Discriminator:  (B, channels, S, S)    -> (B) probabilities in (0, 1)
/// Classifier:     (B, channels, S, S)    -> (B, num_classes) logits
///
/// Networks own their parameters through shared tensor handles, so copying
/// is disabled; moving is fine.
class Network {
public:
    Network(NetworkSpec spec, std::vector<Layer> layers);

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    Tensor forward(Graph& g, const Tensor& input, ForwardMode mode = ForwardMode::train);

    const NetworkSpec& spec() const noexcept { return spec_; }
    Role role() const noexcept { return spec_.role; }
    const std::vector<Layer>& layer_stack() const noexcept { return layers_; }

    /// Trainable tensors with unique dotted names, in a fixed order.
    std::span<const NamedTensor> parameters() const noexcept { return parameters_; }
    /// Non-trainable state (batchnorm running statistics).
    std::span<const NamedTensor> buffers() const noexcept { return buffers_; }

    std::size_t parameter_count() const;
    void zero_grad();
    /// Toggles requires_grad on every parameter; frozen parameters hold no
    /// gradient and are skipped by backward.
    void set_trainable(bool trainable);
    bool trainable() const noexcept { return trainable_; }

private:
    void check_input(const Tensor& input) const;

    NetworkSpec spec_;
    std::vector<Layer> layers_;
    std::vector<NamedTensor> parameters_;
    std::vector<NamedTensor> buffers_;
    bool trainable_ = true;
};

/// Freezes the given networks for the lifetime of the guard.
class FreezeGuard {
public:
    FreezeGuard(std::initializer_list<Network*> nets);
    ~FreezeGuard();
    FreezeGuard(const FreezeGuard&) = delete;
    FreezeGuard& operator=(const FreezeGuard&) = delete;

private:
    std::vector<Network*> nets_;
};

Network build_generator(const NetworkSpec& spec);
Network build_discriminator(const NetworkSpec& spec);
Network build_classifier(const NetworkSpec& spec);
/// Dispatches on spec.role.
Network build_network(const NetworkSpec& spec);

/// DCGAN initialization: conv/linear weights ~ N(0, 0.02), batchnorm scale
/// ~ N(1, 0.02), biases and shifts 0, running stats reset.
void init_weights(Network& net, std::uint64_t seed);

}  // namespace trigan
