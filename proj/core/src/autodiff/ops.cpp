#include "trigan/autodiff/ops.hpp"

#include <initializer_list>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace trigan::ops {
namespace {

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
    throw ShapeError(std::string(op_name(kind)) + ": " + detail);
}

void require_same_shape(OpKind kind, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        shape_fail(kind, "operand shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                             " differ");
    }
}

void require_matrix(OpKind kind, const Tensor& x) {
    if (x.rank() != 2) shape_fail(kind, "expected a (B, C) matrix, got " + shape_string(x.shape()));
}

// out = forward(x); dx += derivative(x, y) * dy.
template <typename Forward, typename Derivative>
Tensor elementwise(Graph& g, OpKind kind, const Tensor& x, Forward forward, Derivative derivative) {
    auto xv = x.values();
    std::vector<double> out(xv.size());
    std::transform(xv.begin(), xv.end(), out.begin(), forward);
    auto saved = std::make_shared<const std::vector<double>>(out);
    return g.record(kind, {x}, x.shape(), std::move(out), [x, saved, derivative](const BackwardContext& ctx) {
        if (!ctx.wants(0)) return;
        auto xv = x.values();
        const auto& yv = *saved;
        auto dx = ctx.in_grads[0];
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += derivative(xv[i], yv[i]) * ctx.out_grad[i];
    });
}

}  // namespace

Tensor leaky_relu(Graph& g, const Tensor& x, double negative_slope) {
    return elementwise(
        g, OpKind::leaky_relu, x, [negative_slope](double v) { return v > 0.0 ? v : negative_slope * v; },
        [negative_slope](double v, double) { return v > 0.0 ? 1.0 : negative_slope; });
}

Tensor relu(Graph& g, const Tensor& x) {
    return elementwise(
        g, OpKind::relu, x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(Graph& g, const Tensor& x) {
    return elementwise(
        g, OpKind::tanh, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Graph& g, const Tensor& x) {
    return elementwise(
        g, OpKind::sigmoid, x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor log(Graph& g, const Tensor& x) {
    return elementwise(
        g, OpKind::log, x, [](double v) { return std::log(std::max(v, kLogFloor)); },
        [](double v, double) { return v > kLogFloor ? 1.0 / v : 0.0; });
}

Tensor affine(Graph& g, const Tensor& x, double scale, double shift) {
    return elementwise(
        g, OpKind::affine, x, [scale, shift](double v) { return scale * v + shift; },
        [scale](double, double) { return scale; });
}

Tensor softmax(Graph& g, const Tensor& x) {
    require_matrix(OpKind::softmax, x);
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * cols;
        double* o = out.data() + r * cols;
        const double peak = *std::max_element(in, in + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - peak));
        for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
    }
    auto saved = std::make_shared<const std::vector<double>>(out);
    return g.record(OpKind::softmax, {x}, x.shape(), std::move(out), [saved, rows, cols](const BackwardContext& ctx) {
        if (!ctx.wants(0)) return;
        const auto& s = *saved;
        auto dx = ctx.in_grads[0];
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * cols;
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += ctx.out_grad[base + c] * s[base + c];
            for (std::size_t c = 0; c < cols; ++c) dx[base + c] += s[base + c] * (ctx.out_grad[base + c] - dot);
        }
    });
}

Tensor log_softmax(Graph& g, const Tensor& x) {
    require_matrix(OpKind::log_softmax, x);
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = xv.data() + r * cols;
        double* o = out.data() + r * cols;
        const double peak = *std::max_element(in, in + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += std::exp(in[c] - peak);
        const double lse = peak + std::log(total);
        for (std::size_t c = 0; c < cols; ++c) o[c] = in[c] - lse;
    }
    auto saved = std::make_shared<const std::vector<double>>(out);
    return g.record(OpKind::log_softmax, {x}, x.shape(), std::move(out),
                    [saved, rows, cols](const BackwardContext& ctx) {
                        if (!ctx.wants(0)) return;
                        const auto& ls = *saved;
                        auto dx = ctx.in_grads[0];
                        for (std::size_t r = 0; r < rows; ++r) {
                            const std::size_t base = r * cols;
                            double total = 0.0;
                            for (std::size_t c = 0; c < cols; ++c) total += ctx.out_grad[base + c];
                            for (std::size_t c = 0; c < cols; ++c) {
                                dx[base + c] += ctx.out_grad[base + c] - std::exp(ls[base + c]) * total;
                            }
                        }
                    });
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    require_same_shape(OpKind::add, a, b);
    auto av = a.values(), bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return g.record(OpKind::add, {a, b}, a.shape(), std::move(out), [](const BackwardContext& ctx) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (!ctx.wants(k)) continue;
            auto d = ctx.in_grads[k];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += ctx.out_grad[i];
        }
    });
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    require_same_shape(OpKind::sub, a, b);
    auto av = a.values(), bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return g.record(OpKind::sub, {a, b}, a.shape(), std::move(out), [](const BackwardContext& ctx) {
        if (ctx.wants(0)) {
            auto d = ctx.in_grads[0];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += ctx.out_grad[i];
        }
        if (ctx.wants(1)) {
            auto d = ctx.in_grads[1];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= ctx.out_grad[i];
        }
    });
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    require_same_shape(OpKind::mul, a, b);
    auto av = a.values(), bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return g.record(OpKind::mul, {a, b}, a.shape(), std::move(out), [a, b](const BackwardContext& ctx) {
        auto av = a.values(), bv = b.values();
        if (ctx.wants(0)) {
            auto d = ctx.in_grads[0];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += bv[i] * ctx.out_grad[i];
        }
        if (ctx.wants(1)) {
            auto d = ctx.in_grads[1];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += av[i] * ctx.out_grad[i];
        }
    });
}

Tensor sum(Graph& g, const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    return g.record(OpKind::sum, {x}, {}, {total}, [](const BackwardContext& ctx) {
        if (!ctx.wants(0)) return;
        const double dy = ctx.out_grad[0];
        for (double& d : ctx.in_grads[0]) d += dy;
    });
}

Tensor mean(Graph& g, const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    const double n = static_cast<double>(x.numel());
    return g.record(OpKind::mean, {x}, {}, {total / n}, [n](const BackwardContext& ctx) {
        if (!ctx.wants(0)) return;
        const double dy = ctx.out_grad[0] / n;
        for (double& d : ctx.in_grads[0]) d += dy;
    });
}

Tensor mean_rows(Graph& g, const Tensor& x) {
    require_matrix(OpKind::mean_rows, x);
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    auto xv = x.values();
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[c] += xv[r * cols + c];
    }
    const double n = static_cast<double>(rows);
    for (double& v : out) v /= n;
    return g.record(OpKind::mean_rows, {x}, {cols}, std::move(out), [rows, cols, n](const BackwardContext& ctx) {
        if (!ctx.wants(0)) return;
        auto d = ctx.in_grads[0];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += ctx.out_grad[c] / n;
        }
    });
}

Tensor gather(Graph& g, const Tensor& x, std::span<const std::size_t> indices) {
    require_matrix(OpKind::gather, x);
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (indices.size() != rows) {
        shape_fail(OpKind::gather, "input " + shape_string(x.shape()) + " needs " + std::to_string(rows) +
                                       " indices, got " + std::to_string(indices.size()));
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    std::vector<double> out(rows);
    auto xv = x.values();
    for (std::size_t r = 0; r < rows; ++r) {
        if (idx[r] >= cols) {
            shape_fail(OpKind::gather, "index " + std::to_string(idx[r]) + " out of range for input " +
                                           shape_string(x.shape()));
        }
        out[r] = xv[r * cols + idx[r]];
    }
    return g.record(OpKind::gather, {x}, {rows}, std::move(out),
                    [idx = std::move(idx), cols](const BackwardContext& ctx) {
                        if (!ctx.wants(0)) return;
                        auto d = ctx.in_grads[0];
                        for (std::size_t r = 0; r < idx.size(); ++r) d[r * cols + idx[r]] += ctx.out_grad[r];
                    });
}

Tensor reshape(Graph& g, const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        shape_fail(OpKind::reshape, "cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    auto xv = x.values();
    return g.record(OpKind::reshape, {x}, std::move(shape), std::vector<double>(xv.begin(), xv.end()),
                    [](const BackwardContext& ctx) {
                        if (!ctx.wants(0)) return;
                        auto d = ctx.in_grads[0];
                        for (std::size_t i = 0; i < d.size(); ++i) d[i] += ctx.out_grad[i];
                    });
}

Tensor concat(Graph& g, std::span<const Tensor> parts) {
    if (parts.empty()) shape_fail(OpKind::concat, "no inputs");
    const Shape& first = parts.front().shape();
    if (first.empty()) shape_fail(OpKind::concat, "cannot concatenate scalars");
    Shape out_shape = first;
    out_shape[0] = 0;
    std::vector<double> out;
    std::vector<Tensor> inputs;
    std::vector<std::size_t> sizes;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size() || !std::equal(s.begin() + 1, s.end(), first.begin() + 1)) {
            shape_fail(OpKind::concat, "shape " + shape_string(s) + " incompatible with " + shape_string(first));
        }
        out_shape[0] += s[0];
        auto v = p.values();
        out.insert(out.end(), v.begin(), v.end());
        inputs.push_back(p);
        sizes.push_back(v.size());
    }
    return g.record(OpKind::concat, std::move(inputs), std::move(out_shape), std::move(out),
                    [sizes = std::move(sizes)](const BackwardContext& ctx) {
                        std::size_t offset = 0;
                        for (std::size_t k = 0; k < sizes.size(); ++k) {
                            if (ctx.wants(k)) {
                                auto d = ctx.in_grads[k];
                                for (std::size_t i = 0; i < sizes[k]; ++i) d[i] += ctx.out_grad[offset + i];
                            }
                            offset += sizes[k];
                        }
                    });
}

Tensor batchnorm2d(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, BatchNormAttrs attrs) {
    if (x.rank() != 4) shape_fail(OpKind::batchnorm2d, "expected NCHW input, got " + shape_string(x.shape()));
    const std::size_t n = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
    const Shape per_channel{channels};
    for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
        if (t->shape() != per_channel) {
            shape_fail(OpKind::batchnorm2d, "input " + shape_string(x.shape()) + " needs per-channel tensors " +
                                                shape_string(per_channel) + ", got " + shape_string(t->shape()));
        }
    }
    const double count = static_cast<double>(n * plane);
    const bool batch_stats = attrs.mode != BatchNormMode::eval;
    auto xv = x.values();
    auto gv = gamma.values();
    auto bv = beta.values();

    std::vector<double> inv_std(channels);
    auto xhat = std::make_shared<std::vector<double>>(xv.size());
    std::vector<double> out(xv.size());
    for (std::size_t c = 0; c < channels; ++c) {
        double mu, var;
        if (batch_stats) {
            double acc = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double* p = xv.data() + (b * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            }
            mu = acc / count;
            double sq = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double* p = xv.data() + (b * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
            }
            var = sq / count;
            if (attrs.mode == BatchNormMode::train) {
                const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
                auto rm = running_mean.values();
                auto rv = running_var.values();
                rm[c] = (1.0 - attrs.momentum) * rm[c] + attrs.momentum * mu;
                rv[c] = (1.0 - attrs.momentum) * rv[c] + attrs.momentum * unbiased;
            }
        } else {
            mu = running_mean.values()[c];
            var = running_var.values()[c];
        }
        inv_std[c] = 1.0 / std::sqrt(var + attrs.eps);
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t base = (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double h = (xv[base + i] - mu) * inv_std[c];
                (*xhat)[base + i] = h;
                out[base + i] = gv[c] * h + bv[c];
            }
        }
    }

    return g.record(OpKind::batchnorm2d, {x, gamma, beta}, x.shape(), std::move(out),
                    [gamma, xhat, inv_std = std::move(inv_std), n, channels, plane, count,
                     batch_stats](const BackwardContext& ctx) {
                        auto gv = gamma.values();
                        const auto& h = *xhat;
                        for (std::size_t c = 0; c < channels; ++c) {
                            double sum_dy = 0.0, sum_dy_h = 0.0;
                            for (std::size_t b = 0; b < n; ++b) {
                                const std::size_t base = (b * channels + c) * plane;
                                for (std::size_t i = 0; i < plane; ++i) {
                                    sum_dy += ctx.out_grad[base + i];
                                    sum_dy_h += ctx.out_grad[base + i] * h[base + i];
                                }
                            }
                            if (ctx.wants(1)) ctx.in_grads[1][c] += sum_dy_h;
                            if (ctx.wants(2)) ctx.in_grads[2][c] += sum_dy;
                            if (!ctx.wants(0)) continue;
                            auto dx = ctx.in_grads[0];
                            const double k = gv[c] * inv_std[c];
                            for (std::size_t b = 0; b < n; ++b) {
                                const std::size_t base = (b * channels + c) * plane;
                                for (std::size_t i = 0; i < plane; ++i) {
                                    const double dy = ctx.out_grad[base + i];
                                    dx[base + i] += batch_stats
                                                        ? k * (dy - (sum_dy + h[base + i] * sum_dy_h) / count)
                                                        : k * dy;
                                }
                            }
                        }
                    });
}

}  // namespace trigan::ops
