#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trigan/autodiff/graph.hpp"
#include "trigan/autodiff/tensor.hpp"

/// Differentiable primitives. Every function records one node on the given
/// graph and throws ShapeError naming the op and the offending shapes when the
/// operands do not fit.
namespace trigan::ops {

struct Conv2dAttrs {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

enum class BatchNormMode {
    /// Normalize with batch statistics and fold them into the running buffers.
    train,
    /// Normalize with batch statistics; running buffers untouched.
    train_frozen_stats,
    /// Normalize with the running buffers.
    eval,
};

struct BatchNormAttrs {
    BatchNormMode mode = BatchNormMode::train;
    double momentum = 0.1;
    double eps = 1e-5;
};

/// Lower clamp applied to every argument of log().
inline constexpr double kLogFloor = 1e-12;

/// x (B, in), weight (out, in), optional bias (out) -> (B, out).
Tensor linear(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias = {});

/// x (N, C, H, W), weight (O, C, kH, kW), optional bias (O) -> (N, O, OH, OW).
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dAttrs attrs);

/// x (N, C, H, W), weight (C, O, kH, kW), optional bias (O)
/// -> (N, O, (H-1)*stride - 2*padding + kH, ...). Adjoint of conv2d in x.
Tensor conv2d_transpose(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias,
                        Conv2dAttrs attrs);

/// Per-channel normalization of x (N, C, H, W) with affine gamma/beta (C).
/// running_mean / running_var (C) are plain buffers, updated in place in
/// `train` mode with the unbiased batch variance.
Tensor batchnorm2d(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   Tensor& running_mean, Tensor& running_var, BatchNormAttrs attrs);

Tensor leaky_relu(Graph& g, const Tensor& x, double negative_slope);
Tensor relu(Graph& g, const Tensor& x);
Tensor tanh(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);

/// Row-wise over the last axis of a (B, C) tensor.
Tensor softmax(Graph& g, const Tensor& x);
Tensor log_softmax(Graph& g, const Tensor& x);

/// Natural log of max(x, kLogFloor); zero gradient where the clamp is active.
Tensor log(Graph& g, const Tensor& x);

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
/// scale * x + shift, elementwise.
Tensor affine(Graph& g, const Tensor& x, double scale, double shift = 0.0);
inline Tensor scale(Graph& g, const Tensor& x, double factor) { return affine(g, x, factor, 0.0); }

/// Reductions to a scalar.
Tensor mean(Graph& g, const Tensor& x);
Tensor sum(Graph& g, const Tensor& x);
/// (B, C) -> (C): average over the batch axis.
Tensor mean_rows(Graph& g, const Tensor& x);

/// (B, C), indices (B) -> (B) with out[i] = x[i, indices[i]].
Tensor gather(Graph& g, const Tensor& x, std::span<const std::size_t> indices);

Tensor reshape(Graph& g, const Tensor& x, Shape shape);
/// Concatenation along axis 0; all trailing extents must agree.
Tensor concat(Graph& g, std::span<const Tensor> parts);

}  // namespace trigan::ops
