// Dense and convolutional primitives. Convolutions lower to im2col + GEMM per
// sample; the GEMMs run through Eigen maps over the row-major buffers.

#include <Eigen/Core>

#include <string>

#include "trigan/autodiff/ops.hpp"

namespace trigan::ops {
namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
    throw ShapeError(std::string(op_name(kind)) + ": " + detail);
}

// Geometry of a strided, zero-padded sliding window over a (C, H, W) image.
struct Window {
    std::size_t channels, height, width;
    std::size_t kernel_h, kernel_w;
    std::size_t stride, padding;
    std::size_t out_h, out_w;

    std::size_t rows() const { return channels * kernel_h * kernel_w; }
    std::size_t cols() const { return out_h * out_w; }
};

// image (C, H, W) -> columns (C*kH*kW, OH*OW).
void im2col(const Window& w, const double* image, double* columns) {
    const auto pad = static_cast<std::ptrdiff_t>(w.padding);
    for (std::size_t c = 0; c < w.channels; ++c) {
        for (std::size_t ky = 0; ky < w.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < w.kernel_w; ++kx) {
                double* row = columns + ((c * w.kernel_h + ky) * w.kernel_w + kx) * w.cols();
                for (std::size_t oy = 0; oy < w.out_h; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * w.stride + ky) - pad;
                    double* dst = row + oy * w.out_w;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(w.height)) {
                        std::fill(dst, dst + w.out_w, 0.0);
                        continue;
                    }
                    const double* src = image + (c * w.height + static_cast<std::size_t>(iy)) * w.width;
                    for (std::size_t ox = 0; ox < w.out_w; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * w.stride + kx) - pad;
                        dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w.width))
                                      ? 0.0
                                      : src[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

// columns (C*kH*kW, OH*OW) scatter-added into image (C, H, W).
void col2im(const Window& w, const double* columns, double* image) {
    const auto pad = static_cast<std::ptrdiff_t>(w.padding);
    for (std::size_t c = 0; c < w.channels; ++c) {
        for (std::size_t ky = 0; ky < w.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < w.kernel_w; ++kx) {
                const double* row = columns + ((c * w.kernel_h + ky) * w.kernel_w + kx) * w.cols();
                for (std::size_t oy = 0; oy < w.out_h; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * w.stride + ky) - pad;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(w.height)) continue;
                    double* dst = image + (c * w.height + static_cast<std::size_t>(iy)) * w.width;
                    const double* src = row + oy * w.out_w;
                    for (std::size_t ox = 0; ox < w.out_w; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * w.stride + kx) - pad;
                        if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w.width)) {
                            dst[static_cast<std::size_t>(ix)] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

void check_bias(OpKind kind, const Tensor& bias, std::size_t out_channels, const Tensor& weight) {
    if (bias.defined() && bias.shape() != Shape{out_channels}) {
        shape_fail(kind, "bias " + shape_string(bias.shape()) + " does not match weight " +
                             shape_string(weight.shape()));
    }
}

std::vector<Tensor> operands(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    std::vector<Tensor> in{x, weight};
    if (bias.defined()) in.push_back(bias);
    return in;
}

void check_conv_inputs(OpKind kind, const Tensor& x, const Tensor& weight, Conv2dAttrs attrs) {
    if (x.rank() != 4) shape_fail(kind, "expected NCHW input, got " + shape_string(x.shape()));
    if (weight.rank() != 4) shape_fail(kind, "expected a rank-4 kernel, got " + shape_string(weight.shape()));
    if (attrs.stride == 0) shape_fail(kind, "stride must be positive");
}

}  // namespace

Tensor linear(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1)) {
        shape_fail(OpKind::linear, "input " + shape_string(x.shape()) + " incompatible with weight " +
                                       shape_string(weight.shape()));
    }
    const std::size_t batch = x.dim(0), in = x.dim(1), out = weight.dim(0);
    check_bias(OpKind::linear, bias, out, weight);

    std::vector<double> y(batch * out);
    ConstMatrixMap X(x.values().data(), batch, in);
    ConstMatrixMap W(weight.values().data(), out, in);
    MatrixMap Y(y.data(), batch, out);
    Y.noalias() = X * W.transpose();
    if (bias.defined()) {
        auto b = bias.values();
        for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t c = 0; c < out; ++c) y[r * out + c] += b[c];
        }
    }

    return g.record(OpKind::linear, operands(x, weight, bias), {batch, out}, std::move(y),
                    [x, weight, batch, in, out](const BackwardContext& ctx) {
                        ConstMatrixMap dY(ctx.out_grad.data(), batch, out);
                        if (ctx.wants(0)) {
                            MatrixMap dX(ctx.in_grads[0].data(), batch, in);
                            dX.noalias() += dY * ConstMatrixMap(weight.values().data(), out, in);
                        }
                        if (ctx.wants(1)) {
                            MatrixMap dW(ctx.in_grads[1].data(), out, in);
                            dW.noalias() += dY.transpose() * ConstMatrixMap(x.values().data(), batch, in);
                        }
                        if (ctx.in_grads.size() > 2 && ctx.wants(2)) {
                            auto db = ctx.in_grads[2];
                            for (std::size_t r = 0; r < batch; ++r) {
                                for (std::size_t c = 0; c < out; ++c) db[c] += ctx.out_grad[r * out + c];
                            }
                        }
                    });
}

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias, Conv2dAttrs attrs) {
    constexpr OpKind kind = OpKind::conv2d;
    check_conv_inputs(kind, x, weight, attrs);
    if (weight.dim(1) != x.dim(1)) {
        shape_fail(kind, "input " + shape_string(x.shape()) + " has " + std::to_string(x.dim(1)) +
                             " channels but kernel " + shape_string(weight.shape()) + " expects " +
                             std::to_string(weight.dim(1)));
    }
    const std::size_t batch = x.dim(0), out_ch = weight.dim(0);
    Window w{x.dim(1), x.dim(2), x.dim(3), weight.dim(2), weight.dim(3), attrs.stride, attrs.padding, 0, 0};
    if (w.height + 2 * w.padding < w.kernel_h || w.width + 2 * w.padding < w.kernel_w) {
        shape_fail(kind, "kernel " + shape_string(weight.shape()) + " larger than padded input " +
                             shape_string(x.shape()));
    }
    w.out_h = (w.height + 2 * w.padding - w.kernel_h) / w.stride + 1;
    w.out_w = (w.width + 2 * w.padding - w.kernel_w) / w.stride + 1;
    check_bias(kind, bias, out_ch, weight);

    const std::size_t in_plane = w.channels * w.height * w.width;
    const std::size_t out_plane = out_ch * w.cols();
    std::vector<double> y(batch * out_plane);
    std::vector<double> columns(w.rows() * w.cols());
    ConstMatrixMap W(weight.values().data(), out_ch, w.rows());
    for (std::size_t n = 0; n < batch; ++n) {
        im2col(w, x.values().data() + n * in_plane, columns.data());
        MatrixMap Y(y.data() + n * out_plane, out_ch, w.cols());
        Y.noalias() = W * ConstMatrixMap(columns.data(), w.rows(), w.cols());
        if (bias.defined()) Y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.values().data(), out_ch);
    }

    return g.record(kind, operands(x, weight, bias), {batch, out_ch, w.out_h, w.out_w}, std::move(y),
                    [x, weight, w, batch, out_ch, in_plane, out_plane](const BackwardContext& ctx) {
                        std::vector<double> columns(w.rows() * w.cols());
                        ConstMatrixMap W(weight.values().data(), out_ch, w.rows());
                        for (std::size_t n = 0; n < batch; ++n) {
                            ConstMatrixMap dY(ctx.out_grad.data() + n * out_plane, out_ch, w.cols());
                            if (ctx.wants(1)) {
                                im2col(w, x.values().data() + n * in_plane, columns.data());
                                MatrixMap dW(ctx.in_grads[1].data(), out_ch, w.rows());
                                dW.noalias() += dY * ConstMatrixMap(columns.data(), w.rows(), w.cols()).transpose();
                            }
                            if (ctx.in_grads.size() > 2 && ctx.wants(2)) {
                                Eigen::Map<Eigen::VectorXd> db(ctx.in_grads[2].data(), out_ch);
                                db += dY.rowwise().sum();
                            }
                            if (ctx.wants(0)) {
                                MatrixMap C(columns.data(), w.rows(), w.cols());
                                C.noalias() = W.transpose() * dY;
                                col2im(w, columns.data(), ctx.in_grads[0].data() + n * in_plane);
                            }
                        }
                    });
}

Tensor conv2d_transpose(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias,
                        Conv2dAttrs attrs) {
    constexpr OpKind kind = OpKind::conv2d_transpose;
    check_conv_inputs(kind, x, weight, attrs);
    if (weight.dim(0) != x.dim(1)) {
        shape_fail(kind, "input " + shape_string(x.shape()) + " has " + std::to_string(x.dim(1)) +
                             " channels but kernel " + shape_string(weight.shape()) + " expects " +
                             std::to_string(weight.dim(0)));
    }
    const std::size_t batch = x.dim(0), in_ch = x.dim(1), in_h = x.dim(2), in_w = x.dim(3);
    const std::size_t out_ch = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    const std::size_t full_h = (in_h - 1) * attrs.stride + kh;
    const std::size_t full_w = (in_w - 1) * attrs.stride + kw;
    if (full_h <= 2 * attrs.padding || full_w <= 2 * attrs.padding) {
        shape_fail(kind, "padding " + std::to_string(attrs.padding) + " consumes the whole output for input " +
                             shape_string(x.shape()) + " and kernel " + shape_string(weight.shape()));
    }
    check_bias(kind, bias, out_ch, weight);

    // The output image is the "input" of the equivalent forward convolution,
    // whose sliding window lands exactly on the (in_h, in_w) grid.
    Window w{out_ch, full_h - 2 * attrs.padding, full_w - 2 * attrs.padding, kh, kw, attrs.stride, attrs.padding,
             in_h, in_w};
    const std::size_t in_plane = in_ch * w.cols();
    const std::size_t out_plane = out_ch * w.height * w.width;
    std::vector<double> y(batch * out_plane, 0.0);
    std::vector<double> columns(w.rows() * w.cols());
    ConstMatrixMap W(weight.values().data(), in_ch, w.rows());
    for (std::size_t n = 0; n < batch; ++n) {
        MatrixMap C(columns.data(), w.rows(), w.cols());
        C.noalias() = W.transpose() * ConstMatrixMap(x.values().data() + n * in_plane, in_ch, w.cols());
        double* image = y.data() + n * out_plane;
        col2im(w, columns.data(), image);
        if (bias.defined()) {
            auto b = bias.values();
            const std::size_t plane = w.height * w.width;
            for (std::size_t c = 0; c < out_ch; ++c) {
                for (std::size_t i = 0; i < plane; ++i) image[c * plane + i] += b[c];
            }
        }
    }

    return g.record(kind, operands(x, weight, bias), {batch, out_ch, w.height, w.width}, std::move(y),
                    [x, weight, w, batch, in_ch, in_plane, out_plane](const BackwardContext& ctx) {
                        std::vector<double> columns(w.rows() * w.cols());
                        ConstMatrixMap W(weight.values().data(), in_ch, w.rows());
                        const std::size_t plane = w.height * w.width;
                        for (std::size_t n = 0; n < batch; ++n) {
                            const double* dy = ctx.out_grad.data() + n * out_plane;
                            im2col(w, dy, columns.data());
                            ConstMatrixMap C(columns.data(), w.rows(), w.cols());
                            if (ctx.wants(0)) {
                                MatrixMap dX(ctx.in_grads[0].data() + n * in_plane, in_ch, w.cols());
                                dX.noalias() += W * C;
                            }
                            if (ctx.wants(1)) {
                                MatrixMap dW(ctx.in_grads[1].data(), in_ch, w.rows());
                                dW.noalias() +=
                                    ConstMatrixMap(x.values().data() + n * in_plane, in_ch, w.cols()) * C.transpose();
                            }
                            if (ctx.in_grads.size() > 2 && ctx.wants(2)) {
                                auto db = ctx.in_grads[2];
                                for (std::size_t c = 0; c < w.channels; ++c) {
                                    double acc = 0.0;
                                    for (std::size_t i = 0; i < plane; ++i) acc += dy[c * plane + i];
                                    db[c] += acc;
                                }
                            }
                        }
                    });
}

}  // namespace trigan::ops
