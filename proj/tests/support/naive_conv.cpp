#include "naive_conv.hpp"

namespace trigan::testing {

std::vector<double> naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
                                 std::size_t padding, Shape& out_shape) {
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const std::size_t oh = (h + 2 * padding - kh) / stride + 1, ow = (wd + 2 * padding - kw) / stride + 1;
    out_shape = {n, cout, oh, ow};
    std::vector<double> y(n * cout * oh * ow, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = bias.defined() ? bias.at(o) : 0.0;
                    for (std::size_t c = 0; c < cin; ++c)
                        for (std::size_t p = 0; p < kh; ++p)
                            for (std::size_t q = 0; q < kw; ++q) {
                                const auto yy = static_cast<long>(i * stride + p) - static_cast<long>(padding);
                                const auto xx = static_cast<long>(j * stride + q) - static_cast<long>(padding);
                                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd))
                                    continue;
                                acc += x.at(((b * cin + c) * h + static_cast<std::size_t>(yy)) * wd +
                                            static_cast<std::size_t>(xx)) *
                                       w.at(((o * cin + c) * kh + p) * kw + q);
                            }
                    y[((b * cout + o) * oh + i) * ow + j] = acc;
                }
    return y;
}

std::vector<double> naive_conv2d_transpose(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
                                           std::size_t padding, Shape& out_shape) {
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const std::size_t oh = (h - 1) * stride + kh - 2 * padding, ow = (wd - 1) * stride + kw - 2 * padding;
    out_shape = {n, cout, oh, ow};
    std::vector<double> y(n * cout * oh * ow, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < wd; ++j) {
                    const double xv = x.at(((b * cin + c) * h + i) * wd + j);
                    for (std::size_t o = 0; o < cout; ++o)
                        for (std::size_t p = 0; p < kh; ++p)
                            for (std::size_t q = 0; q < kw; ++q) {
                                const auto yy = static_cast<long>(i * stride + p) - static_cast<long>(padding);
                                const auto xx = static_cast<long>(j * stride + q) - static_cast<long>(padding);
                                if (yy < 0 || xx < 0 || yy >= static_cast<long>(oh) || xx >= static_cast<long>(ow))
                                    continue;
                                y[((b * cout + o) * oh + static_cast<std::size_t>(yy)) * ow +
                                  static_cast<std::size_t>(xx)] += xv * w.at(((c * cout + o) * kh + p) * kw + q);
                            }
                }
    if (bias.defined()) {
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t o = 0; o < cout; ++o)
                for (std::size_t k = 0; k < oh * ow; ++k) y[(b * cout + o) * oh * ow + k] += bias.at(o);
    }
    return y;
}

}  // namespace trigan::testing
