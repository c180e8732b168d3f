#pragma once

#include <cstddef>
#include <vector>

#include "trigan/autodiff/tensor.hpp"

namespace trigan::testing {

/// Direct loop references. x is NCHW, conv weight OIHW, transposed weight
/// (Cin, Cout, kH, kW); bias may be undefined.
std::vector<double> naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
                                 std::size_t padding, Shape& out_shape);
std::vector<double> naive_conv2d_transpose(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
                                           std::size_t padding, Shape& out_shape);

}  // namespace trigan::testing
