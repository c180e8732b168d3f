#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trigan/autodiff/tensor.hpp"

namespace trigan {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct AdamOptions {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Raised before any parameter is touched when a gradient holds NaN or Inf.
class NonFiniteGradient : public std::runtime_error {
public:
    NonFiniteGradient(const std::string& parameter)
        : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"), parameter_(parameter) {}
    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

/// Moment buffers are created on the first step, one per parameter, in the
/// order the parameters are passed; later steps must pass the same list.
struct AdamState {
    AdamOptions options;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update over `params` using their accumulated
/// gradients. Throws NonFiniteGradient (state and parameters unchanged) or
/// ShapeError when the list disagrees with the state's buffers.
void adam_step(std::span<const NamedTensor> params, AdamState& state);

}  // namespace trigan
