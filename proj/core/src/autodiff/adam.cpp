#include "trigan/autodiff/adam.hpp"

#include <cmath>

namespace trigan {

void adam_step(std::span<const NamedTensor> params, AdamState& state) {
    if (state.step == 0 && state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.tensor.numel(), 0.0);
            state.second_moment.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, step received " + std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Tensor& t = params[k].tensor;
        if (state.first_moment[k].size() != t.numel()) {
            throw ShapeError("adam: moment buffer for '" + params[k].name + "' does not match shape " +
                             shape_string(t.shape()));
        }
        if (!t.has_grad()) continue;
        for (double g : t.grad()) {
            if (!std::isfinite(g)) throw NonFiniteGradient(params[k].name);
        }
    }

    ++state.step;
    const AdamOptions& o = state.options;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor param = params[k].tensor;
        if (!param.has_grad()) continue;
        auto values = param.values();
        auto grad = param.grad();
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * grad[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            values[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

}  // namespace trigan
