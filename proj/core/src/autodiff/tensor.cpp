#include "trigan/autodiff/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace trigan {

std::size_t shape_numel(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ')';
    return out.str();
}

Tensor::Impl& Tensor::impl() const {
    if (!impl_) throw std::logic_error("use of an undefined Tensor");
    return *impl_;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    for (std::size_t extent : shape) {
        if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("shape " + shape_string(shape) + " does not match buffer of length " +
                         std::to_string(values.size()));
    }
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    Tensor t(std::move(impl));
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return impl().values.size(); }

std::span<double> Tensor::values() { return impl().values; }
std::span<const double> Tensor::values() const { return impl().values; }

double Tensor::item() const {
    const auto& v = impl().values;
    if (v.size() != 1) throw ShapeError("item() on non-scalar tensor of shape " + shape_string(shape()));
    return v[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

void Tensor::set_requires_grad(bool flag) {
    Impl& i = impl();
    i.requires_grad = flag;
    if (flag) {
        i.grad.assign(i.values.size(), 0.0);
    } else {
        i.grad.clear();
        i.grad.shrink_to_fit();
    }
}

bool Tensor::has_grad() const { return !impl().grad.empty(); }
std::span<const double> Tensor::grad() const { return impl().grad; }
std::span<double> Tensor::mutable_grad() { return impl().grad; }

void Tensor::zero_grad() {
    auto& g = impl().grad;
    std::fill(g.begin(), g.end(), 0.0);
}

bool Tensor::is_leaf() const { return impl().leaf; }

Tensor Tensor::detached() const { return from(shape(), impl().values, false); }

Tensor Tensor::clone() const {
    Tensor t = from(shape(), impl().values, requires_grad());
    if (requires_grad()) t.impl().grad = impl().grad;
    return t;
}

}  // namespace trigan
