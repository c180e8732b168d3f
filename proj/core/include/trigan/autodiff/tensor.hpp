#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trigan {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Thrown when an operation receives operands whose shapes do not fit it.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major float64 tensor handle.
///
/// Copies of a Tensor share storage, the same way parameter handles behave in
/// any tensor framework: a Network and its optimizer refer to the same
/// buffers. Use `clone()` for an independent deep copy or `detached()` for a
/// fresh constant leaf.
///
/// A tensor with requires_grad() owns a gradient buffer of identical shape.
/// Leaves accumulate into it across backward passes until `zero_grad()`;
/// tensors produced by graph operations are re-zeroed at the start of every
/// backward pass.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<double> values();
    std::span<const double> values() const;
    double item() const;
    double at(std::size_t flat_index) const { return values()[flat_index]; }

    bool requires_grad() const;
    /// Enabling allocates a zeroed gradient; disabling discards it.
    void set_requires_grad(bool flag);
    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    /// True for tensors not produced by a recorded operation.
    bool is_leaf() const;

    Tensor detached() const;
    Tensor clone() const;

    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
        bool leaf = true;
        bool reached = false;
    };

    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    Impl& impl() const;

    std::shared_ptr<Impl> impl_;

    friend class Graph;
};

}  // namespace trigan
