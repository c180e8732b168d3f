#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "trigan/autodiff/tensor.hpp"

namespace trigan {

enum class OpKind {
    linear,
    conv2d,
    conv2d_transpose,
    batchnorm2d,
    leaky_relu,
    relu,
    tanh,
    sigmoid,
    softmax,
    log_softmax,
    log,
    add,
    sub,
    mul,
    affine,
    mean,
    sum,
    mean_rows,
    gather,
    reshape,
    concat,
};

std::string_view op_name(OpKind kind) noexcept;

/// What a backward rule sees: the gradient flowing into the node's output and
/// one accumulation target per input. A target is empty when that input does
/// not need a gradient; rules must add into targets, never assign.
struct BackwardContext {
    std::span<const double> out_grad;
    std::vector<std::span<double>> in_grads;

    bool wants(std::size_t input) const { return !in_grads[input].empty(); }
};

using BackwardFn = std::function<void(const BackwardContext&)>;

/// Append-only tape of recorded operations. Inputs always precede the node
/// that consumes them, so reverse insertion order is a valid topological
/// order for the backward sweep.
class Graph {
public:
    struct Node {
        OpKind kind;
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    /// Creates the output tensor of a new node. The output requires a
    /// gradient iff any input does.
    Tensor record(OpKind kind, std::vector<Tensor> inputs, Shape out_shape,
                  std::vector<double> out_values, BackwardFn backward);

    /// Reverse sweep from a scalar loss. Leaves reachable from `loss` receive
    /// d loss / d leaf added onto their existing gradient; unreached nodes are
    /// skipped entirely.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    const Node& node(std::size_t index) const { return nodes_.at(index); }

    /// Number of nodes whose backward rule ran in the last backward().
    std::size_t last_visited() const noexcept { return last_visited_; }

private:
    std::vector<Node> nodes_;
    std::size_t last_visited_ = 0;
};

}  // namespace trigan
