#include "trigan/autodiff/graph.hpp"

#include <algorithm>

namespace trigan {

std::string_view op_name(OpKind kind) noexcept {
    switch (kind) {
        case OpKind::linear: return "linear";
        case OpKind::conv2d: return "conv2d";
        case OpKind::conv2d_transpose: return "conv2d_transpose";
        case OpKind::batchnorm2d: return "batchnorm2d";
        case OpKind::leaky_relu: return "leaky_relu";
        case OpKind::relu: return "relu";
        case OpKind::tanh: return "tanh";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::softmax: return "softmax";
        case OpKind::log_softmax: return "log_softmax";
        case OpKind::log: return "log";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::affine: return "affine";
        case OpKind::mean: return "mean";
        case OpKind::sum: return "sum";
        case OpKind::mean_rows: return "mean_rows";
        case OpKind::gather: return "gather";
        case OpKind::reshape: return "reshape";
        case OpKind::concat: return "concat";
    }
    return "unknown";
}

Tensor Graph::record(OpKind kind, std::vector<Tensor> inputs, Shape out_shape,
                     std::vector<double> out_values, BackwardFn backward) {
    const bool needs_grad =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    Tensor out = Tensor::from(std::move(out_shape), std::move(out_values), false);
    out.impl().leaf = false;
    out.impl().requires_grad = needs_grad;
    nodes_.push_back(Node{kind, std::move(inputs), out, std::move(backward)});
    return out;
}

void Graph::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    }
    last_visited_ = 0;
    if (!loss.requires_grad()) return;

    if (loss.is_leaf()) {
        loss.impl().grad[0] += 1.0;
        return;
    }

    for (Node& node : nodes_) {
        Tensor::Impl& out = node.output.impl();
        out.reached = false;
        if (out.requires_grad) out.grad.assign(out.values.size(), 0.0);
    }
    Tensor::Impl& root = loss.impl();
    root.reached = true;
    root.grad[0] = 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node& node = *it;
        Tensor::Impl& out = node.output.impl();
        if (!out.reached) continue;

        BackwardContext ctx;
        ctx.out_grad = out.grad;
        ctx.in_grads.reserve(node.inputs.size());
        for (Tensor& input : node.inputs) {
            Tensor::Impl& in = input.impl();
            if (!in.requires_grad) {
                ctx.in_grads.emplace_back();
                continue;
            }
            if (in.grad.size() != in.values.size()) in.grad.assign(in.values.size(), 0.0);
            if (!in.leaf) in.reached = true;
            ctx.in_grads.emplace_back(in.grad);
        }
        node.backward(ctx);
        ++last_visited_;
    }
}

}  // namespace trigan
