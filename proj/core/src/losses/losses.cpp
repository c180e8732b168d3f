#include "trigan/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "trigan/autodiff/ops.hpp"

namespace trigan {

void LossWeights::validate() const {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1], got " + std::to_string(tau));
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be finite and >= 0, got " + std::to_string(alpha));
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and >= 0, got " + std::to_string(lambda));
    }
}

std::string_view kl_direction_name(KlDirection d) noexcept {
    return d == KlDirection::real_to_fake ? "real-to-fake" : "fake-to-real";
}

KlDirection parse_kl_direction(std::string_view text) {
    if (text == "real-to-fake") return KlDirection::real_to_fake;
    if (text == "fake-to-real") return KlDirection::fake_to_real;
    throw std::invalid_argument("kl_direction must be real-to-fake or fake-to-real, got '" + std::string(text) + "'");
}

Tensor supervised_loss(Graph& g, const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("supervised_loss: logits must be (B, C), got " + shape_string(logits.shape()));
    const std::size_t rows = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != rows) {
        throw ShapeError("supervised_loss: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_string(logits.shape()));
    }
    std::vector<std::size_t> targets(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            throw std::invalid_argument("supervised_loss: label " + std::to_string(labels[i]) + " outside [0, " +
                                        std::to_string(classes) + ")");
        }
        targets[i] = static_cast<std::size_t>(labels[i]);
    }
    const Tensor picked = ops::gather(g, ops::log_softmax(g, logits), targets);
    return ops::scale(g, ops::mean(g, picked), -1.0);
}

PseudoLabelLoss pseudo_label_loss(Graph& g, const Tensor& logits_g, double tau) {
    if (logits_g.rank() != 2) {
        throw ShapeError("pseudo_label_loss: logits must be (B, C), got " + shape_string(logits_g.shape()));
    }
    const std::size_t rows = logits_g.dim(0), classes = logits_g.dim(1);
    auto v = logits_g.values();

    // Confidence and argmax are read off the values only; nothing here is
    // differentiated.
    std::vector<std::size_t> pseudo(rows);
    std::vector<double> mask(rows, 0.0);
    std::size_t accepted = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = v.data() + r * classes;
        const auto best = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - row[best]);
        const double confidence = 1.0 / total;
        pseudo[r] = best;
        if (confidence > tau) {
            mask[r] = 1.0;
            ++accepted;
        }
    }

    PseudoLabelLoss result;
    result.accepted_fraction = static_cast<double>(accepted) / static_cast<double>(rows);
    if (accepted == 0) {
        result.loss = Tensor::scalar(0.0);
        return result;
    }
    const Tensor picked = ops::gather(g, ops::log_softmax(g, logits_g), pseudo);
    const Tensor kept = ops::mul(g, picked, Tensor::from({rows}, std::move(mask)));
    result.loss = ops::scale(g, ops::sum(g, kept), -1.0 / static_cast<double>(rows));
    return result;
}

Tensor kl_consistency_loss(Graph& g, const Tensor& logits_real, const Tensor& logits_g, KlDirection direction) {
    if (logits_real.rank() != 2 || logits_g.rank() != 2 || logits_real.dim(1) != logits_g.dim(1)) {
        throw ShapeError("kl_consistency_loss: logits " + shape_string(logits_real.shape()) + " and " +
                         shape_string(logits_g.shape()) + " must share the class axis");
    }
    Tensor p = ops::mean_rows(g, ops::softmax(g, logits_real));
    Tensor q = ops::mean_rows(g, ops::softmax(g, logits_g));
    if (direction == KlDirection::fake_to_real) std::swap(p, q);
    const Tensor log_ratio = ops::sub(g, ops::log(g, p), ops::log(g, q));
    return ops::sum(g, ops::mul(g, p, log_ratio));
}

Objective classifier_objective(Graph& g, const Tensor& logits, std::span<const int> labels, const Tensor& logits_g,
                               const LossWeights& weights, KlDirection direction, ObjectiveTerms terms) {
    weights.validate();
    Objective out;
    Tensor total = supervised_loss(g, logits, labels);
    out.report.l_s = total.item();

    if (logits_g.defined() && terms.pseudo_label) {
        PseudoLabelLoss pl = pseudo_label_loss(g, logits_g, weights.tau);
        out.report.l_u = pl.loss.item();
        out.report.accepted_fraction = pl.accepted_fraction;
        if (weights.lambda != 0.0) total = ops::add(g, total, ops::scale(g, pl.loss, weights.lambda));
    }
    if (logits_g.defined() && terms.kl) {
        const Tensor kl = kl_consistency_loss(g, logits, logits_g, direction);
        out.report.l_kl = kl.item();
        if (weights.alpha != 0.0) total = ops::add(g, total, ops::scale(g, kl, weights.alpha));
    }
    out.report.l_c_total = total.item();
    out.loss = total;
    return out;
}

DiscriminatorLoss discriminator_loss(Graph& g, const Tensor& d_real, const Tensor& d_fake) {
    DiscriminatorLoss out;
    const Tensor real_term = ops::scale(g, ops::mean(g, ops::log(g, d_real)), -1.0);
    const Tensor not_fake = ops::affine(g, d_fake, -1.0, 1.0);
    const Tensor fake_term = ops::scale(g, ops::mean(g, ops::log(g, not_fake)), -1.0);
    out.real_term = real_term.item();
    out.fake_term = fake_term.item();
    out.loss = ops::add(g, real_term, fake_term);
    return out;
}

Objective generator_objective(Graph& g, const Tensor& d_fake, const Tensor& logits_g, const LossWeights& weights) {
    weights.validate();
    Objective out;
    Tensor total = ops::scale(g, ops::mean(g, ops::log(g, d_fake)), -1.0);
    out.report.l_gen_adv = total.item();
    if (logits_g.defined()) {
        PseudoLabelLoss pl = pseudo_label_loss(g, logits_g, weights.tau);
        out.report.l_cu = pl.loss.item();
        out.report.accepted_fraction = pl.accepted_fraction;
        if (weights.lambda != 0.0) total = ops::add(g, total, ops::scale(g, pl.loss, weights.lambda));
    }
    out.report.l_g_total = total.item();
    out.loss = total;
    return out;
}

}  // namespace trigan
