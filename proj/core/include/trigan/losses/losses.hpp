#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "trigan/autodiff/graph.hpp"

namespace trigan {

/// tau: pseudo-label confidence threshold; alpha: weight of the KL
/// consistency term; lambda: weight of the pseudo-label term in both the
/// classifier and the generator objectives.
struct LossWeights {
    double tau = 0.9;
    double alpha = 0.3;
    double lambda = 0.01;

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Which batch-mean distribution plays P in D_KL(P || Q).
enum class KlDirection { real_to_fake, fake_to_real };

std::string_view kl_direction_name(KlDirection d) noexcept;
KlDirection parse_kl_direction(std::string_view text);

/// Scalar record of every loss component for one training step.
struct LossReport {
    double l_s = 0.0;
    double l_u = 0.0;
    double l_kl = 0.0;
    double l_c_total = 0.0;
    double l_d_real = 0.0;
    double l_d_fake = 0.0;
    double l_gen_adv = 0.0;
    double l_cu = 0.0;
    double l_g_total = 0.0;
    double accepted_fraction = 0.0;
};

/// Mean cross-entropy of (B, C) logits against integer labels, through the
/// log-sum-exp form. Labels outside [0, C) are rejected.
Tensor supervised_loss(Graph& g, const Tensor& logits, std::span<const int> labels);

struct PseudoLabelLoss {
    Tensor loss;
    double accepted_fraction = 0.0;
};

/// Self-training loss on generated-sample logits. A sample contributes
/// -log p[argmax p] when max p > tau (strict); the label is a constant. The
/// sum is divided by the full batch size. With nothing accepted the loss is a
/// constant zero.
PseudoLabelLoss pseudo_label_loss(Graph& g, const Tensor& logits_g, double tau);

/// D_KL(P || Q) between the batch-mean softmax distributions of the real and
/// generated logits (P = real for real_to_fake). Gradients reach both inputs.
Tensor kl_consistency_loss(Graph& g, const Tensor& logits_real, const Tensor& logits_g,
                           KlDirection direction = KlDirection::real_to_fake);

struct Objective {
    Tensor loss;
    LossReport report;
};

/// Toggles for the optional terms; the baselines switch some of them off.
struct ObjectiveTerms {
    bool pseudo_label = true;
    bool kl = true;
};

/// L_c = L_s + lambda * L_u + alpha * L_kl. Terms whose weight is exactly zero
/// (or that are disabled) are reported but kept out of the differentiated
/// total, so zero weights reproduce L_s bit for bit.
Objective classifier_objective(Graph& g, const Tensor& logits, std::span<const int> labels, const Tensor& logits_g,
                               const LossWeights& weights, KlDirection direction = KlDirection::real_to_fake,
                               ObjectiveTerms terms = {});

struct DiscriminatorLoss {
    Tensor loss;
    double real_term = 0.0;
    double fake_term = 0.0;
};

/// mean(-ln d_real) + mean(-ln(1 - d_fake)), probabilities clamped at 1e-12.
DiscriminatorLoss discriminator_loss(Graph& g, const Tensor& d_real, const Tensor& d_fake);

/// L_g = mean(-ln d_fake) + lambda * L_cu, with L_cu the pseudo-label loss of
/// the (frozen) classifier on the generated batch. Pass an undefined
/// `logits_g` to drop the classifier term entirely (l_cu reported as 0).
Objective generator_objective(Graph& g, const Tensor& d_fake, const Tensor& logits_g, const LossWeights& weights);

}  // namespace trigan
