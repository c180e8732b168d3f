#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trigan/autodiff/adam.hpp"
#include "trigan/common/random.hpp"
#include "trigan/data/dataset.hpp"
#include "trigan/losses/losses.hpp"
#include "trigan/nets/network.hpp"

namespace trigan {

/// The four compared procedures: supervised-only classifier, the shared
/// (C+1)-way discriminator/classifier, EC-GAN and the three-network GAN.
enum class TrainerKind { vanilla, multitask_d, ecgan, tri_gan };

/// CLI spellings: vanilla, multitask, ecgan, 3ngan.
std::string_view trainer_name(TrainerKind kind) noexcept;
/// Row label used in the aggregate table.
std::string_view trainer_title(TrainerKind kind) noexcept;
TrainerKind parse_trainer(std::string_view text);
bool uses_generator(TrainerKind kind) noexcept;

enum class Update { discriminator, generator, classifier };
using UpdateOrder = std::array<Update, 3>;

inline constexpr UpdateOrder kDefaultUpdateOrder{Update::discriminator, Update::generator, Update::classifier};

/// "DGC" style permutation strings.
UpdateOrder parse_update_order(std::string_view text);
std::string update_order_string(const UpdateOrder& order);

/// A network together with its optimizer state.
struct Player {
    Network net;
    AdamState optimizer;
};

struct StepOptions {
    KlDirection kl_direction = KlDirection::real_to_fake;
    UpdateOrder order = kDefaultUpdateOrder;
    /// Called right after each of the three updates; lets callers inspect
    /// intermediate parameter states.
    std::function<void(Update)> after_update;
};

struct StepMetrics {
    LossReport losses;
    /// Argmax accuracy of the classifier on the real minibatch, measured on
    /// the forward pass used for its update.
    double train_accuracy = 0.0;
    double d_real_mean = 0.0;
    double d_fake_mean = 0.0;
};

/// A loss or gradient went non-finite; `component()` names the culprit.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(std::string component, const std::string& detail)
        : std::runtime_error(component + ": " + detail), component_(std::move(component)) {}
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// (B, latent_dim) standard-normal draws.
Tensor sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng);

/// One simultaneous step of generator, discriminator and classifier.
///
/// A single fake batch (same size as `real`) is drawn first. Then, in
/// `options.order` (default D, G, C):
///   D: discriminator loss on D(real) and D(fake) with fake as a constant.
///   G: generator objective on D(fake) and C(fake) with D and C frozen; the
///      classifier runs on batch statistics without touching its buffers.
///   C: classifier objective on C(real) and C(fake) with fake as a constant.
/// Every network receives exactly one Adam step.
StepMetrics tri_gan_step(const LabeledBatch& real, Player& generator, Player& discriminator, Player& classifier,
                         const LossWeights& weights, const StepOptions& options, Rng& latent_rng);

/// tri_gan_step without the classifier term in the generator update and
/// without the KL term in the classifier update (l_cu and l_kl report 0).
StepMetrics ecgan_step(const LabeledBatch& real, Player& generator, Player& discriminator, Player& classifier,
                       const LossWeights& weights, const StepOptions& options, Rng& latent_rng);

/// Supervised cross-entropy update of the classifier alone.
StepMetrics vanilla_step(const LabeledBatch& real, Player& classifier);

/// Shared network with num_classes + 1 outputs, the last being "fake". Real
/// samples are pushed toward their label and fakes toward the fake class; the
/// generator then minimizes -ln(1 - p_fake) of its samples.
StepMetrics multitask_step(const LabeledBatch& real, Player& generator, Player& shared, Rng& latent_rng);

/// Argmax accuracy over the first `class_count` logits (0 means all of the
/// dataset's classes), in evaluation mode.
double evaluate(Network& classifier, const Dataset& ds, std::size_t class_count = 0, std::size_t batch_size = 100);

}  // namespace trigan
