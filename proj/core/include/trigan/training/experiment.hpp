#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "trigan/autodiff/adam.hpp"
#include "trigan/losses/losses.hpp"
#include "trigan/training/trainers.hpp"

namespace trigan {

/// Everything that determines a run or a sweep. Defaults reproduce the
/// reference protocol; see README for the field reference.
struct ExperimentConfig {
    TrainerKind trainer = TrainerKind::tri_gan;
    LossWeights weights;
    AdamOptions optimizer;
    KlDirection kl_direction = KlDirection::real_to_fake;
    UpdateOrder update_order = kDefaultUpdateOrder;

    std::size_t image_size = 64;
    std::size_t latent_dim = 100;
    std::size_t base_width = 64;
    std::size_t epochs = 100;
    std::size_t batch_size = 10;
    std::size_t n_train = 200;
    std::uint64_t seed = 0;

    /// Labelled image root. Either holds train/ and test/ (or val/) splits,
    /// each with one subdirectory per class, or is itself the training pool
    /// when `val_dir` is given. Absent: the synthetic generator is used.
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> val_dir;
    /// Validation size for synthetic data.
    std::size_t n_val = 400;

    /// Write a generator sample grid every this many epochs (0: final only).
    std::size_t sample_every = 10;
    /// Fill the wall_ms metrics column. Off by default so outputs stay
    /// byte-for-byte reproducible.
    bool record_wall_time = false;

    // Sweep grid.
    std::vector<TrainerKind> trainers = {TrainerKind::vanilla, TrainerKind::multitask_d, TrainerKind::ecgan,
                                         TrainerKind::tri_gan};
    std::vector<std::size_t> train_sizes = {200, 500, 750, 1000, 2000};
    std::size_t repeats = 5;
    /// Optional weight grids; an empty list sweeps only the value in `weights`.
    std::vector<double> tau_grid, alpha_grid, lambda_grid;
    std::size_t jobs = 1;

    /// Parent directory of per-run output folders.
    std::filesystem::path out_dir = "runs";

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

}  // namespace trigan
