#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trigan/data/dataset.hpp"
#include "trigan/training/experiment.hpp"

namespace trigan {

/// Train and validation splits for one run.
struct RunData {
    Dataset train;
    Dataset val;
};

/// Full training pool and validation set of a directory source, before
/// subsampling. Requires config.data_dir.
struct DirectorySplits {
    Dataset pool;
    Dataset val;
};
DirectorySplits load_directory_splits(const ExperimentConfig& config);

/// Builds the splits the configuration describes: a balanced subsample of
/// n_train from the directory pool, or synthetic data of that size.
RunData load_run_data(const ExperimentConfig& config);

/// One metrics.csv row. Unset optionals are written as empty cells.
struct MetricsRow {
    std::size_t epoch = 0;
    std::string split;  // "train" or "val"
    std::optional<double> l_s, l_u, l_kl, l_c_total, l_d_real, l_d_fake, l_gen_adv, l_cu, l_g_total;
    std::optional<double> accuracy, accepted_fraction, d_real_mean, d_fake_mean, wall_ms;
};

/// Header line of metrics.csv (no trailing newline).
std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

struct RunResult {
    double initial_accuracy = 0.0;
    double final_accuracy = 0.0;
    double best_accuracy = 0.0;
    std::size_t best_epoch = 0;
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    std::vector<MetricsRow> rows;
};

/// Trains one classifier according to `config`, writing into `run_dir`:
///   metrics.csv             one train and one val row per epoch
///   samples/epoch_NNNN.pgm  8x8 generator grids every sample_every epochs
///   samples/final.pgm
///   classifier.ckpt (+ generator.ckpt, discriminator.ckpt when present)
/// Throws TrainingAborted on non-finite losses or gradients.
RunResult train_run(const ExperimentConfig& config, const RunData& data, const std::filesystem::path& run_dir);
RunResult train_run(const ExperimentConfig& config, const std::filesystem::path& run_dir);

}  // namespace trigan
