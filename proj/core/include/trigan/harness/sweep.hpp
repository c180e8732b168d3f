#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trigan/training/experiment.hpp"

namespace trigan {

/// One trainer x weights x size x repeat combination.
struct SweepCell {
    TrainerKind trainer = TrainerKind::tri_gan;
    LossWeights weights;
    std::size_t size = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;

    /// Directory name below the sweep's cells/ folder.
    std::string name() const;
};

struct CellResult {
    SweepCell cell;
    bool ok = false;
    double final_acc = 0.0;
    double best_acc = 0.0;
    std::string error;
};

/// Statistics over the successful repeats of one trainer x weights x size.
struct AggregateRow {
    TrainerKind trainer = TrainerKind::tri_gan;
    LossWeights weights;
    std::size_t size = 0;
    std::size_t n = 0;
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator); 0 for a single repeat.
    double std = 0.0;
    double median = 0.0;
    double best_mean = 0.0;
};

/// Trainer-major, then weights, then size, then repeat. Repeat k uses seed
/// config.seed + k.
std::vector<SweepCell> sweep_grid(const ExperimentConfig& config);

/// Groups in first-appearance order; failed cells are left out of the
/// statistics but a group with no success still appears with n = 0.
std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results);

std::string format_summary_csv(const std::vector<CellResult>& results);
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows);
/// Markdown table with trainers as rows and sizes as columns, cells
/// "mean ± std" in percent; one table per weight setting.
std::string format_table(const std::vector<AggregateRow>& rows);

/// Parses summary.csv back (used to recheck the aggregate).
std::vector<CellResult> parse_summary_csv(std::string_view text);

struct SweepOutcome {
    std::filesystem::path dir;
    std::vector<CellResult> results;
    std::vector<AggregateRow> rows;
    std::size_t failures = 0;
};

/// Runs every cell (up to config.jobs concurrently) with outputs under
/// `sweep_dir`/cells/<cell>/, then writes summary.csv, aggregate.csv and
/// table.md into `sweep_dir`. A failing cell is recorded and the rest go on.
/// Progress lines go to `log` when given.
SweepOutcome run_sweep(const ExperimentConfig& config, const std::filesystem::path& sweep_dir,
                       std::ostream* log = nullptr);

}  // namespace trigan
