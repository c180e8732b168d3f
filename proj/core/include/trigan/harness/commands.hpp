#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "trigan/training/experiment.hpp"
#include "trigan/training/run.hpp"

namespace trigan {

/// Library version plus the git revision when it was known at build time.
std::string tool_version();

/// Output folder of a command: config.out_dir / config_hash(config, command).
std::filesystem::path command_dir(const ExperimentConfig& config, std::string_view command);

/// Writes run.json: hash, version, accuracies, wall time and the epoch rows.
void write_run_record(const std::filesystem::path& path, const ExperimentConfig& config, const std::string& hash,
                      const RunResult& result);

struct GenerateOptions {
    std::filesystem::path checkpoint;
    std::size_t count = 64;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "runs";
};

struct EvalOptions {
    std::filesystem::path checkpoint;
    /// Data source fields (data_dir/val_dir or synthetic n_val, seed,
    /// image_size) and out_dir are read from here.
    ExperimentConfig data;
};

/// Each command returns a process exit status; diagnostics go to `err` and
/// short reports to `out`. Invalid configurations are rejected before any
/// work is done.
int cmd_train(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

}  // namespace trigan
