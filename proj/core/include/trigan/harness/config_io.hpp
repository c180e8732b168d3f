#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "trigan/training/experiment.hpp"

namespace trigan {

/// Flat JSON object mirroring ExperimentConfig field names. Keys are sorted
/// and numbers printed in shortest round-trip form.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// Applies the keys present in `text` on top of `base`. Unknown keys, wrong
/// types and out-of-range values are rejected with std::invalid_argument.
ExperimentConfig apply_config_json(std::string_view text, ExperimentConfig base);
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base);

/// "runs", or $TRIGAN_OUT when set and non-empty.
std::filesystem::path default_out_root();

/// Defaults with out_dir taken from default_out_root().
ExperimentConfig default_config();

/// 16 hex digits of FNV-1a over `command` and the canonical JSON of the
/// configuration, leaving out fields that do not affect results (out_dir,
/// jobs) and, for "train" and "sweep", the fields the other command alone
/// reads. Identical configurations always hash identically.
std::string config_hash(const ExperimentConfig& config, std::string_view command);

/// Hash of an arbitrary canonical string, same format as config_hash.
std::string hash_string(std::string_view text);

}  // namespace trigan
