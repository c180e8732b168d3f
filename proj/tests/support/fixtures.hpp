#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trigan/data/dataset.hpp"
#include "trigan/nets/network.hpp"
#include "trigan/training/experiment.hpp"
#include "trigan/training/trainers.hpp"

namespace trigan::testing {

/// 32x32, latent 8, width 8: big enough for every layer type, cheap to step.
NetworkSpec tiny_spec(Role role, std::size_t num_classes = 2);

Player make_player(const NetworkSpec& spec, std::uint64_t seed);

/// Deep copy of parameters, buffers and optimizer moments.
Player clone_player(const Player& src);

/// Every parameter followed by every buffer, flattened per tensor.
using Snapshot = std::vector<std::vector<double>>;
Snapshot snapshot(const Network& net);
/// Parameters only.
Snapshot parameter_snapshot(const Network& net);

/// Balanced synthetic batch of `size` samples (size must be even).
LabeledBatch synthetic_batch(std::size_t size, std::uint64_t seed, std::size_t image_size = 32);

/// A small, fast configuration on synthetic data.
ExperimentConfig tiny_config(TrainerKind trainer);

/// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name);
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace trigan::testing
