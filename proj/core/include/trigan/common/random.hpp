#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trigan {

using Rng = std::mt19937_64;

/// Named sub-streams derived from a single master seed. Every component that
/// consumes randomness draws from its own stream, so toggling one component
/// (e.g. switching trainer) never shifts another's draws.
enum class Stream : std::uint64_t {
    data = 1,
    validation_data = 2,
    subsample = 3,
    shuffle = 4,
    generator_init = 5,
    discriminator_init = 6,
    classifier_init = 7,
    latent = 8,
    samples = 9,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for `stream` under `master`, optionally further keyed by `index`
/// (epoch, repeat, sample id, ...).
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) noexcept;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace trigan
