#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "trigan/nets/network.hpp"

namespace trigan {

/// Flat little-endian checkpoint:
///
///   "3NGAN1" | role:u8 | image_size, channels, latent_dim, base_width,
///   num_classes: u32 each | tensor_count:u32 |
///   tensor_count x (name_len:u32 | name bytes | rank:u32 |
///                   extents: u64 x rank | values: f64 x prod(extents))
///
/// Parameters are written first, then batchnorm running buffers.
inline constexpr char kCheckpointMagic[6] = {'3', 'N', 'G', 'A', 'N', '1'};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const Network& net, const std::filesystem::path& path);

/// Rebuilds the network from the stored spec and fills every tensor. When
/// `expected_role` is given, a checkpoint of any other role is rejected.
Network load_checkpoint(const std::filesystem::path& path, std::optional<Role> expected_role = std::nullopt);

}  // namespace trigan
