#pragma once

#include <cstddef>
#include <cstdint>

#include "trigan/data/dataset.hpp"

namespace trigan {

/// Desk-scale stand-in for a binary chest X-ray set.
///
/// Class 0 ("normal"): dark background and a centred bright ellipse whose
/// semi-axes are 30-45% of the width. Class 1 ("opacity"): the same plus a
/// handful of bright Gaussian blobs inside the ellipse. Both classes carry
/// Gaussian pixel noise.
struct SyntheticSpec {
    std::size_t image_size = 32;
    std::size_t n_per_class = 100;
    std::uint64_t seed = 0;
    std::size_t blob_min = 3;
    std::size_t blob_max = 6;
    double noise_std = 0.05;
};

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace trigan
