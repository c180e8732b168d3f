#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trigan/autodiff/tensor.hpp"

namespace trigan {

enum class Provenance { directory, synthetic };

/// Immutable labelled image set: images (N, 1, H, W) in [-1, 1], labels in
/// [0, class_names.size()).
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    Provenance provenance = Provenance::synthetic;
    /// Files that could not be decoded while loading a directory.
    std::size_t skipped = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::size_t image_size() const { return images.dim(2); }
    std::size_t count_label(int label) const;

    /// Throws std::invalid_argument when the pixel range, label range or
    /// sizes are inconsistent.
    void validate() const;

    /// New dataset holding the listed samples, in that order.
    Dataset select(std::span<const std::size_t> indices) const;
};

struct LabeledBatch {
    Tensor images;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

/// One subdirectory per class (sorted names give class indices), images
/// decoded, converted to luminance, resized to image_size^2 and scaled to
/// [-1, 1]. Undecodable files are skipped with a warning on stderr and
/// counted in `skipped`; a class with no usable image is an error.
Dataset load_image_dir(const std::filesystem::path& root, std::size_t image_size);

/// Exactly n_total / C samples per class, drawn uniformly without
/// replacement, then shuffled. Deterministic per seed.
Dataset subsample_balanced(const Dataset& ds, std::size_t n_total, std::uint64_t seed);

/// Epoch-deterministic minibatch stream. The shuffle is keyed by (seed,
/// epoch); the trailing short batch is dropped.
class BatchStream {
public:
    BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch);

    std::size_t batch_count() const noexcept { return order_.size() / batch_size_; }
    /// Sample indices in visiting order, including the dropped tail.
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    std::optional<LabeledBatch> next();

private:
    const Dataset* ds_;
    std::size_t batch_size_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

inline BatchStream batch_iter(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch) {
    return BatchStream(ds, batch_size, seed, epoch);
}

/// Gathers the listed samples into one batch.
LabeledBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace trigan
