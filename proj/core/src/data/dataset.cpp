#include "trigan/data/dataset.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

#include "trigan/common/random.hpp"
#include "trigan/data/image_io.hpp"

namespace trigan {

std::size_t Dataset::count_label(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::validate() const {
    if (!images.defined() || images.rank() != 4) throw std::invalid_argument("dataset images must be (N, 1, H, W)");
    if (images.dim(0) != labels.size()) {
        throw std::invalid_argument("dataset holds " + std::to_string(images.dim(0)) + " images but " +
                                    std::to_string(labels.size()) + " labels");
    }
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= class_names.size()) {
            throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                        std::to_string(class_names.size()) + ")");
        }
    }
    for (double v : images.values()) {
        if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("pixel value outside [-1, 1]");
    }
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw std::invalid_argument("cannot select an empty subset");
    const std::size_t plane = images.numel() / images.dim(0);
    std::vector<double> pixels;
    pixels.reserve(indices.size() * plane);
    Dataset out;
    auto v = images.values();
    for (std::size_t i : indices) {
        if (i >= size()) throw std::out_of_range("sample index " + std::to_string(i) + " out of range");
        pixels.insert(pixels.end(), v.begin() + static_cast<std::ptrdiff_t>(i * plane),
                      v.begin() + static_cast<std::ptrdiff_t>((i + 1) * plane));
        out.labels.push_back(labels[i]);
    }
    Shape shape = images.shape();
    shape[0] = indices.size();
    out.images = Tensor::from(std::move(shape), std::move(pixels));
    out.class_names = class_names;
    out.provenance = provenance;
    return out;
}

LabeledBatch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset picked = ds.select(indices);
    return {picked.images, std::move(picked.labels)};
}

Dataset load_image_dir(const std::filesystem::path& root, std::size_t image_size) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw std::invalid_argument("dataset root " + root.string() + " is not a directory");
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() < 2) {
        throw std::invalid_argument("dataset root " + root.string() + " needs at least two class subdirectories");
    }

    Dataset ds;
    ds.provenance = Provenance::directory;
    std::vector<double> pixels;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        std::size_t loaded = 0;
        for (const fs::path& file : files) {
            try {
                const GrayImage img = resize_bilinear(read_image(file), image_size, image_size);
                const std::vector<double> norm = normalize_pixels(img);
                pixels.insert(pixels.end(), norm.begin(), norm.end());
                ds.labels.push_back(static_cast<int>(label));
                ++loaded;
            } catch (const ImageError& e) {
                std::cerr << "warning: skipping " << file.string() << ": " << e.what() << '\n';
                ++ds.skipped;
            }
        }
        if (loaded == 0) {
            throw std::invalid_argument("class directory " + class_dirs[label].string() + " has no readable images");
        }
        ds.class_names.push_back(class_dirs[label].filename().string());
    }
    ds.images = Tensor::from({ds.labels.size(), 1, image_size, image_size}, std::move(pixels));
    ds.validate();
    return ds;
}

Dataset subsample_balanced(const Dataset& ds, std::size_t n_total, std::uint64_t seed) {
    const std::size_t classes = ds.num_classes();
    if (classes == 0 || n_total == 0 || n_total % classes != 0) {
        throw std::invalid_argument("subsample size " + std::to_string(n_total) + " must be a positive multiple of " +
                                    std::to_string(classes) + " classes");
    }
    const std::size_t per_class = n_total / classes;
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

    Rng rng(derive_seed(seed, Stream::subsample));
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < classes; ++c) {
        auto& pool = by_class[c];
        if (pool.size() < per_class) {
            throw std::invalid_argument("class '" + ds.class_names[c] + "' has " + std::to_string(pool.size()) +
                                        " samples, " + std::to_string(per_class) + " requested");
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    std::shuffle(chosen.begin(), chosen.end(), rng);
    return ds.select(chosen);
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch)
    : ds_(&ds), batch_size_(batch_size), order_(ds.size()) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    if (batch_size > ds.size()) {
        throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds dataset size " +
                                    std::to_string(ds.size()));
    }
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng rng(derive_seed(seed, Stream::shuffle, epoch));
    std::shuffle(order_.begin(), order_.end(), rng);
}

std::optional<LabeledBatch> BatchStream::next() {
    if (cursor_ + batch_size_ > order_.size()) return std::nullopt;
    const std::span<const std::size_t> slice(order_.data() + cursor_, batch_size_);
    cursor_ += batch_size_;
    return make_batch(*ds_, slice);
}

}  // namespace trigan
