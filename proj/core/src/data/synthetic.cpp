#include "trigan/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "trigan/common/random.hpp"

namespace trigan {
namespace {

// Intensities are built on [0, 1] and mapped to [-1, 1] at the end.
constexpr double kBackgroundLo = 0.05, kBackgroundHi = 0.15;
constexpr double kEllipseLo = 0.35, kEllipseHi = 0.50;
constexpr double kAxisLo = 0.30, kAxisHi = 0.45;
constexpr double kCentreJitter = 0.03;
constexpr double kBlobSigmaLo = 0.05, kBlobSigmaHi = 0.10;
constexpr double kBlobAmpLo = 0.25, kBlobAmpHi = 0.45;
// Blob centres fall within this fraction of the ellipse radius.
constexpr double kBlobReach = 0.7;

std::vector<double> render(const SyntheticSpec& spec, bool opacity, Rng& rng) {
    const auto size = static_cast<double>(spec.image_size);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const double background = between(kBackgroundLo, kBackgroundHi);
    const double brightness = between(kEllipseLo, kEllipseHi);
    const double cx = size * (0.5 + between(-kCentreJitter, kCentreJitter));
    const double cy = size * (0.5 + between(-kCentreJitter, kCentreJitter));
    const double ax = size * between(kAxisLo, kAxisHi);
    const double ay = size * between(kAxisLo, kAxisHi);

    struct Blob {
        double x, y, sigma, amplitude;
    };
    std::vector<Blob> blobs;
    if (opacity) {
        std::uniform_int_distribution<std::size_t> count(spec.blob_min, spec.blob_max);
        const std::size_t n = count(rng);
        for (std::size_t k = 0; k < n; ++k) {
            const double angle = between(0.0, 2.0 * std::numbers::pi);
            const double radius = kBlobReach * std::sqrt(unit(rng));
            blobs.push_back({cx + ax * radius * std::cos(angle), cy + ay * radius * std::sin(angle),
                             size * between(kBlobSigmaLo, kBlobSigmaHi), between(kBlobAmpLo, kBlobAmpHi)});
        }
    }

    std::normal_distribution<double> noise(0.0, spec.noise_std);
    std::vector<double> pixels(spec.image_size * spec.image_size);
    for (std::size_t y = 0; y < spec.image_size; ++y) {
        for (std::size_t x = 0; x < spec.image_size; ++x) {
            const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
            const double dx = (px - cx) / ax, dy = (py - cy) / ay;
            double v = background + (dx * dx + dy * dy <= 1.0 ? brightness : 0.0);
            for (const Blob& b : blobs) {
                const double r2 = (px - b.x) * (px - b.x) + (py - b.y) * (py - b.y);
                v += b.amplitude * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
            }
            v += noise(rng);
            pixels[y * spec.image_size + x] = 2.0 * std::clamp(v, 0.0, 1.0) - 1.0;
        }
    }
    return pixels;
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.image_size == 0 || spec.n_per_class == 0) {
        throw std::invalid_argument("synthetic dataset needs positive image_size and n_per_class");
    }
    if (spec.blob_min == 0 || spec.blob_min > spec.blob_max) {
        throw std::invalid_argument("synthetic blob range must satisfy 1 <= min <= max");
    }
    Rng rng(spec.seed);
    Dataset ds;
    ds.provenance = Provenance::synthetic;
    ds.class_names = {"normal", "opacity"};
    std::vector<double> pixels;
    pixels.reserve(2 * spec.n_per_class * spec.image_size * spec.image_size);
    for (std::size_t i = 0; i < 2 * spec.n_per_class; ++i) {
        const int label = static_cast<int>(i % 2);
        const std::vector<double> img = render(spec, label == 1, rng);
        pixels.insert(pixels.end(), img.begin(), img.end());
        ds.labels.push_back(label);
    }
    ds.images = Tensor::from({ds.labels.size(), 1, spec.image_size, spec.image_size}, std::move(pixels));
    return ds;
}

}  // namespace trigan
