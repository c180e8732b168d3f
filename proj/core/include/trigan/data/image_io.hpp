#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "trigan/autodiff/tensor.hpp"

namespace trigan {

/// Single-channel image with luminance samples on the 0..255 scale.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;  // row-major, height * width

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads PNG, binary/ASCII PGM or uncompressed BMP (8/24/32-bit), chosen by
/// file content. Colour inputs are reduced with Rec. 601 luma weights.
GrayImage read_image(const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centres and edge clamping. Resizing to
/// the source size is the identity.
GrayImage resize_bilinear(const GrayImage& src, std::size_t width, std::size_t height);

/// 0..255 luminance -> [-1, 1] via v / 127.5 - 1.
std::vector<double> normalize_pixels(const GrayImage& image);

/// [-1, 1] -> byte, clamped and rounded; -1 maps to 0 and +1 to 255.
std::uint8_t pixel_to_byte(double value) noexcept;

/// Binary PGM (P5, maxval 255) of `height` rows of `width` samples in [-1, 1].
void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, std::size_t width,
               std::size_t height);

/// Tiles images (N, 1, H, W) into a grid x grid montage, row-major; unused
/// cells are black (-1).
std::vector<double> montage(const Tensor& images, std::size_t grid);

}  // namespace trigan
