#include "trigan/data/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace trigan {
namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double luma(double r, double g, double b) {
    if (r == g && g == b) return r;
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

GrayImage decode_png(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw ImageError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGBA;
    std::vector<png_byte> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        std::string message = image.message;
        png_image_free(&image);
        throw ImageError("cannot decode PNG " + path.string() + ": " + message);
    }
    GrayImage out{image.width, image.height, {}};
    out.pixels.resize(out.width * out.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = luma(rgba[4 * i], rgba[4 * i + 1], rgba[4 * i + 2]);
    }
    return out;
}

class PnmReader {
public:
    PnmReader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
        : bytes_(bytes), path_(path) {}

    std::size_t number() {
        skip_space_and_comments();
        std::size_t value = 0;
        bool any = false;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_++] - '0');
            any = true;
        }
        if (!any) throw ImageError("malformed PGM header in " + path_.string());
        return value;
    }

    std::size_t pos_ = 2;

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    const std::filesystem::path& path_;
};

GrayImage decode_pgm(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    const bool binary = bytes[1] == '5';
    PnmReader reader(bytes, path);
    GrayImage out;
    out.width = reader.number();
    out.height = reader.number();
    const std::size_t maxval = reader.number();
    if (out.width == 0 || out.height == 0 || maxval == 0 || maxval > 65535) {
        throw ImageError("unsupported PGM geometry in " + path.string());
    }
    const std::size_t count = out.width * out.height;
    out.pixels.resize(count);
    const double to_byte_scale = 255.0 / static_cast<double>(maxval);
    auto rescale = [&](std::size_t raw) {
        return maxval == 255 ? static_cast<double>(raw) : static_cast<double>(raw) * to_byte_scale;
    };
    if (binary) {
        std::size_t pos = reader.pos_ + 1;  // single whitespace after maxval
        const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
        if (pos + count * sample_bytes > bytes.size()) throw ImageError("truncated PGM " + path.string());
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t raw = bytes[pos++];
            if (sample_bytes == 2) raw = (raw << 8) | bytes[pos++];
            out.pixels[i] = rescale(raw);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) out.pixels[i] = rescale(reader.number());
    }
    return out;
}

std::uint32_t le32(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
           static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t le16(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

GrayImage decode_bmp(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 54) throw ImageError("truncated BMP " + path.string());
    const std::uint32_t data_offset = le32(bytes, 10);
    const std::uint32_t header_size = le32(bytes, 14);
    const auto width = static_cast<std::int32_t>(le32(bytes, 18));
    const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
    const std::uint16_t bpp = le16(bytes, 28);
    const std::uint32_t compression = le32(bytes, 30);
    if (width <= 0 || raw_height == 0) throw ImageError("bad BMP geometry in " + path.string());
    if (compression != 0 && !(compression == 3 && bpp == 32)) {
        throw ImageError("compressed BMP not supported: " + path.string());
    }
    if (bpp != 8 && bpp != 24 && bpp != 32) {
        throw ImageError("BMP bit depth " + std::to_string(bpp) + " not supported: " + path.string());
    }
    const bool top_down = raw_height < 0;
    const std::size_t height = static_cast<std::size_t>(top_down ? -raw_height : raw_height);
    const std::size_t stride = ((static_cast<std::size_t>(width) * bpp + 31) / 32) * 4;
    if (data_offset + stride * height > bytes.size()) throw ImageError("truncated BMP " + path.string());

    std::array<double, 256> palette{};
    if (bpp == 8) {
        std::uint32_t colours = le32(bytes, 46);
        if (colours == 0) colours = 256;
        const std::size_t table = 14 + header_size;
        for (std::uint32_t i = 0; i < colours && i < 256; ++i) {
            const std::size_t at = table + 4 * i;
            if (at + 3 > bytes.size()) throw ImageError("truncated BMP palette in " + path.string());
            palette[i] = luma(bytes[at + 2], bytes[at + 1], bytes[at]);
        }
    }

    GrayImage out{static_cast<std::size_t>(width), height, {}};
    out.pixels.resize(out.width * height);
    const std::size_t step = bpp / 8;
    for (std::size_t row = 0; row < height; ++row) {
        const std::size_t y = top_down ? row : height - 1 - row;
        const unsigned char* src = bytes.data() + data_offset + row * stride;
        for (std::size_t x = 0; x < out.width; ++x) {
            const unsigned char* px = src + x * step;
            out.pixels[y * out.width + x] = bpp == 8 ? palette[px[0]] : luma(px[2], px[1], px[0]);
        }
    }
    return out;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(path, bytes);
    if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) return decode_pgm(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return decode_bmp(path, bytes);
    throw ImageError("unrecognized image format: " + path.string());
}

GrayImage resize_bilinear(const GrayImage& src, std::size_t width, std::size_t height) {
    if (src.width == 0 || src.height == 0 || width == 0 || height == 0) {
        throw ImageError("resize_bilinear: empty geometry");
    }
    GrayImage out{width, height, std::vector<double>(width * height)};
    const double sx = static_cast<double>(src.width) / static_cast<double>(width);
    const double sy = static_cast<double>(src.height) / static_cast<double>(height);
    auto source_coord = [](std::size_t i, double scale, std::size_t extent, std::size_t& lo, std::size_t& hi) {
        double c = (static_cast<double>(i) + 0.5) * scale - 0.5;
        c = std::clamp(c, 0.0, static_cast<double>(extent - 1));
        lo = static_cast<std::size_t>(std::floor(c));
        hi = std::min(lo + 1, extent - 1);
        return c - static_cast<double>(lo);
    };
    for (std::size_t y = 0; y < height; ++y) {
        std::size_t y0, y1;
        const double fy = source_coord(y, sy, src.height, y0, y1);
        for (std::size_t x = 0; x < width; ++x) {
            std::size_t x0, x1;
            const double fx = source_coord(x, sx, src.width, x0, x1);
            const double top = (1.0 - fx) * src.at(y0, x0) + fx * src.at(y0, x1);
            const double bottom = (1.0 - fx) * src.at(y1, x0) + fx * src.at(y1, x1);
            out.pixels[y * width + x] = (1.0 - fy) * top + fy * bottom;
        }
    }
    return out;
}

std::vector<double> normalize_pixels(const GrayImage& image) {
    std::vector<double> out(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), out.begin(),
                   [](double v) { return std::clamp(v / 127.5 - 1.0, -1.0, 1.0); });
    return out;
}

std::uint8_t pixel_to_byte(double value) noexcept {
    const double scaled = std::clamp((value + 1.0) * 127.5, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::lround(scaled));
}

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, std::size_t width,
               std::size_t height) {
    if (pixels.size() != width * height) {
        throw ImageError("write_pgm: " + std::to_string(pixels.size()) + " samples for a " + std::to_string(width) +
                         "x" + std::to_string(height) + " image");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageError("cannot open " + path.string() + " for writing");
    out << "P5\n" << width << ' ' << height << "\n255\n";
    std::vector<char> bytes(pixels.size());
    std::transform(pixels.begin(), pixels.end(), bytes.begin(),
                   [](double v) { return static_cast<char>(pixel_to_byte(v)); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed for " + path.string());
}

std::vector<double> montage(const Tensor& images, std::size_t grid) {
    if (images.rank() != 4 || images.dim(1) != 1) {
        throw ShapeError("montage expects (N, 1, H, W) images, got " + shape_string(images.shape()));
    }
    const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
    const std::size_t width = grid * w;
    std::vector<double> out(grid * h * width, -1.0);
    auto v = images.values();
    for (std::size_t k = 0; k < std::min(n, grid * grid); ++k) {
        const std::size_t gy = k / grid, gx = k % grid;
        for (std::size_t y = 0; y < h; ++y) {
            std::copy_n(v.data() + (k * h + y) * w, w, out.data() + (gy * h + y) * width + gx * w);
        }
    }
    return out;
}

}  // namespace trigan
