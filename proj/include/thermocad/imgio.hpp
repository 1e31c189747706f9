#pragma once

// Grayscale raster loading (PGM P2/P5 and 8-bit grayscale PNG), gray-level
// quantization and region-of-interest masks.
//
// PNG decoding goes through libpng; targets including this header link PNG.

#include <thermocad/error.hpp>

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

namespace thermocad {

inline constexpr int kDefaultLevels = 256;

// Quantized grayscale raster with an optional region-of-interest mask.
//
// Pixels are row-major, values in [0, levels). A mask entry of true marks an
// in-ROI pixel. Instances are immutable; with_mask() returns a masked copy.
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels)
        : width_(width), height_(height), levels_(levels), pixels_(std::move(pixels))
    {
        if (width <= 0 || height <= 0) {
            throw DimensionError("image dimensions must be positive, got " + std::to_string(width) +
                                 "x" + std::to_string(height));
        }
        if (levels < 2 || levels > 65536) {
            throw ConfigError("gray-level count must be in [2, 65536], got " + std::to_string(levels));
        }
        if (pixels_.size() != area()) {
            throw DimensionError("pixel buffer holds " + std::to_string(pixels_.size()) +
                                 " values, expected " + std::to_string(area()));
        }
        for (auto v : pixels_) {
            if (v >= levels_) {
                throw ConfigError("pixel value " + std::to_string(v) + " exceeds level count " +
                                  std::to_string(levels_));
            }
        }
    }

    GrayImage(int width, int height, int levels, std::vector<std::uint16_t> pixels,
              std::vector<bool> mask)
        : GrayImage(width, height, levels, std::move(pixels))
    {
        *this = with_mask(std::move(mask));
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t area() const noexcept
    {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    [[nodiscard]] const std::vector<std::uint16_t>& pixels() const noexcept { return pixels_; }
    [[nodiscard]] const std::optional<std::vector<bool>>& mask() const noexcept { return mask_; }
    [[nodiscard]] bool has_mask() const noexcept { return mask_.has_value(); }

    [[nodiscard]] bool in_bounds(int x, int y) const noexcept
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    // Gray value V(x, y); x is the column, y the row.
    [[nodiscard]] int at(int x, int y) const noexcept { return pixels_[index(x, y)]; }

    // True when (x, y) is in bounds and inside the ROI (every pixel when unmasked).
    [[nodiscard]] bool in_roi(int x, int y) const noexcept
    {
        if (!in_bounds(x, y)) {
            return false;
        }
        return !mask_ || (*mask_)[index(x, y)];
    }

    [[nodiscard]] std::size_t roi_pixel_count() const noexcept
    {
        if (!mask_) {
            return area();
        }
        return static_cast<std::size_t>(std::count(mask_->begin(), mask_->end(), true));
    }

    [[nodiscard]] GrayImage with_mask(std::vector<bool> mask) const
    {
        if (mask.size() != area()) {
            throw DimensionError("mask holds " + std::to_string(mask.size()) + " entries, image has " +
                                 std::to_string(area()) + " pixels");
        }
        GrayImage copy = *this;
        copy.mask_ = std::move(mask);
        return copy;
    }

    [[nodiscard]] GrayImage without_mask() const
    {
        GrayImage copy = *this;
        copy.mask_.reset();
        return copy;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    [[nodiscard]] std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    int levels_ = kDefaultLevels;
    std::vector<std::uint16_t> pixels_;
    std::optional<std::vector<bool>> mask_;
};

// Raw 8-bit raster as stored on disk, before quantization.
struct ByteRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;
};

// Maps an 8-bit value onto `levels` bins: floor(v * levels / 256).
[[nodiscard]] constexpr int quantize(std::uint8_t v, int levels) noexcept
{
    return (static_cast<int>(v) * levels) / 256;
}

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) {
        throw InputError("error reading " + path.string());
    }
    return data;
}

// Cursor over a PNM header: whitespace and '#' comments are skipped between tokens.
class PnmCursor {
public:
    PnmCursor(const std::vector<std::uint8_t>& data, std::string source, std::size_t start)
        : data_(data), source_(std::move(source)), pos_(start)
    {
    }

    void skip_separators()
    {
        while (pos_ < data_.size()) {
            if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') {
                    ++pos_;
                }
            } else if (std::isspace(data_[pos_]) != 0) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* field)
    {
        skip_separators();
        if (pos_ >= data_.size() || std::isdigit(data_[pos_]) == 0) {
            throw FormatError(source_ + ": malformed PGM header field '" + field + "'");
        }
        long value = 0;
        while (pos_ < data_.size() && std::isdigit(data_[pos_]) != 0) {
            value = value * 10 + (data_[pos_] - '0');
            if (value > 1'000'000'000L) {
                throw FormatError(source_ + ": PGM header field '" + field + "' out of range");
            }
            ++pos_;
        }
        return value;
    }

    // Consumes the single whitespace byte that ends a binary PNM header.
    void consume_raster_separator(const char* field)
    {
        if (pos_ >= data_.size() || std::isspace(data_[pos_]) == 0) {
            throw FormatError(source_ + ": malformed PGM header field '" + field + "'");
        }
        ++pos_;
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

private:
    const std::vector<std::uint8_t>& data_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline ByteRaster decode_pgm(const std::vector<std::uint8_t>& data, const std::string& source)
{
    const bool ascii = data[1] == '2';
    PnmCursor header(data, source, 2);
    const long width = header.read_uint("width");
    const long height = header.read_uint("height");
    const long maxval = header.read_uint("maxval");
    if (width <= 0 || height <= 0) {
        throw FormatError(source + ": PGM header field 'width'/'height' must be positive");
    }
    if (maxval > 255) {
        throw FormatError(source + ": unsupported bit depth (PGM header field 'maxval' = " +
                          std::to_string(maxval) + ", expected <= 255)");
    }
    if (maxval == 0) {
        throw FormatError(source + ": PGM header field 'maxval' must be nonzero");
    }

    ByteRaster raster{static_cast<int>(width), static_cast<int>(height), {}};
    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    raster.bytes.reserve(count);
    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            const long v = header.read_uint("raster");
            if (v > maxval) {
                throw FormatError(source + ": sample value " + std::to_string(v) + " exceeds 'maxval'");
            }
            raster.bytes.push_back(static_cast<std::uint8_t>(v));
        }
    } else {
        header.consume_raster_separator("maxval");
        const std::size_t start = header.position();
        if (data.size() - start < count) {
            throw FormatError(source + ": truncated P5 raster (" + std::to_string(data.size() - start) +
                              " of " + std::to_string(count) + " bytes)");
        }
        raster.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(start),
                            data.begin() + static_cast<std::ptrdiff_t>(start + count));
        for (auto v : raster.bytes) {
            if (v > maxval) {
                throw FormatError(source + ": sample value " + std::to_string(v) + " exceeds 'maxval'");
            }
        }
    }
    return raster;
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& d, std::size_t at)
{
    return (std::uint32_t{d[at]} << 24) | (std::uint32_t{d[at + 1]} << 16) |
           (std::uint32_t{d[at + 2]} << 8) | std::uint32_t{d[at + 3]};
}

inline ByteRaster decode_png(const std::vector<std::uint8_t>& data, const std::string& source)
{
    // Validate IHDR before handing the buffer to libpng, which would otherwise
    // silently convert other depths and color types.
    constexpr std::size_t kIhdrEnd = 8 + 8 + 13;
    if (data.size() < kIhdrEnd || data[12] != 'I' || data[13] != 'H' || data[14] != 'D' ||
        data[15] != 'R') {
        throw FormatError(source + ": malformed PNG (missing IHDR chunk)");
    }
    const int bit_depth = data[24];
    const int color_type = data[25];
    if (bit_depth != 8) {
        throw FormatError(source + ": unsupported bit depth (PNG IHDR field 'bit depth' = " +
                          std::to_string(bit_depth) + ", expected 8)");
    }
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        throw FormatError(source + ": unsupported PNG IHDR field 'color type' = " +
                          std::to_string(color_type) + " (expected 0, grayscale)");
    }

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, data.data(), data.size()) == 0) {
        throw FormatError(source + ": " + image.message);
    }
    image.format = PNG_FORMAT_GRAY;
    ByteRaster raster{static_cast<int>(image.width), static_cast<int>(image.height), {}};
    raster.bytes.resize(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, raster.bytes.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        throw FormatError(source + ": " + message);
    }
    return raster;
}

} // namespace detail

// Reads an 8-bit grayscale PGM (P2 or P5) or PNG without quantizing it.
inline ByteRaster read_raster(const std::filesystem::path& path)
{
    const auto data = detail::read_file_bytes(path);
    const std::string source = path.string();
    static constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (data.size() >= kPngSignature.size() &&
        std::equal(kPngSignature.begin(), kPngSignature.end(), data.begin())) {
        return detail::decode_png(data, source);
    }
    if (data.size() >= 2 && data[0] == 'P') {
        if (data[1] == '2' || data[1] == '5') {
            return detail::decode_pgm(data, source);
        }
        throw FormatError(source + ": unsupported PNM magic 'P" + std::string(1, static_cast<char>(data[1])) +
                          "' (expected P2 or P5 grayscale)");
    }
    throw FormatError(source + ": unrecognized image format (expected PGM or PNG signature)");
}

// Loads a grayscale image and quantizes each byte v to floor(v * levels / 256).
inline GrayImage load_image(const std::filesystem::path& path, int levels = kDefaultLevels)
{
    if (levels < 2 || levels > 256) {
        throw ConfigError("levels must be in [2, 256], got " + std::to_string(levels));
    }
    const ByteRaster raster = read_raster(path);
    std::vector<std::uint16_t> pixels(raster.bytes.size());
    std::transform(raster.bytes.begin(), raster.bytes.end(), pixels.begin(),
                   [levels](std::uint8_t v) { return static_cast<std::uint16_t>(quantize(v, levels)); });
    return GrayImage(raster.width, raster.height, levels, std::move(pixels));
}

// Attaches the ROI mask stored at `path`: 0 is outside, any nonzero value inside.
inline GrayImage load_mask(const std::filesystem::path& path, const GrayImage& image)
{
    const ByteRaster raster = read_raster(path);
    if (raster.width != image.width() || raster.height != image.height()) {
        throw DimensionError(path.string() + ": mask is " + std::to_string(raster.width) + "x" +
                             std::to_string(raster.height) + " but image is " +
                             std::to_string(image.width()) + "x" + std::to_string(image.height()));
    }
    std::vector<bool> mask(raster.bytes.size());
    std::transform(raster.bytes.begin(), raster.bytes.end(), mask.begin(),
                   [](std::uint8_t v) { return v != 0; });
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
        throw EmptyRoiError(path.string() + ": empty ROI (mask has no nonzero pixel)");
    }
    return image.with_mask(std::move(mask));
}

} // namespace thermocad
