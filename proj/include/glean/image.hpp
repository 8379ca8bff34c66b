#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace glean {

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {0, 0, 0});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c) { return data_[index(x, y) + c]; }
    std::uint8_t at(int x, int y, int c) const { return data_[index(x, y) + c]; }

    Rgb pixel(int x, int y) const;
    void set_pixel(int x, int y, Rgb value);

    std::vector<std::uint8_t>& data() noexcept { return data_; }
    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// PNG I/O. Grayscale, palette, 16-bit and alpha inputs are normalized to
// 8-bit RGB on read; alpha is dropped.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace glean
