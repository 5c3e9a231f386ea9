#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kpboost {

struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;
};

/// 8-bit luminance raster, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const std::uint8_t> pixels() const noexcept { return data_; }
    std::span<std::uint8_t> pixels() noexcept { return data_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Summed-area table: at(x, y) is the sum of all pixels with col <= x and row <= y.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const GrayImage& img);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    std::uint64_t at(int x, int y) const { return sums_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const std::uint64_t> sums() const noexcept { return sums_; }

    bool contains(const Rect& r) const noexcept;

    /// Exact pixel sum over r. Throws ContractError if r leaves the image.
    std::uint64_t box_sum(const Rect& r) const;

    // Unchecked variant for inner loops whose bounds were validated once up front.
    std::int64_t box_sum_unchecked(int x, int y, int w, int h) const noexcept {
        // Padded-free layout: corners left/above the image contribute zero.
        const int x1 = x + w - 1;
        const int y1 = y + h - 1;
        std::uint64_t d = at(x1, y1);
        std::uint64_t b = x > 0 ? at(x - 1, y1) : 0;
        std::uint64_t c = y > 0 ? at(x1, y - 1) : 0;
        std::uint64_t a = (x > 0 && y > 0) ? at(x - 1, y - 1) : 0;
        return static_cast<std::int64_t>(d + a - b - c);
    }

    /// Sum over r as if the image were extended outward by edge replication.
    /// r may lie partly or wholly outside the image.
    std::int64_t box_sum_replicated(int x, int y, int w, int h) const noexcept;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> sums_;
};

inline IntegralImage integral(const GrayImage& img) { return IntegralImage(img); }

/// Reads a binary (P5) or ASCII (P2) graymap with maxval <= 255.
GrayImage load_pgm(const std::filesystem::path& path);

/// Decodes PGM bytes; `name` is used in error messages only.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");

/// Writes a binary P5 graymap.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace kpboost
