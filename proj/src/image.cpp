#include "kpboost/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kpboost/error.hpp"

namespace kpboost {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw ContractError("GrayImage: dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) throw ContractError("GrayImage: dimensions must be >= 1");
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw ContractError("GrayImage: data length does not match width*height");
}

IntegralImage::IntegralImage(const GrayImage& img) : width_(img.width()), height_(img.height()) {
    sums_.resize(static_cast<std::size_t>(width_) * height_);
    auto px = img.pixels();
    for (int y = 0; y < height_; ++y) {
        std::uint64_t row = 0;
        const std::size_t off = static_cast<std::size_t>(y) * width_;
        for (int x = 0; x < width_; ++x) {
            row += px[off + x];
            sums_[off + x] = row + (y > 0 ? sums_[off - width_ + x] : 0);
        }
    }
}

bool IntegralImage::contains(const Rect& r) const noexcept {
    return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.x <= width_ - r.w && r.y <= height_ - r.h;
}

std::uint64_t IntegralImage::box_sum(const Rect& r) const {
    if (!contains(r)) {
        std::ostringstream msg;
        msg << "box_sum: rect (" << r.x << "," << r.y << "," << r.w << "," << r.h << ") outside " << width_
            << "x" << height_ << " image";
        throw ContractError(msg.str());
    }
    return static_cast<std::uint64_t>(box_sum_unchecked(r.x, r.y, r.w, r.h));
}

namespace {

// Splits [a, a + n) against [0, size) into up to three runs of source indices, each with a
// multiplicity: indices below 0 collapse onto 0, indices past the end onto size - 1.
struct AxisRun {
    int start;
    int length;
    std::int64_t multiplicity;
};

int split_axis(int a, int n, int size, AxisRun (&runs)[3]) {
    int count = 0;
    const int b = a + n;
    const int below = std::clamp(std::min(b, 0) - a, 0, n);
    const int above = std::clamp(b - std::max(a, size), 0, n);
    const int lo = std::max(a, 0);
    const int hi = std::min(b, size);
    if (below > 0) runs[count++] = {0, 1, below};
    if (hi > lo) runs[count++] = {lo, hi - lo, 1};
    if (above > 0) runs[count++] = {size - 1, 1, above};
    return count;
}

}  // namespace

std::int64_t IntegralImage::box_sum_replicated(int x, int y, int w, int h) const noexcept {
    if (x >= 0 && y >= 0 && x + w <= width_ && y + h <= height_) return box_sum_unchecked(x, y, w, h);
    AxisRun xs[3];
    AxisRun ys[3];
    const int nx = split_axis(x, w, width_, xs);
    const int ny = split_axis(y, h, height_, ys);
    std::int64_t total = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            total += xs[i].multiplicity * ys[j].multiplicity *
                     box_sum_unchecked(xs[i].start, ys[j].start, xs[i].length, ys[j].length);
    return total;
}

namespace {

class PgmReader {
public:
    PgmReader(std::span<const std::uint8_t> bytes, const std::string& name) : bytes_(bytes), name_(name) {}

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream msg;
        msg << name_ << ": " << what << " at offset " << pos_;
        throw IoError(msg.str());
    }

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

    long read_uint(const char* field) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail(std::string("malformed header: expected ") + field);
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > (1L << 30)) fail(std::string("malformed header: ") + field + " too large");
        }
        return v;
    }

    GrayImage read() {
        if (bytes_.size() < 2 || bytes_[0] != 'P') fail("unsupported magic");
        const char kind = static_cast<char>(bytes_[1]);
        if (kind != '5' && kind != '2') fail("unsupported magic");
        pos_ = 2;
        const long w = read_uint("width");
        const long h = read_uint("height");
        const long maxval = read_uint("maxval");
        if (w < 1 || h < 1) fail("malformed header: zero dimension");
        if (maxval < 1 || maxval > 255) fail("maxval > 255 unsupported");

        std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
        if (kind == '5') {
            // Exactly one whitespace byte separates the header from the raster.
            if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
            ++pos_;
            if (bytes_.size() - pos_ < data.size()) {
                pos_ = bytes_.size();
                fail("truncated payload");
            }
            std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), data.size(), data.begin());
        } else {
            for (auto& v : data) {
                skip_space_and_comments();
                if (pos_ >= bytes_.size()) fail("truncated payload");
                const long s = read_uint("sample");
                if (s > maxval) fail("sample exceeds maxval");
                v = static_cast<std::uint8_t>(s);
            }
        }
        return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes, const std::string& name) {
    return PgmReader(bytes, name).read();
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes, path.string());
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    auto px = img.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace kpboost
