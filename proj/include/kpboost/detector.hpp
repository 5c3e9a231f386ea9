#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kpboost/image.hpp"

namespace kpboost {

/// FP8 fixed point: integer = value * 256.
inline constexpr std::int32_t kFp8One = 256;

struct Keypoint {
    int x = 0;
    int y = 0;
    std::int32_t scale = kFp8One;  // FP8
    std::int64_t response = 0;

    bool operator==(const Keypoint&) const = default;
};

struct DetectorParams {
    std::vector<int> filter_sizes{9, 15, 21, 27, 33, 39};
    int stride = 2;
    std::int64_t response_threshold = 1'000'000'000;
    std::optional<std::size_t> max_keypoints;
    // Keypoints closer than imbrication_radius * smaller scale are considered nested.
    int imbrication_radius = 2;

    /// Throws ContractError unless sizes are strictly increasing, >= 9 and == 3 (mod 6), and stride >= 1.
    void validate() const;
};

/// Box-filter Hessian responses for one filter size, sampled on the grid of pixel centers
/// (col * stride, row * stride) shared by all filter sizes. Every grid center inside the
/// image is stored; filter lobes reaching past the border read edge-replicated pixels.
class ResponseMap {
public:
    ResponseMap() = default;
    ResponseMap(int filter_size, int stride, int first_col, int first_row, int cols, int rows);

    int filter_size() const noexcept { return filter_size_; }
    int stride() const noexcept { return stride_; }
    int first_col() const noexcept { return first_col_; }
    int first_row() const noexcept { return first_row_; }
    int cols() const noexcept { return cols_; }
    int rows() const noexcept { return rows_; }
    bool empty() const noexcept { return cols_ == 0 || rows_ == 0; }

    /// True if absolute grid cell (gc, gr) is stored in this map.
    bool covers(int gc, int gr) const noexcept {
        return gc >= first_col_ && gr >= first_row_ && gc < first_col_ + cols_ && gr < first_row_ + rows_;
    }
    std::int64_t response(int gc, int gr) const { return responses_[index(gc, gr)]; }
    bool laplacian_positive(int gc, int gr) const { return laplacian_[index(gc, gr)] != 0; }

    void set(int gc, int gr, std::int64_t response, bool laplacian_positive) {
        responses_[index(gc, gr)] = response;
        laplacian_[index(gc, gr)] = laplacian_positive ? 1 : 0;
    }

private:
    std::size_t index(int gc, int gr) const noexcept {
        return static_cast<std::size_t>(gr - first_row_) * cols_ + (gc - first_col_);
    }

    int filter_size_ = 0;
    int stride_ = 1;
    int first_col_ = 0;
    int first_row_ = 0;
    int cols_ = 0;
    int rows_ = 0;
    std::vector<std::int64_t> responses_;
    std::vector<std::uint8_t> laplacian_;
};

/// Second-derivative box-filter sums at one center, normalized to the 9x9 filter area in FP8.
struct HessianTerms {
    std::int64_t dxx = 0;
    std::int64_t dyy = 0;
    std::int64_t dxy = 0;
};

/// Evaluates the three box layouts for filter size L centered at (cx, cy). The filter must fit.
HessianTerms hessian_terms(const IntegralImage& ii, int cx, int cy, int filter_size);

/// det = Dxx*Dyy - (w*Dxy)^2 with w = 230/256, all in integer arithmetic (FP16 units).
std::int64_t hessian_determinant(const HessianTerms& t) noexcept;

/// Empty map when the filter is larger than the image.
ResponseMap doh_response_map(const IntegralImage& ii, int filter_size, int stride);

/// Quadratic-vertex scale refinement across three adjacent scales, integer-only.
std::int32_t interpolate_scale(std::int64_t r_prev, std::int64_t r_mid, std::int64_t r_next,
                               std::int32_t s_prev, std::int32_t s_mid, std::int32_t s_next) noexcept;

/// FP8 scale for filter side L: 1.2 * L / 9, rounded.
std::int32_t filter_scale_fp8(int filter_size) noexcept;

/// Greedy suppression of nested multi-scale blobs; output in descending response order.
std::vector<Keypoint> suppress_imbricated(std::span<const Keypoint> kps, int radius_factor = 2);

/// True if the two keypoints would be considered the same (nested) blob.
bool imbricated(const Keypoint& a, const Keypoint& b, int radius_factor = 2) noexcept;

std::vector<Keypoint> detect_keypoints(const IntegralImage& ii, const DetectorParams& params = {});

}  // namespace kpboost
