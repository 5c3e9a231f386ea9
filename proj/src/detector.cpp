#include "kpboost/detector.hpp"

#include <algorithm>
#include <array>

#include "kpboost/error.hpp"

namespace kpboost {

namespace {

// Cross-term weight 0.9 in FP8.
constexpr std::int64_t kDxyWeight = 230;
constexpr int kReferenceArea = 81;

}  // namespace

void DetectorParams::validate() const {
    if (filter_sizes.empty()) throw ContractError("DetectorParams: no filter sizes");
    for (std::size_t i = 0; i < filter_sizes.size(); ++i) {
        const int L = filter_sizes[i];
        if (L < 9 || L % 6 != 3) throw ContractError("DetectorParams: filter sizes must be >= 9 and == 3 (mod 6)");
        if (i > 0 && L <= filter_sizes[i - 1]) throw ContractError("DetectorParams: filter sizes must increase");
    }
    if (stride < 1) throw ContractError("DetectorParams: stride must be >= 1");
    if (imbrication_radius < 0) throw ContractError("DetectorParams: negative imbrication radius");
}

ResponseMap::ResponseMap(int filter_size, int stride, int first_col, int first_row, int cols, int rows)
    : filter_size_(filter_size),
      stride_(stride),
      first_col_(first_col),
      first_row_(first_row),
      cols_(std::max(cols, 0)),
      rows_(std::max(rows, 0)) {
    responses_.assign(static_cast<std::size_t>(cols_) * rows_, 0);
    laplacian_.assign(responses_.size(), 0);
}

HessianTerms hessian_terms(const IntegralImage& ii, int cx, int cy, int L) {
    const int b = L / 2;
    const int l = L / 3;
    auto box = [&](int x, int y, int w, int h) { return ii.box_sum_replicated(x, y, w, h); };

    // Three stacked lobes weighted +1, -2, +1: full band minus three times the middle lobe.
    const std::int64_t dxx = box(cx - b, cy - l + 1, L, 2 * l - 1) - 3 * box(cx - l / 2, cy - l + 1, l, 2 * l - 1);
    const std::int64_t dyy = box(cx - l + 1, cy - b, 2 * l - 1, L) - 3 * box(cx - l + 1, cy - l / 2, 2 * l - 1, l);
    const std::int64_t dxy = box(cx + 1, cy - l, l, l) + box(cx - l, cy + 1, l, l) - box(cx - l, cy - l, l, l) -
                             box(cx + 1, cy + 1, l, l);

    const std::int64_t area = static_cast<std::int64_t>(L) * L;
    const std::int64_t norm = kReferenceArea * kFp8One;
    return {dxx * norm / area, dyy * norm / area, dxy * norm / area};
}

std::int64_t hessian_determinant(const HessianTerms& t) noexcept {
    const std::int64_t wxy = t.dxy * kDxyWeight / kFp8One;
    return t.dxx * t.dyy - wxy * wxy;
}

ResponseMap doh_response_map(const IntegralImage& ii, int L, int stride) {
    if (stride < 1) throw ContractError("doh_response_map: stride must be >= 1");
    if (L > ii.width() || L > ii.height()) return ResponseMap(L, stride, 0, 0, 0, 0);

    const int cols = (ii.width() - 1) / stride + 1;
    const int rows = (ii.height() - 1) / stride + 1;
    ResponseMap map(L, stride, 0, 0, cols, rows);
    for (int gr = 0; gr < rows; ++gr) {
        for (int gc = 0; gc < cols; ++gc) {
            const HessianTerms t = hessian_terms(ii, gc * stride, gr * stride, L);
            map.set(gc, gr, hessian_determinant(t), t.dxx + t.dyy > 0);
        }
    }
    return map;
}

std::int32_t interpolate_scale(std::int64_t r_prev, std::int64_t r_mid, std::int64_t r_next, std::int32_t s_prev,
                               std::int32_t s_mid, std::int32_t s_next) noexcept {
    const std::int64_t den = r_prev - 2 * r_mid + r_next;
    std::int64_t delta = 0;
    if (den != 0) delta = std::clamp<std::int64_t>((r_prev - r_next) * 128 / den, -128, 128);
    return static_cast<std::int32_t>(s_mid + delta * (s_next - s_prev) / 512);
}

std::int32_t filter_scale_fp8(int L) noexcept {
    // 1.2 * L / 9 * 256 == L * 3072 / 90
    return static_cast<std::int32_t>((static_cast<std::int64_t>(L) * 3072 + 45) / 90);
}

bool imbricated(const Keypoint& a, const Keypoint& b, int radius_factor) noexcept {
    const std::int64_t dx = a.x - b.x;
    const std::int64_t dy = a.y - b.y;
    const std::int64_t r = static_cast<std::int64_t>(radius_factor) * std::min(a.scale, b.scale);
    // (dx^2 + dy^2) <= (r / 256)^2, exactly
    return (dx * dx + dy * dy) * kFp8One * kFp8One <= r * r;
}

namespace {

bool stronger(const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.scale < b.scale;
}

}  // namespace

std::vector<Keypoint> suppress_imbricated(std::span<const Keypoint> kps, int radius_factor) {
    std::vector<Keypoint> order(kps.begin(), kps.end());
    std::stable_sort(order.begin(), order.end(),
                     [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
    std::vector<Keypoint> kept;
    for (const Keypoint& k : order) {
        const bool nested = std::any_of(kept.begin(), kept.end(),
                                        [&](const Keypoint& q) { return imbricated(k, q, radius_factor); });
        if (!nested) kept.push_back(k);
    }
    return kept;
}

std::vector<Keypoint> detect_keypoints(const IntegralImage& ii, const DetectorParams& params) {
    params.validate();
    const std::size_t n = params.filter_sizes.size();
    std::vector<ResponseMap> maps;
    maps.reserve(n);
    for (int L : params.filter_sizes) maps.push_back(doh_response_map(ii, L, params.stride));

    std::vector<Keypoint> candidates;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const ResponseMap& mid = maps[k];
        const ResponseMap& prev = maps[k - 1];
        const ResponseMap& next = maps[k + 1];
        if (next.empty()) break;
        const std::array<const ResponseMap*, 3> column{&prev, &mid, &next};

        for (int gr = mid.first_row(); gr < mid.first_row() + mid.rows(); ++gr) {
            for (int gc = mid.first_col(); gc < mid.first_col() + mid.cols(); ++gc) {
                const std::int64_t r = mid.response(gc, gr);
                if (r <= params.response_threshold) continue;
                if (!mid.covers(gc - 1, gr - 1) || !mid.covers(gc + 1, gr + 1)) continue;
                // Exact ties go to the neighbour earliest in (scale, row, col) order.
                bool is_max = true;
                for (int ds = -1; ds <= 1 && is_max; ++ds) {
                    const ResponseMap* m = column[ds + 1];
                    for (int dr = -1; dr <= 1 && is_max; ++dr) {
                        for (int dc = -1; dc <= 1; ++dc) {
                            if (ds == 0 && dr == 0 && dc == 0) continue;
                            const bool earlier = ds < 0 || (ds == 0 && (dr < 0 || (dr == 0 && dc < 0)));
                            const std::int64_t v = m->response(gc + dc, gr + dr);
                            if (v > r || (earlier && v == r)) {
                                is_max = false;
                                break;
                            }
                        }
                    }
                }
                if (!is_max) continue;

                const std::int32_t scale = interpolate_scale(
                    prev.response(gc, gr), r, next.response(gc, gr), filter_scale_fp8(prev.filter_size()),
                    filter_scale_fp8(mid.filter_size()), filter_scale_fp8(next.filter_size()));
                candidates.push_back({gc * params.stride, gr * params.stride, scale, r});
            }
        }
    }

    std::sort(candidates.begin(), candidates.end(), stronger);
    std::vector<Keypoint> kept = suppress_imbricated(candidates, params.imbrication_radius);
    if (params.max_keypoints && kept.size() > *params.max_keypoints) kept.resize(*params.max_keypoints);
    return kept;
}

}  // namespace kpboost
