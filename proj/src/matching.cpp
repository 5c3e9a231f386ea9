#include "kpboost/matching.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "kpboost/error.hpp"

namespace kpboost {

ImageFeatures extract_features(const GrayImage& img, const FeatureParams& params, std::string id) {
    const IntegralImage ii(img);
    ImageFeatures f;
    f.id = std::move(id);
    for (const Keypoint& k : detect_keypoints(ii, params.detector)) {
        if (auto d = compute_descriptor(ii, k, params.descriptor)) {
            f.keypoints.push_back(k);
            f.descriptors.push_back(*d);
        }
    }
    return f;
}

std::uint32_t dist_to_image(const Descriptor& d, const ImageFeatures& feats) noexcept {
    std::uint32_t best = kNoKeypointDistance;
    for (const Descriptor& e : feats.descriptors) best = std::min(best, sad(d, e));
    return best;
}

DistanceMatrix::DistanceMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, kNoKeypointDistance), order_(rows * cols, 0) {}

void DistanceMatrix::sort_rows() {
    for (std::size_t i = 0; i < rows_; ++i) {
        auto order = std::span<std::uint32_t>(order_.data() + i * cols_, cols_);
        std::iota(order.begin(), order.end(), 0u);
        const auto r = row(i);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return r[a] < r[b]; });
    }
}

DistanceMatrix build_distance_matrix(std::span<const ImageFeatures> positives,
                                     std::span<const ImageFeatures> negatives) {
    std::vector<PositiveKeypoint> rows;
    for (std::size_t p = 0; p < positives.size(); ++p)
        for (std::size_t k = 0; k < positives[p].size(); ++k)
            rows.push_back({p, positives[p].keypoints[k], positives[p].descriptors[k]});
    if (rows.empty()) throw ContractError("build_distance_matrix: no keypoint on any positive image, training impossible");

    const std::size_t n = positives.size() + negatives.size();
    DistanceMatrix m(rows.size(), n);
    for (std::size_t j = 0; j < n; ++j) {
        const ImageFeatures& img = j < positives.size() ? positives[j] : negatives[j - positives.size()];
        m.column_ids.push_back(img.id);
        m.labels.push_back(j < positives.size() ? 1 : 0);
        for (std::size_t i = 0; i < rows.size(); ++i) m.at(i, j) = dist_to_image(rows[i].descriptor, img);
    }
    m.provenance = std::move(rows);
    m.sort_rows();
    return m;
}

void write_distance_matrix_csv(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "row,src,kx,ky,kscale_fp8";
    for (const auto& id : m.column_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const PositiveKeypoint& p = m.provenance[i];
        out << i << ',' << m.column_ids[p.column] << ',' << p.keypoint.x << ',' << p.keypoint.y << ','
            << p.keypoint.scale;
        for (std::uint32_t v : m.row(i)) out << ',' << v;
        out << '\n';
    }
    if (!out) throw IoError(path + ": write failed");
}

}  // namespace kpboost
