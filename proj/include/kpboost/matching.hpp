#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kpboost/descriptor.hpp"
#include "kpboost/detector.hpp"

namespace kpboost {

/// Distance reported for an image without any keypoint.
inline constexpr std::uint32_t kNoKeypointDistance = std::numeric_limits<std::int32_t>::max();

struct FeatureParams {
    DetectorParams detector;
    DescriptorParams descriptor;
};

/// Keypoints of one image together with their descriptors; border-skipped keypoints are absent.
struct ImageFeatures {
    std::string id;
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;

    std::size_t size() const noexcept { return descriptors.size(); }
    bool empty() const noexcept { return descriptors.empty(); }
};

ImageFeatures extract_features(const GrayImage& img, const FeatureParams& params = {}, std::string id = {});

/// Smallest SAD between d and any descriptor of the image; kNoKeypointDistance if none.
std::uint32_t dist_to_image(const Descriptor& d, const ImageFeatures& feats) noexcept;

/// One row of the distance matrix: a keypoint found on a positive training image.
struct PositiveKeypoint {
    std::size_t column = 0;  // training image (matrix column) it was found on
    Keypoint keypoint;
    Descriptor descriptor;
};

/// Q x N keypoint-to-image distances. Columns are the positives then the negatives,
/// each in ingestion order. `order` holds, per row, the column indices sorted by
/// ascending distance (ties by column index).
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::uint32_t at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::uint32_t& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    std::span<const std::uint32_t> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<const std::uint32_t> row_order(std::size_t i) const { return {order_.data() + i * cols_, cols_}; }

    /// Recomputes the per-row ascending orders; call after filling entries.
    void sort_rows();

    std::vector<PositiveKeypoint> provenance;
    std::vector<std::string> column_ids;
    std::vector<std::uint8_t> labels;  // 1 for positive columns

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint32_t> data_;
    std::vector<std::uint32_t> order_;
};

/// Builds the matrix from the union of all positive keypoints. Throws ContractError when
/// the positives hold no keypoint at all.
DistanceMatrix build_distance_matrix(std::span<const ImageFeatures> positives, std::span<const ImageFeatures> negatives);

/// Debug dump: header `row,src,kx,ky,kscale_fp8,<column ids...>` then one line per row.
void write_distance_matrix_csv(const DistanceMatrix& m, const std::string& path);

}  // namespace kpboost
