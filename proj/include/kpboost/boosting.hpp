#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kpboost/descriptor.hpp"
#include "kpboost/fixed_point.hpp"
#include "kpboost/matching.hpp"

namespace kpboost {

/// "Keypoint presence" feature: answers 1 on an image iff some keypoint of the image lies
/// within SAD distance < threshold of the reference descriptor.
struct WeakClassifier {
    Descriptor descriptor;
    std::uint32_t threshold = 0;
    std::int64_t alpha = 0;  // FP20
    // Where the reference keypoint came from; used to learn localization votes.
    std::string source_id;
    int kx = 0;
    int ky = 0;
    std::int32_t kscale = kFp8One;

    bool operator==(const WeakClassifier&) const = default;
};

/// ceil(sum alpha / 2): score >= theta is exactly score >= half the alpha sum.
std::int64_t half_alpha_sum(std::span<const WeakClassifier> weaks) noexcept;

struct StrongClassifier {
    std::vector<WeakClassifier> weaks;
    std::int64_t default_theta = 0;  // FP20

    static StrongClassifier from_weaks(std::vector<WeakClassifier> weaks);
    /// First n weak classifiers with their own default threshold.
    StrongClassifier prefix(std::size_t n) const;
    std::int64_t alpha_sum() const noexcept;

    bool operator==(const StrongClassifier&) const = default;
};

bool weak_eval(const WeakClassifier& w, const ImageFeatures& feats) noexcept;

/// Ceil-midpoints of successive distinct finite values of an ascending row. Ceiling keeps
/// a < T <= b, so the strict test dist < T separates a from b even when b == a + 1.
std::vector<std::uint32_t> candidate_thresholds(std::span<const std::uint32_t> sorted_row);

struct ThresholdChoice {
    std::uint32_t threshold = 0;  // 0: no candidate
    std::uint64_t error = 0;      // weighted error, same units as the weights
};

/// One O(N) sweep over a row in ascending order. Errors within `tolerance` of the best so far
/// count as ties and the smaller threshold is kept. Without candidates returns
/// {0, weight of all positives}.
ThresholdChoice best_threshold(std::span<const std::uint32_t> row_order, std::span<const std::uint32_t> row,
                               std::span<const std::uint64_t> weights, std::span<const std::uint8_t> labels,
                               std::uint64_t tolerance = 0);

/// Tie tolerance for weighted-error comparisons: one rounding unit per example, relative to the total weight.
std::uint64_t error_tolerance(std::span<const std::uint64_t> weights) noexcept;

struct RoundRecord {
    std::size_t row = 0;
    std::uint32_t threshold = 0;
    std::uint64_t weighted_error = 0;  // FP32 of the normalized weight total
    std::int64_t alpha = 0;
    std::size_t train_errors = 0;  // strong classifier of this prefix, at its default theta
};

struct TrainResult {
    StrongClassifier model;
    std::vector<RoundRecord> trace;
};

/// Discrete AdaBoost over the matrix rows (labels and provenance come from the matrix).
TrainResult train_adaboost(const DistanceMatrix& m, int rounds);

/// Sum of alpha over the weak classifiers answering 1.
std::int64_t strong_score(const StrongClassifier& s, const ImageFeatures& feats) noexcept;

/// Model file "KPBOOST/1".
void save_model(const StrongClassifier& s, const std::filesystem::path& path);
StrongClassifier load_model(const std::filesystem::path& path);
void write_model(const StrongClassifier& s, std::ostream& out);
StrongClassifier read_model(std::istream& in, const std::string& name = "<stream>");

}  // namespace kpboost
