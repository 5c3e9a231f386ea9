#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "kpboost/boosting.hpp"
#include "kpboost/corpus.hpp"
#include "kpboost/localization.hpp"
#include "kpboost/matching.hpp"

namespace kpboost {

/// Features of every sample, in order, with the sample name as image id.
std::vector<ImageFeatures> extract_all(std::span<const Sample> samples, const FeatureParams& params = {});

inline constexpr std::int64_t kThetaPlusInfinity = std::numeric_limits<std::int64_t>::max();
inline constexpr std::int64_t kThetaMinusInfinity = std::numeric_limits<std::int64_t>::min();

struct PRRow {
    std::int64_t theta = 0;  // FP20; predicted positive iff score >= theta
    std::int64_t precision_fp20 = 0;
    std::int64_t recall_fp20 = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Rows in descending theta: +inf, every distinct score, -inf. Precision is 1 when nothing is
/// predicted positive; recall is 0 when there is no positive example.
using PRCurve = std::vector<PRRow>;

PRCurve pr_curve(std::span<const std::int64_t> scores, std::span<const std::uint8_t> labels);

PRCurve eval_pr(const StrongClassifier& model, std::span<const ImageFeatures> positives,
                std::span<const ImageFeatures> negatives);

/// Highest recall among rows whose precision is at least `min_precision_fp20`.
std::int64_t max_recall_at_precision(const PRCurve& curve, std::int64_t min_precision_fp20) noexcept;

struct CurveRow {
    std::size_t round = 0;
    std::size_t train_wrong = 0;
    std::size_t train_total = 0;
    std::size_t test_wrong = 0;
    std::size_t test_total = 0;

    std::int64_t train_error_fp20() const noexcept;
    std::int64_t test_error_fp20() const noexcept;
};

/// Per boosting round t: training error from the trace and test error of the first t weak
/// classifiers at their own default theta. An empty trace leaves train columns at zero.
std::vector<CurveRow> error_curve(const StrongClassifier& model, std::span<const RoundRecord> trace,
                                  std::size_t n_train, std::span<const ImageFeatures> test_positives,
                                  std::span<const ImageFeatures> test_negatives);

void write_pr_csv(const PRCurve& curve, std::ostream& out);
void write_curve_csv(std::span<const CurveRow> rows, std::ostream& out);
void write_keypoints_csv(std::span<const Keypoint> kps, std::ostream& out);
void write_detections_csv(std::span<const Detection> dets, std::ostream& out);
void write_trace_csv(std::span<const RoundRecord> trace, std::size_t n_train, std::ostream& out);
/// Reads what write_trace_csv wrote; returns the trace and sets n_train.
std::vector<RoundRecord> read_trace_csv(std::istream& in, std::size_t& n_train);

}  // namespace kpboost
