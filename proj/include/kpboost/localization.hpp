#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kpboost/boosting.hpp"
#include "kpboost/matching.hpp"

namespace kpboost {

/// Mean geometric vote of one weak classifier, in units of keypoint scale (FP8):
/// offset from keypoint to object center and object extent.
struct Vote {
    std::size_t weak = 0;  // index into the model's weak classifiers
    std::int32_t vx = 0;
    std::int32_t vy = 0;
    std::int32_t vw = 0;
    std::int32_t vh = 0;
    std::size_t support = 0;

    bool operator==(const Vote&) const = default;
};

/// Entries only for weak classifiers matched at least once during learning, ascending by `weak`.
struct VoteTable {
    std::vector<Vote> votes;

    bool empty() const noexcept { return votes.empty(); }
    bool operator==(const VoteTable&) const = default;
};

struct LabeledFeatures {
    const ImageFeatures* features = nullptr;
    Rect truth;
};

/// Vote sample of one keypoint for a box: ((cx - x)/s, (cy - y)/s, w/s, h/s) in FP8.
Vote vote_sample(const Keypoint& k, const Rect& truth) noexcept;

VoteTable learn_votes(const StrongClassifier& model, std::span<const LabeledFeatures> positives);

struct Detection {
    Rect box;
    std::int64_t score = 0;  // FP20 vote mass
};

struct HoughParams {
    std::int64_t min_mass = 0;  // FP20
    int cell_size = 8;
    // Detections overlapping by more than this IoU (FP8) are merged.
    std::int32_t merge_iou_fp8 = 128;
};

/// Intersection over union in FP8 (256 == identical boxes).
std::int32_t iou_fp8(const Rect& a, const Rect& b) noexcept;

std::vector<Detection> hough_detect(const StrongClassifier& model, const VoteTable& votes, const ImageFeatures& frame,
                                    int frame_width, int frame_height, const HoughParams& params);

/// Vote table file "KPVOTES/1".
void save_votes(const VoteTable& t, const std::filesystem::path& path);
VoteTable load_votes(const std::filesystem::path& path);

}  // namespace kpboost
