#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "kpboost/detector.hpp"
#include "kpboost/image.hpp"

namespace kpboost {

inline constexpr int kDescriptorSize = 64;
/// Every non-flat descriptor has an L1 norm of exactly this value.
inline constexpr int kDescriptorNorm = 4096;

/// 4x4 sub-regions, row-major; each holds (sum dx, sum |dx|, sum dy, sum |dy|).
struct Descriptor {
    std::array<std::int16_t, kDescriptorSize> values{};

    bool is_zero() const noexcept;
    bool operator==(const Descriptor&) const = default;
};

/// What to do with keypoints whose sampling window leaves the image.
enum class BorderPolicy {
    // Skip the keypoint unless the whole window plus Haar support is inside.
    Skip,
    // Drop the lattice samples whose Haar support leaves the image; skip the
    // keypoint only when fewer than half of the samples remain.
    PartialWindow,
};

struct DescriptorParams {
    BorderPolicy border = BorderPolicy::PartialWindow;
};

struct Gradient {
    std::int64_t dx = 0;
    std::int64_t dy = 0;
};

/// Haar wavelet responses of side `size` (even) centered at (cx, cy).
/// dx = right half - left half, dy = bottom half - top half.
Gradient haar_gradient(const IntegralImage& ii, int cx, int cy, int size);

/// Returns std::nullopt ("unbounded") when the keypoint is too close to the border.
std::optional<Descriptor> compute_descriptor(const IntegralImage& ii, const Keypoint& k,
                                             const DescriptorParams& params = {});

/// Scales raw sums to an L1 norm of kDescriptorNorm with deterministic residual repair.
Descriptor normalize_descriptor(const std::array<std::int32_t, kDescriptorSize>& raw);

/// Sum of absolute differences (L1 distance).
std::uint32_t sad(const Descriptor& a, const Descriptor& b) noexcept;

/// FP8 bilinear weight of lattice sample index i (0..19) along one axis for sub-region bin (0..3).
/// The weights of one sample sum to 256.
int lattice_weight(int i, int bin) noexcept;

}  // namespace kpboost
