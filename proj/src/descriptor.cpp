#include "kpboost/descriptor.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "kpboost/error.hpp"

namespace kpboost {

namespace {

constexpr int kLattice = 20;
constexpr int kBins = 4;
constexpr int kSamplesPerBin = kLattice / kBins;

// Per-axis weights: sample i has its fractional bin coordinate at (i + 0.5) / 5, and
// bins centers sit at 0.5, 1.5, 2.5, 3.5.
struct AxisTable {
    std::array<std::array<int, kBins>, kLattice> w{};

    constexpr AxisTable() {
        for (int i = 0; i < kLattice; ++i) {
            const int t = i - kSamplesPerBin / 2;  // (u - 0.5) * 5
            const int lo = t >= 0 ? t / kSamplesPerBin : -1;
            const int rem = t - lo * kSamplesPerBin;
            const int frac = (rem * kFp8One * 2 + kSamplesPerBin) / (2 * kSamplesPerBin);
            if (lo < 0) {
                w[i][0] = kFp8One;
            } else if (lo + 1 >= kBins) {
                w[i][kBins - 1] = kFp8One;
            } else {
                w[i][lo] = kFp8One - frac;
                w[i][lo + 1] = frac;
            }
        }
    }
};

constexpr AxisTable kAxis{};

// Up to four (bin, weight) pairs per 2D sample; weights sum to 256.
struct SampleWeights {
    int count = 0;
    std::array<int, 4> bin{};
    std::array<int, 4> weight{};
};

struct LatticeTable {
    std::array<SampleWeights, kLattice * kLattice> cells{};

    LatticeTable() {
        for (int j = 0; j < kLattice; ++j) {
            for (int i = 0; i < kLattice; ++i) {
                SampleWeights& s = cells[j * kLattice + i];
                int total = 0;
                int largest = 0;
                for (int by = 0; by < kBins; ++by) {
                    for (int bx = 0; bx < kBins; ++bx) {
                        const int wy = kAxis.w[j][by];
                        const int wx = kAxis.w[i][bx];
                        if (wx == 0 || wy == 0) continue;
                        const int w = wx * wy / kFp8One;
                        s.bin[s.count] = by * kBins + bx;
                        s.weight[s.count] = w;
                        if (w > s.weight[largest]) largest = s.count;
                        total += w;
                        ++s.count;
                    }
                }
                s.weight[largest] += kFp8One - total;
            }
        }
    }
};

const LatticeTable& lattice() {
    static const LatticeTable table;
    return table;
}

int round_fp8(std::int64_t v) { return static_cast<int>((v + kFp8One / 2) / kFp8One); }

}  // namespace

bool Descriptor::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](std::int16_t v) { return v == 0; });
}

int lattice_weight(int i, int bin) noexcept {
    if (i < 0 || i >= kLattice || bin < 0 || bin >= kBins) return 0;
    return kAxis.w[i][bin];
}

Gradient haar_gradient(const IntegralImage& ii, int cx, int cy, int size) {
    if (size < 2 || size % 2 != 0) throw ContractError("haar_gradient: size must be even and >= 2");
    const int h = size / 2;
    if (!ii.contains({cx - h, cy - h, size, size})) throw ContractError("haar_gradient: support outside image");
    return {ii.box_sum_unchecked(cx, cy - h, h, size) - ii.box_sum_unchecked(cx - h, cy - h, h, size),
            ii.box_sum_unchecked(cx - h, cy, size, h) - ii.box_sum_unchecked(cx - h, cy - h, size, h)};
}

Descriptor normalize_descriptor(const std::array<std::int32_t, kDescriptorSize>& raw) {
    Descriptor d;
    std::int64_t l1 = 0;
    for (std::int32_t v : raw) l1 += std::abs(static_cast<std::int64_t>(v));
    if (l1 == 0) return d;

    int sum = 0;
    for (int i = 0; i < kDescriptorSize; ++i) {
        d.values[i] = static_cast<std::int16_t>(static_cast<std::int64_t>(raw[i]) * kDescriptorNorm / l1);
        sum += std::abs(d.values[i]);
    }

    // Truncation leaves 0 <= residual < 64; add one unit of magnitude to the largest entries.
    // On equal magnitude the |.|-sum slot goes first so |sum d| <= sum |d| survives the repair.
    int residual = kDescriptorNorm - sum;
    if (residual > 0) {
        std::array<int, kDescriptorSize> order;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const int ma = std::abs(d.values[a]);
            const int mb = std::abs(d.values[b]);
            if (ma != mb) return ma > mb;
            const bool abs_a = a % 2 == 1;
            const bool abs_b = b % 2 == 1;
            if (abs_a != abs_b) return abs_a;
            return a < b;
        });
        for (int k = 0; k < residual; ++k) {
            const int i = order[k];
            const bool negative = d.values[i] < 0 || (d.values[i] == 0 && raw[i] < 0);
            d.values[i] = static_cast<std::int16_t>(d.values[i] + (negative ? -1 : 1));
        }
    }
    return d;
}

std::optional<Descriptor> compute_descriptor(const IntegralImage& ii, const Keypoint& k,
                                             const DescriptorParams& params) {
    const int window = round_fp8(static_cast<std::int64_t>(20) * k.scale);
    const int haar = std::max(2, 2 * round_fp8(k.scale));
    const int pad = round_fp8(static_cast<std::int64_t>(2) * k.scale);
    const int x0 = k.x - window / 2;
    const int y0 = k.y - window / 2;

    if (params.border == BorderPolicy::Skip) {
        const Rect outer{x0 - pad, y0 - pad, window + 2 * pad, window + 2 * pad};
        if (!ii.contains(outer)) return std::nullopt;
    }

    const int h = haar / 2;
    std::array<std::int32_t, kDescriptorSize> raw{};
    int used = 0;
    const LatticeTable& table = lattice();
    for (int j = 0; j < kLattice; ++j) {
        const int py = y0 + ((2 * j + 1) * window) / (2 * kLattice);
        if (py - h < 0 || py + h > ii.height()) continue;
        for (int i = 0; i < kLattice; ++i) {
            const int px = x0 + ((2 * i + 1) * window) / (2 * kLattice);
            if (px - h < 0 || px + h > ii.width()) continue;
            const std::int64_t dx = ii.box_sum_unchecked(px, py - h, h, haar) - ii.box_sum_unchecked(px - h, py - h, h, haar);
            const std::int64_t dy = ii.box_sum_unchecked(px - h, py, haar, h) - ii.box_sum_unchecked(px - h, py - h, haar, h);
            ++used;
            const SampleWeights& s = table.cells[j * kLattice + i];
            for (int c = 0; c < s.count; ++c) {
                std::int32_t* q = &raw[s.bin[c] * 4];
                const std::int64_t w = s.weight[c];
                q[0] += static_cast<std::int32_t>(w * dx);
                q[1] += static_cast<std::int32_t>(w * (dx < 0 ? -dx : dx));
                q[2] += static_cast<std::int32_t>(w * dy);
                q[3] += static_cast<std::int32_t>(w * (dy < 0 ? -dy : dy));
            }
        }
    }
    if (2 * used < kLattice * kLattice) return std::nullopt;
    return normalize_descriptor(raw);
}

std::uint32_t sad(const Descriptor& a, const Descriptor& b) noexcept {
    std::uint32_t s = 0;
    for (int i = 0; i < kDescriptorSize; ++i) {
        const int d = a.values[i] - b.values[i];
        s += static_cast<std::uint32_t>(d < 0 ? -d : d);
    }
    return s;
}

}  // namespace kpboost
