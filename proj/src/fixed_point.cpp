#include "kpboost/fixed_point.hpp"

#include <array>
#include <bit>

namespace kpboost {

namespace {

constexpr int kTableBits = 10;
constexpr int kTableSize = 1 << kTableBits;

// ln(m) = 2 atanh((m - 1) / (m + 1)); for m in [1, 2] the ratio is <= 1/3 and 40 terms
// are far below double precision. Evaluated by the compiler, so the table is fixed bits.
constexpr double ln_series(double m) {
    const double z = (m - 1.0) / (m + 1.0);
    const double z2 = z * z;
    double term = z;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
        sum += term / (2 * k + 1);
        term *= z2;
    }
    return 2.0 * sum;
}

constexpr std::array<std::int64_t, kTableSize + 1> make_table() {
    std::array<std::int64_t, kTableSize + 1> t{};
    for (int i = 0; i <= kTableSize; ++i) {
        const double v = ln_series(1.0 + static_cast<double>(i) / kTableSize) * static_cast<double>(kFp20One);
        t[i] = static_cast<std::int64_t>(v + 0.5);
    }
    return t;
}

constexpr auto kLnTable = make_table();

// ln(2) in FP40: scaled up so k * ln2 keeps 20 exact fractional bits after the shift.
constexpr std::int64_t kLn2Fp40 = 762123384786LL;

}  // namespace

std::int64_t ln_table_entry(int i) noexcept { return kLnTable[i]; }

std::int64_t ln_fp20(std::uint64_t x) noexcept {
    if (x <= 1) return 0;
    const int k = 63 - std::countl_zero(x);
    // Normalize the leading one to bit 63; the 63 bits below it are the mantissa fraction.
    const std::uint64_t frac = (x << (63 - k)) << 1;
    const int idx = static_cast<int>(frac >> (64 - kTableBits));
    const std::uint64_t rem = (frac << kTableBits) >> 43;  // next 21 bits
    const std::int64_t lo = kLnTable[idx];
    const std::int64_t hi = kLnTable[idx + 1];
    const std::int64_t mant = lo + static_cast<std::int64_t>(((hi - lo) * static_cast<std::int64_t>(rem)) >> 21);
    return ((k * kLn2Fp40) >> 20) + mant;
}

}  // namespace kpboost
