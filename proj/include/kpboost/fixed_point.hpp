#pragma once

#include <cstdint>

namespace kpboost {

inline constexpr int kFp20Bits = 20;
inline constexpr std::int64_t kFp20One = std::int64_t{1} << kFp20Bits;
inline constexpr int kFp32Bits = 32;
inline constexpr std::uint64_t kFp32One = std::uint64_t{1} << kFp32Bits;

/// Natural logarithm of x >= 1 in FP20, from a 1024-interval table of ln(1 + i/1024)
/// with linear interpolation. Integer-only at run time; error below 2^-16.
std::int64_t ln_fp20(std::uint64_t x) noexcept;

/// Table entry i (0..1024): round(ln(1 + i/1024) * 2^20).
std::int64_t ln_table_entry(int i) noexcept;

}  // namespace kpboost
