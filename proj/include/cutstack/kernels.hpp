#pragma once

// Exhaustive enumeration kernels. Each has a serial reference and an OpenMP
// version; tests assert they agree and the benchmark compares them.

#include <cstdint>

namespace cutstack::kernels {

/// Number of strings of length n (n <= 30) whose ones count k has |2k - n| >= t2,
/// where t2 = 2 n eps is passed as an exact fraction t2_num / t2_den.
std::uint64_t lln_violations_serial(unsigned n, std::uint64_t t2_num, std::uint64_t t2_den);
std::uint64_t lln_violations_parallel(unsigned n, std::uint64_t t2_num, std::uint64_t t2_den);

/// Over all strings of length m (m <= 30), counts of max_{1<=k<=m} (2 S_k - k) > a2 and
/// of 2 S_m - m > a2.
struct MaxCounts {
  std::uint64_t max_exceeds = 0;
  std::uint64_t end_exceeds = 0;
};
MaxCounts max_inequality_serial(unsigned m, long long a2);
MaxCounts max_inequality_parallel(unsigned m, long long a2);

/// Strings of length m_hi whose walk first satisfies 2 S_k - k > 2T at some k in
/// [m_lo, m_hi]; crossing decided by lil_crosses.
std::uint64_t lil_cover_count_serial(unsigned m_lo, unsigned m_hi, long double threshold);
std::uint64_t lil_cover_count_parallel(unsigned m_lo, unsigned m_hi, long double threshold);

/// Round-trips every string of length <= max_len through the LZ78 coder; returns
/// the number of failures.
std::uint64_t lz78_roundtrip_failures_serial(unsigned max_len);
std::uint64_t lz78_roundtrip_failures_parallel(unsigned max_len);

/// Sum over all strings of length 12 of the LZ78 code length (for the mean ratio).
std::uint64_t lz78_total_bits_serial(unsigned len);
std::uint64_t lz78_total_bits_parallel(unsigned len);

}  // namespace cutstack::kernels
