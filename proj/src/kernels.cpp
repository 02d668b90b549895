#include "cutstack/kernels.hpp"

#include <bit>
#include <cstdlib>

#include "cutstack/lz78.hpp"
#include "cutstack/solovay.hpp"

namespace cutstack::kernels {

namespace {

// |2k - n| * den >= num
bool lln_violates(unsigned n, unsigned k, std::uint64_t num, std::uint64_t den) {
  const long long d = 2LL * k - static_cast<long long>(n);
  return static_cast<std::uint64_t>(std::llabs(d)) * den >= num;
}

MaxCounts max_one(std::uint64_t v, unsigned m, long long a2) {
  MaxCounts c;
  long long walk = 0, best = 0;
  bool any = false;
  for (unsigned k = 0; k < m; ++k) {
    walk += ((v >> k) & 1u) ? 1 : -1;
    if (!any || walk > best) best = walk;
    any = true;
  }
  c.max_exceeds = best > a2;
  c.end_exceeds = walk > a2;
  return c;
}

bool lil_one(std::uint64_t v, unsigned m_lo, unsigned m_hi, long double threshold) {
  long long walk = 0;
  for (unsigned k = 1; k <= m_hi; ++k) {
    walk += ((v >> (k - 1)) & 1u) ? 1 : -1;
    if (k >= m_lo && lil_crosses(walk, threshold)) return true;
  }
  return false;
}

bool lz78_roundtrip_one(std::uint64_t v, unsigned len) {
  BitString x = BitString::from_uint(v, len);
  auto parse = lz78_encode(x);
  if (lz78_decode(parse) != x) return false;
  auto code = lz78_bits(parse);
  if (code.size() != parse.code_length) return false;
  return lz78_decode_bits(code, len) == x;
}

}  // namespace

std::uint64_t lln_violations_serial(unsigned n, std::uint64_t num, std::uint64_t den) {
  std::uint64_t count = 0;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v)
    count += lln_violates(n, static_cast<unsigned>(std::popcount(v)), num, den);
  return count;
}

std::uint64_t lln_violations_parallel(unsigned n, std::uint64_t num, std::uint64_t den) {
  std::uint64_t count = 0;
  const long long total = 1LL << n;
#pragma omp parallel for reduction(+ : count) schedule(static)
  for (long long v = 0; v < total; ++v)
    count += lln_violates(n, static_cast<unsigned>(std::popcount(static_cast<std::uint64_t>(v))), num, den);
  return count;
}

MaxCounts max_inequality_serial(unsigned m, long long a2) {
  MaxCounts c;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << m); ++v) {
    auto one = max_one(v, m, a2);
    c.max_exceeds += one.max_exceeds;
    c.end_exceeds += one.end_exceeds;
  }
  return c;
}

MaxCounts max_inequality_parallel(unsigned m, long long a2) {
  std::uint64_t mx = 0, en = 0;
  const long long total = 1LL << m;
#pragma omp parallel for reduction(+ : mx, en) schedule(static)
  for (long long v = 0; v < total; ++v) {
    auto one = max_one(static_cast<std::uint64_t>(v), m, a2);
    mx += one.max_exceeds;
    en += one.end_exceeds;
  }
  return {mx, en};
}

std::uint64_t lil_cover_count_serial(unsigned m_lo, unsigned m_hi, long double threshold) {
  std::uint64_t count = 0;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << m_hi); ++v) count += lil_one(v, m_lo, m_hi, threshold);
  return count;
}

std::uint64_t lil_cover_count_parallel(unsigned m_lo, unsigned m_hi, long double threshold) {
  std::uint64_t count = 0;
  const long long total = 1LL << m_hi;
#pragma omp parallel for reduction(+ : count) schedule(static)
  for (long long v = 0; v < total; ++v) count += lil_one(static_cast<std::uint64_t>(v), m_lo, m_hi, threshold);
  return count;
}

std::uint64_t lz78_roundtrip_failures_serial(unsigned max_len) {
  std::uint64_t bad = 0;
  for (unsigned len = 0; len <= max_len; ++len)
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) bad += !lz78_roundtrip_one(v, len);
  return bad;
}

std::uint64_t lz78_roundtrip_failures_parallel(unsigned max_len) {
  std::uint64_t bad = 0;
  for (unsigned len = 0; len <= max_len; ++len) {
    const long long total = 1LL << len;
#pragma omp parallel for reduction(+ : bad) schedule(dynamic, 256)
    for (long long v = 0; v < total; ++v) bad += !lz78_roundtrip_one(static_cast<std::uint64_t>(v), len);
  }
  return bad;
}

std::uint64_t lz78_total_bits_serial(unsigned len) {
  std::uint64_t bits = 0;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) bits += lz78_encode(BitString::from_uint(v, len)).code_length;
  return bits;
}

std::uint64_t lz78_total_bits_parallel(unsigned len) {
  std::uint64_t bits = 0;
  const long long total = 1LL << len;
#pragma omp parallel for reduction(+ : bits) schedule(dynamic, 256)
  for (long long v = 0; v < total; ++v)
    bits += lz78_encode(BitString::from_uint(static_cast<std::uint64_t>(v), len)).code_length;
  return bits;
}

}  // namespace cutstack::kernels
