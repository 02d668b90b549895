#pragma once

// Exact scalars and the binary-string <-> dyadic-interval correspondence.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cutstack {

/// Arbitrary-precision rational, always canonical (lowest terms, q > 0).
using Rational = mpq_class;
using BigInt = mpz_class;

/// p/q reduced to lowest terms. Use this instead of the two-argument mpq_class
/// constructor, which does not canonicalize.
Rational ratio(long p, long q);

/// 2^e for any integer e (negative exponents give 1/2^|e|).
Rational pow2(long e);

/// "p/q" with q > 0; integers are rendered "p/1".
std::string to_string(const Rational& x);

/// Accepts "p/q", "p", or a finite decimal such as "0.125". Throws Error on junk.
Rational parse_rational(std::string_view text);

/// Truncated decimal rendering with `digits` fractional digits (round half away from zero).
std::string to_decimal(const Rational& x, int digits);

bool is_dyadic(const Rational& x);
/// Exponent n with denominator == 2^n; requires is_dyadic(x).
unsigned dyadic_exponent(const Rational& x);

BigInt floor_of(const Rational& x);
BigInt ceil_of(const Rational& x);

long double to_long_double(const Rational& x);

/// Exact test of M <= 2^k for integer k (possibly negative).
bool le_pow2(const Rational& m, long k);

/// Half-open interval [lo, hi) with exact endpoints.
struct Interval {
  Rational lo;
  Rational hi;

  Rational length() const { return hi - lo; }
  bool contains(const Rational& x) const { return lo <= x && x < hi; }
  bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
  bool overlaps(const Interval& other) const { return lo < other.hi && other.lo < hi; }
  bool empty() const { return hi <= lo; }

  friend bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
};

/// Intersection; empty result has hi <= lo.
Interval intersect(const Interval& a, const Interval& b);

/// Finite binary string. Bits are stored as '0'/'1' characters.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::string bits);

  static BitString from_uint(std::uint64_t value, unsigned length);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  int operator[](std::size_t i) const { return bits_[i] == '1' ? 1 : 0; }

  void push_back(int bit) { bits_.push_back(bit ? '1' : '0'); }
  BitString prefix(std::size_t n) const { return BitString(bits_.substr(0, n), Raw{}); }
  BitString suffix_from(std::size_t n) const { return BitString(bits_.substr(n), Raw{}); }
  bool is_prefix_of(const BitString& other) const;
  std::size_t ones() const;

  BitString& operator+=(const BitString& other) {
    bits_ += other.bits_;
    return *this;
  }
  friend BitString operator+(BitString a, const BitString& b) { return a += b; }

  const std::string& str() const { return bits_; }

  friend bool operator==(const BitString&, const BitString&) = default;
  friend auto operator<=>(const BitString& a, const BitString& b) { return a.bits_ <=> b.bits_; }

 private:
  struct Raw {};
  BitString(std::string bits, Raw) : bits_(std::move(bits)) {}
  std::string bits_;
};

/// [left, left + 2^-len_exp) with a dyadic left endpoint.
struct DyadicInterval {
  Rational left;
  unsigned len_exp = 0;

  Rational length() const { return pow2(-static_cast<long>(len_exp)); }
  Rational right() const { return left + length(); }
  Interval interval() const { return {left, right()}; }

  friend bool operator==(const DyadicInterval& a, const DyadicInterval& b) {
    return a.left == b.left && a.len_exp == b.len_exp;
  }
};

/// [0.x, 0.x + 2^-l(x)); the empty string maps to [0,1).
DyadicInterval string_to_interval(const BitString& x);

/// Inverse of string_to_interval.
BitString interval_to_string(const DyadicInterval& d);

/// Leftmost dyadic interval inside [lo, hi) whose length is at least (hi-lo)/4;
/// among equally-left candidates the longest wins. Requires 0 <= lo < hi <= 1.
DyadicInterval dyadic_subinterval(const Rational& lo, const Rational& hi);

}  // namespace cutstack
