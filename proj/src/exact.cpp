#include "cutstack/exact.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include "cutstack/error.hpp"

namespace cutstack {

Rational ratio(long p, long q) {
  if (q == 0) throw Error(Module::exact, "zero_denominator", "zero denominator");
  Rational r(p, q);
  r.canonicalize();
  return r;
}

Rational pow2(long e) {
  BigInt p;
  mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(e < 0 ? -e : e));
  if (e >= 0) return Rational(p);
  Rational r(BigInt(1), p);
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& x) {
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

namespace {

[[noreturn]] void bad_rational(std::string_view text) {
  throw Error(Module::exact, "bad_rational", "cannot parse rational '" + std::string(text) + "'");
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

BigInt parse_integer(std::string_view s, std::string_view whole) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) bad_rational(whole);
  BigInt v(std::string(s), 10);
  return neg ? BigInt(-v) : v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) bad_rational(text);

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt p = parse_integer(text.substr(0, slash), text);
    std::string_view qs = text.substr(slash + 1);
    if (!all_digits(qs)) bad_rational(text);
    BigInt q(std::string(qs), 10);
    if (q == 0) bad_rational(text);
    Rational r(p, q);
    r.canonicalize();
    return r;
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = text.substr(dot + 1);
    bool neg = !ip.empty() && ip.front() == '-';
    if (!ip.empty() && (ip.front() == '-' || ip.front() == '+')) ip.remove_prefix(1);
    if (ip.empty()) ip = "0";
    if (!all_digits(ip) || !all_digits(fp)) bad_rational(text);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
    BigInt num = BigInt(std::string(ip), 10) * scale + BigInt(std::string(fp), 10);
    Rational r(neg ? BigInt(-num) : num, scale);
    r.canonicalize();
    return r;
  }
  return Rational(parse_integer(text, text));
}

std::string to_decimal(const Rational& x, int digits) {
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
  Rational scaled = abs(x) * scale;
  BigInt q = floor_of(scaled + ratio(1, 2));
  std::string s = q.get_str();
  if (static_cast<int>(s.size()) <= digits) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
  std::string out = s.substr(0, s.size() - static_cast<std::size_t>(digits));
  if (digits > 0) out += "." + s.substr(s.size() - static_cast<std::size_t>(digits));
  if (x < 0 && q != 0) out.insert(0, "-");
  return out;
}

bool is_dyadic(const Rational& x) {
  const BigInt& q = x.get_den();
  return mpz_popcount(q.get_mpz_t()) == 1;
}

unsigned dyadic_exponent(const Rational& x) {
  if (!is_dyadic(x)) throw Error(Module::exact, "not_dyadic", to_string(x) + " is not dyadic");
  return static_cast<unsigned>(mpz_scan1(x.get_den().get_mpz_t(), 0));
}

BigInt floor_of(const Rational& x) {
  BigInt r;
  mpz_fdiv_q(r.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return r;
}

BigInt ceil_of(const Rational& x) {
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return r;
}

long double to_long_double(const Rational& x) {
  // mpq_get_d loses range for huge denominators; scale through mpf.
  mpf_class f(x, 256);
  long exp = 0;
  double mant = mpf_get_d_2exp(&exp, f.get_mpf_t());
  return static_cast<long double>(mant) * std::pow(2.0L, static_cast<long double>(exp));
}

bool le_pow2(const Rational& m, long k) { return m <= pow2(k); }

Interval intersect(const Interval& a, const Interval& b) {
  return {a.lo > b.lo ? a.lo : b.lo, a.hi < b.hi ? a.hi : b.hi};
}

BitString::BitString(std::string bits) : bits_(std::move(bits)) {
  for (char c : bits_)
    if (c != '0' && c != '1')
      throw Error(Module::exact, "bad_bitstring", "bit strings may only contain 0 and 1");
}

BitString BitString::from_uint(std::uint64_t value, unsigned length) {
  std::string s(length, '0');
  for (unsigned i = 0; i < length; ++i)
    if ((value >> (length - 1 - i)) & 1u) s[i] = '1';
  return BitString(std::move(s), Raw{});
}

bool BitString::is_prefix_of(const BitString& other) const {
  return bits_.size() <= other.bits_.size() && other.bits_.compare(0, bits_.size(), bits_) == 0;
}

std::size_t BitString::ones() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), '1')); }

DyadicInterval string_to_interval(const BitString& x) {
  BigInt num = 0;
  for (std::size_t i = 0; i < x.size(); ++i) num = num * 2 + x[i];
  Rational left(num, BigInt(1) << static_cast<mp_bitcnt_t>(x.size()));
  left.canonicalize();
  return {left, static_cast<unsigned>(x.size())};
}

BitString interval_to_string(const DyadicInterval& d) {
  Rational scaled = d.left * pow2(d.len_exp);
  if (scaled.get_den() != 1)
    throw Error(Module::exact, "misaligned", "left endpoint is not a multiple of the interval length");
  BigInt v = scaled.get_num();
  std::string s(d.len_exp, '0');
  for (unsigned i = 0; i < d.len_exp; ++i)
    if (mpz_tstbit(v.get_mpz_t(), d.len_exp - 1 - i)) s[i] = '1';
  return BitString(std::move(s));
}

DyadicInterval dyadic_subinterval(const Rational& lo, const Rational& hi) {
  if (!(0 <= lo && lo < hi && hi <= 1))
    throw Error(Module::exact, "bad_range", "dyadic_subinterval requires 0 <= lo < hi <= 1");
  const Rational len = hi - lo;
  // Candidate exponents: 2^-n <= len and 2^-n >= len/4, so at most three values.
  unsigned n = 0;
  while (pow2(-static_cast<long>(n)) > len) ++n;
  std::optional<DyadicInterval> best;
  for (; pow2(-static_cast<long>(n)) * 4 >= len; ++n) {
    Rational step = pow2(-static_cast<long>(n));
    Rational a = Rational(ceil_of(lo / step)) * step;
    if (a + step > hi) continue;
    // Exponents increase, so the first admissible candidate at a given left is the longest.
    if (!best || a < best->left) best = DyadicInterval{a, n};
  }
  if (!best) throw Error(Module::exact, "no_dyadic", "no admissible dyadic subinterval");
  return *best;
}

}  // namespace cutstack
