#include "cutstack/solovay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cutstack/error.hpp"
#include "cutstack/kernels.hpp"

namespace cutstack {

namespace {

[[noreturn]] void fail(std::string code, const std::string& msg) { throw Error(Module::tests, std::move(code), msg); }

constexpr std::size_t kEnumerationLimit = 24;

bool lln_violates(std::size_t n, std::size_t ones, const Rational& eps) {
  Rational d = Rational(static_cast<long>(2 * ones)) - Rational(static_cast<long>(n));
  return abs(d) >= 2 * eps * static_cast<unsigned long>(n);
}

class LlnTest final : public SolovayTest {
 public:
  explicit LlnTest(Rational eps) : eps_(std::move(eps)), e2_(2.0L * to_long_double(eps_) * to_long_double(eps_)) {
    if (!(eps_ > 0 && eps_ < ratio(1, 2))) fail("bad_epsilon", "LLN test needs 0 < eps < 1/2");
  }

  std::string id() const override { return "lln(eps=" + to_string(eps_) + ")"; }
  std::size_t first_block() const override { return 1; }
  std::size_t min_length(std::size_t n) const override { return n; }
  std::size_t max_length(std::size_t n) const override { return n; }

  std::vector<BitString> block_strings(std::size_t n) const override {
    if (n > kEnumerationLimit) fail("too_large", "block enumeration limited to length " + std::to_string(kEnumerationLimit));
    std::vector<BitString> out;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      BitString x = BitString::from_uint(v, static_cast<unsigned>(n));
      if (lln_violates(n, x.ones(), eps_)) out.push_back(std::move(x));
    }
    return out;
  }

  Rational block_mass(std::size_t n) const override { return lln_region_mass(n, eps_); }

  long double block_bound(std::size_t n) const override { return 2.0L * std::exp(-e2_ * static_cast<long double>(n)); }

  std::optional<std::size_t> block_hit(std::size_t n, const BitString& omega) const override {
    if (omega.size() < n) return std::nullopt;
    if (lln_violates(n, omega.prefix(n).ones(), eps_)) return n;
    return std::nullopt;
  }

  // sum_{n >= N} 2 q^n = 2 q^N / (1 - q) with q = exp(-2 eps^2).
  std::size_t rate(const Rational& delta) const override {
    if (delta <= 0) fail("bad_delta", "rate needs delta > 0");
    const long double q = std::exp(-e2_);
    const long double d = to_long_double(delta);
    auto tail = [&](std::size_t N) { return 2.0L * std::pow(q, static_cast<long double>(N)) / (1.0L - q); };
    long double guess = std::log(2.0L / (d * (1.0L - q))) / e2_;
    std::size_t N = guess < 1 ? 1 : static_cast<std::size_t>(std::ceil(guess));
    while (N > 1 && tail(N - 1) <= d) --N;
    while (tail(N) > d) ++N;
    return N;
  }

 private:
  Rational eps_;
  long double e2_;
};

class LilTest final : public SolovayTest {
 public:
  explicit LilTest(Rational delta) : delta_(std::move(delta)) {
    if (delta_ <= 1) fail("bad_delta", "LIL test needs delta > 1 (the series diverges otherwise)");
    d_ = to_long_double(delta_);
    first_ = 1;
    while (lil_block(delta_, first_).m_lo < 3) ++first_;
    c_ = lil_calibrate_c(delta_, first_ + 5);
  }

  std::string id() const override { return "lil(delta=" + to_string(delta_) + ")"; }
  std::size_t first_block() const override { return first_; }
  std::size_t min_length(std::size_t n) const override { return lil_block(delta_, n).m_lo; }
  std::size_t max_length(std::size_t n) const override { return lil_block(delta_, n).m_hi; }

  std::vector<BitString> block_strings(std::size_t n) const override {
    auto b = lil_block(delta_, n);
    if (b.m_hi > kEnumerationLimit) fail("too_large", "block enumeration limited to length " + std::to_string(kEnumerationLimit));
    std::vector<BitString> out;
    BitString cur;
    walk(cur, 0, b, out);
    return out;
  }

  Rational block_mass(std::size_t n) const override { return lil_block_mass(delta_, n); }

  // Past 2^62 use ln m_n >= n ln delta, which keeps the bound an upper bound.
  long double block_bound(std::size_t n) const override {
    const long double logm = static_cast<long double>(n) * std::log(d_) < 62.0L * std::log(2.0L)
                                 ? std::log(static_cast<long double>(lil_block(delta_, n).m_lo))
                                 : static_cast<long double>(n) * std::log(d_);
    return c_ * std::pow(logm, -d_);
  }

  std::optional<std::size_t> block_hit(std::size_t n, const BitString& omega) const override {
    auto b = lil_block(delta_, n);
    long long walk = 0;
    for (std::size_t k = 1; k <= std::min<std::size_t>(b.m_hi, omega.size()); ++k) {
      walk += omega[k - 1] ? 1 : -1;
      if (k >= b.m_lo && lil_crosses(walk, b.threshold)) return k;
    }
    return std::nullopt;
  }

  // block_bound(n) <= c (n ln delta)^-delta, summed against the integral from N-1.
  std::size_t rate(const Rational& delta) const override {
    if (delta <= 0) fail("bad_delta", "rate needs delta > 0");
    const long double dd = to_long_double(delta);
    const long double k = c_ * std::pow(std::log(d_), -d_) / (d_ - 1.0L);
    const long double need = std::pow(k / dd, 1.0L / (d_ - 1.0L));
    std::size_t N = static_cast<std::size_t>(std::ceil(need)) + 1;
    return std::max(N, first_);
  }

  long double calibrated_c() const { return c_; }

 private:
  void walk(BitString& cur, long long w, const LilBlock& b, std::vector<BitString>& out) const {
    const std::size_t k = cur.size();
    if (k >= b.m_lo && k > 0 && lil_crosses(w, b.threshold)) {
      out.push_back(cur);
      return;
    }
    if (k == b.m_hi) return;
    for (int bit : {0, 1}) {
      cur.push_back(bit);
      walk(cur, w + (bit ? 1 : -1), b, out);
      cur = cur.prefix(k);
    }
  }

  Rational delta_;
  long double d_;
  std::size_t first_;
  long double c_;
};

class CombinedTest final : public SolovayTest {
 public:
  explicit CombinedTest(std::vector<std::unique_ptr<SolovayTest>> family) : family_(std::move(family)) {
    if (family_.empty()) fail("empty_family", "combine_tests needs at least one member");
    for (std::size_t k = 0; k < family_.size(); ++k) {
      if (!family_[k]) fail("missing_rate", "family member without a uniform rate");
      trims_.push_back(std::max(family_[k]->first_block(), family_[k]->rate(pow2(-static_cast<long>(k + 1)))));
    }
  }

  std::string id() const override {
    std::string s = "combined(";
    for (std::size_t k = 0; k < family_.size(); ++k) s += (k ? "," : "") + family_[k]->id();
    return s + ")";
  }
  std::size_t first_block() const override { return *std::min_element(trims_.begin(), trims_.end()); }
  std::size_t min_length(std::size_t n) const override {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k]) best = std::min(best, family_[k]->min_length(n));
    return best;
  }
  std::size_t max_length(std::size_t n) const override {
    std::size_t best = 0;
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k]) best = std::max(best, family_[k]->max_length(n));
    return best;
  }
  std::vector<BitString> block_strings(std::size_t n) const override {
    std::vector<BitString> out;
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k]) {
        auto b = family_[k]->block_strings(n);
        out.insert(out.end(), b.begin(), b.end());
      }
    return out;
  }
  Rational block_mass(std::size_t n) const override {
    Rational m = 0;
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k]) m += family_[k]->block_mass(n);
    return m;
  }
  long double block_bound(std::size_t n) const override {
    long double b = 0;
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k]) b += family_[k]->block_bound(n);
    return b;
  }
  std::optional<std::size_t> block_hit(std::size_t n, const BitString& omega) const override {
    for (std::size_t k = 0; k < family_.size(); ++k)
      if (n >= trims_[k])
        if (auto h = family_[k]->block_hit(n, omega)) return h;
    return std::nullopt;
  }
  std::size_t rate(const Rational& delta) const override {
    std::size_t N = first_block();
    const Rational share = delta / static_cast<unsigned long>(family_.size());
    for (std::size_t k = 0; k < family_.size(); ++k) N = std::max({N, trims_[k], family_[k]->rate(share)});
    return N;
  }

  const std::vector<std::size_t>& trims() const { return trims_; }

 private:
  std::vector<std::unique_ptr<SolovayTest>> family_;
  std::vector<std::size_t> trims_;
};

}  // namespace

std::unique_ptr<SolovayTest> lln_test(const Rational& eps) { return std::make_unique<LlnTest>(eps); }
std::unique_ptr<SolovayTest> lil_test(const Rational& delta) { return std::make_unique<LilTest>(delta); }
std::unique_ptr<SolovayTest> combine_tests(std::vector<std::unique_ptr<SolovayTest>> family) {
  return std::make_unique<CombinedTest>(std::move(family));
}

Rational lln_region_mass(std::size_t n, const Rational& eps) {
  BigInt count = 0, binom = 1;
  for (std::size_t k = 0; k <= n; ++k) {
    if (lln_violates(n, k, eps)) count += binom;
    binom = binom * static_cast<unsigned long>(n - k) / static_cast<unsigned long>(k + 1);
  }
  Rational r(count, BigInt(1) << static_cast<mp_bitcnt_t>(n));
  r.canonicalize();
  return r;
}

LilBlock lil_block(const Rational& delta, std::size_t n) {
  auto m_of = [&](std::size_t e) {
    Rational p = 1;
    for (std::size_t i = 0; i < e; ++i) p *= delta;
    BigInt c = ceil_of(p);
    if (!mpz_fits_ulong_p(c.get_mpz_t())) fail("block_overflow", "block index too large");
    return static_cast<std::uint64_t>(c.get_ui());
  };
  LilBlock b;
  b.m_lo = m_of(n);
  b.m_hi = m_of(n + 1);
  const long double m = static_cast<long double>(b.m_lo);
  const long double ll = b.m_lo >= 3 ? std::log(std::log(m)) : 0.0L;
  b.threshold = to_long_double(delta) * std::sqrt(0.5L * m * ll);
  return b;
}

bool lil_crosses(long long twice_excess, long double threshold) {
  const long double lhs = static_cast<long double>(twice_excess), rhs = 2.0L * threshold;
  if (std::fabs(lhs - rhs) < 1e-9L * std::max(1.0L, rhs))
    fail("ambiguous_threshold", "walk value too close to the irrational LIL threshold");
  return lhs > rhs;
}

Rational lil_block_mass(const Rational& delta, std::size_t n) {
  auto b = lil_block(delta, n);
  if (b.m_hi > 20000) fail("too_large", "exact LIL block mass limited to m_hi <= 20000");
  // counts[s] = paths of length k with s ones that have not crossed inside the block yet
  std::vector<BigInt> counts(b.m_hi + 2), next(b.m_hi + 2);
  counts[0] = 1;
  BigInt absorbed = 0;
  for (std::uint64_t k = 1; k <= b.m_hi; ++k) {
    for (std::uint64_t s = 0; s <= k; ++s) {
      next[s] = (s <= k - 1 ? counts[s] : BigInt(0));
      if (s > 0) next[s] += counts[s - 1];
    }
    std::swap(counts, next);
    if (k >= b.m_lo) {
      for (std::uint64_t s = 0; s <= k; ++s) {
        if (counts[s] == 0) continue;
        const long long d = 2LL * static_cast<long long>(s) - static_cast<long long>(k);
        if (lil_crosses(d, b.threshold)) {
          absorbed += counts[s] << static_cast<mp_bitcnt_t>(b.m_hi - k);
          counts[s] = 0;
        }
      }
    }
  }
  Rational r(absorbed, BigInt(1) << static_cast<mp_bitcnt_t>(b.m_hi));
  r.canonicalize();
  return r;
}

long double lil_calibrate_c(const Rational& delta, std::size_t n_max) {
  const long double d = to_long_double(delta);
  long double c = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto b = lil_block(delta, n);
    if (b.m_lo < 3) continue;
    long double shape = std::pow(std::log(static_cast<long double>(b.m_lo)), -d);
    c = std::max(c, to_long_double(lil_block_mass(delta, n)) / shape);
  }
  return c;
}

TestVerdict run_test(const SolovayTest& test, const BitString& omega, const Rational& tail_delta) {
  TestVerdict v;
  v.test_id = test.id();
  v.prefix_len = omega.size();
  v.tail_budget = tail_delta;
  for (std::size_t n = test.first_block(); test.min_length(n) <= omega.size(); ++n) {
    if (auto h = test.block_hit(n, omega)) {
      v.hits.push_back(n);
      v.hit_lengths.push_back(*h);
    }
  }
  return v;
}

bool ml_conversion_count(std::size_t hit_count, unsigned n, unsigned K) {
  if (n + K >= 63) return false;
  return hit_count >= (std::uint64_t{1} << (n + K));
}

bool ml_conversion_count(const SolovayTest& test, const BitString& omega_prefix, unsigned n, unsigned K) {
  return ml_conversion_count(run_test(test, omega_prefix, 1).hits.size(), n, K);
}

DegreeFunctions::DegreeFunctions(std::function<std::uint64_t(const Rational&)> m, std::uint64_t horizon) {
  for (unsigned i = 0; i < 60; ++i) {
    std::uint64_t t = m(pow2(-2 * static_cast<long>(i)));
    if (!thresholds_.empty() && t < thresholds_.back()) fail("rate_not_monotone", "rate function decreases as delta shrinks");
    thresholds_.push_back(t);
    if (t > horizon) break;
  }
}

unsigned DegreeFunctions::nu(std::uint64_t n) const {
  unsigned i = 0;
  while (i + 1 < thresholds_.size() && thresholds_[i + 1] <= n) ++i;
  return i;
}

unsigned DegreeFunctions::sigma(std::uint64_t n) const {
  return static_cast<unsigned>(std::sqrt(static_cast<double>(nu(n))));
}

DegreeFunctions sigma_from_rate(std::function<std::uint64_t(const Rational&)> m, std::uint64_t horizon) {
  return DegreeFunctions(std::move(m), horizon);
}

Rational weighted_budget(const SolovayTest& test, const DegreeFunctions& deg, std::size_t horizon) {
  const auto& th = deg.thresholds();
  const std::size_t start = std::max<std::size_t>(test.first_block(), th.size() > 1 ? th[1] : th[0]);
  Rational total = 0;
  for (std::size_t n = start; n <= horizon; ++n) total += test.block_mass(n) * pow2(deg.nu(n));
  return total;
}

SchnorrSet schnorr_sets_from_rate(const TransformStage& stage, const Observable& f, unsigned i, const Partition& pi) {
  std::size_t max_h = 0;
  for (const auto& c : stage.gadget().columns) max_h = std::max(max_h, c.height());

  SchnorrSet out;
  std::vector<unsigned> levels;
  for (unsigned j = i + 1;; ++j) {
    Rate rate;
    try {
      rate = convergence_rate(stage, f, ratio(1, j), pow2(-static_cast<long>(j)), pi);
    } catch (const Error&) {
      break;
    }
    if (rate.m > static_cast<unsigned long>(max_h)) break;
    out.thresholds.push_back(std::max<std::size_t>(1, rate.m.get_ui()));
    levels.push_back(j);
  }
  if (levels.empty())
    fail("stage_too_shallow", "stage too shallow for m(1/" + std::to_string(i + 1) + ", 2^-" + std::to_string(i + 1) + ")");

  Rational covered = 0;
  for (const auto& c : stage.gadget().columns) {
    const std::size_t h = c.height();
    for (std::size_t lv = 0; lv < h; ++lv) {
      const std::size_t L = h - lv;
      // A_n for n = 1..L along the rest of the column.
      std::vector<Rational> avg(L + 1);
      Rational sum = 0;
      for (std::size_t n = 1; n <= L; ++n) {
        sum += f(c.names[lv + n - 1] == '1');
        avg[n] = sum / static_cast<unsigned long>(n);
      }
      bool in = false, undecided = false;
      for (std::size_t t = 0; t < levels.size() && !in; ++t) {
        const std::size_t M = out.thresholds[t];
        if (L < M) {
          undecided = true;
          continue;
        }
        auto [lo, hi] = std::minmax_element(avg.begin() + static_cast<long>(M), avg.end());
        if (*hi - *lo > ratio(1, levels[t])) in = true;
      }
      covered += c.width;
      if (in) {
        out.intervals.push_back(c.level(lv));
        out.measure += c.width;
      } else if (undecided) {
        out.undefined_mass += c.width;
      }
    }
  }
  out.undefined_mass += 1 - covered;
  std::sort(out.intervals.begin(), out.intervals.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : out.intervals) {
    if (!merged.empty() && merged.back().hi == iv.lo)
      merged.back().hi = iv.hi;
    else
      merged.push_back(iv);
  }
  out.intervals = std::move(merged);
  return out;
}

MaxInequality max_inequality(unsigned m, const Rational& a) {
  if (m == 0 || m > 30) fail("bad_length", "exhaustive maximal inequality limited to 1 <= m <= 30");
  // S_k - k/2 > a  <=>  2 S_k - k > 2a; the walk is integral so compare with floor(2a).
  const BigInt a2 = floor_of(2 * a);
  const long long a2i = a2.get_si();
  auto counts = kernels::max_inequality_parallel(m, a2i);
  const Rational total = pow2(static_cast<long>(m));
  return {Rational(static_cast<unsigned long>(counts.max_exceeds)) / total,
          Rational(static_cast<unsigned long>(counts.end_exceeds)) / total};
}

nlohmann::json test_report(const SolovayTest& test, std::size_t n_max) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t n = test.first_block(); n <= n_max; ++n) {
    Rational m = test.block_mass(n);
    blocks.push_back({{"n", n},
                      {"exact_mass", to_string(m)},
                      {"exact_mass_decimal", to_decimal(m, 12)},
                      {"bound", std::to_string(static_cast<double>(test.block_bound(n)))},
                      {"within_bound", to_long_double(m) <= test.block_bound(n)}});
  }
  return {{"test_id", test.id()}, {"blocks", blocks}};
}

}  // namespace cutstack
