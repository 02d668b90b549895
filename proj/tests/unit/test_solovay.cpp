#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cutstack/kernels.hpp"
#include "cutstack/solovay.hpp"
#include "fixtures.hpp"

using namespace cutstack;

namespace {

// Brute-force first-crossing mass over all strings of length m_hi.
Rational lil_brute(const LilBlock& b) {
  std::uint64_t hits = 0;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << b.m_hi); ++v) {
    long long s = 0;
    for (std::uint64_t k = 1; k <= b.m_hi; ++k) {
      s += ((v >> (k - 1)) & 1) ? 1 : -1;
      if (k >= b.m_lo && static_cast<long double>(s) / 2 > b.threshold) {
        ++hits;
        break;
      }
    }
  }
  return Rational(static_cast<unsigned long>(hits)) / pow2(static_cast<long>(b.m_hi));
}

Rational mass_of(const std::vector<BitString>& xs) {
  Rational m = 0;
  for (const auto& x : xs) m += pow2(-static_cast<long>(x.size()));
  return m;
}

bool prefix_free(const std::vector<BitString>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (i != j && xs[i].is_prefix_of(xs[j])) return false;
  return true;
}

}  // namespace

TEST_CASE("LLN block masses") {
  CHECK(lln_region_mass(4, ratio(1, 2)) == ratio(1, 8));
  auto t = lln_test(ratio(1, 4));
  for (std::size_t n = 1; n <= 16; ++n) {
    // oracle: count strings by popcount directly
    const std::uint64_t c = kernels::lln_violations_serial(static_cast<unsigned>(n), n, 2);
    CHECK(t->block_mass(n) == Rational(static_cast<unsigned long>(c)) / pow2(static_cast<long>(n)));
    CHECK(static_cast<long double>(to_long_double(t->block_mass(n))) <= t->block_bound(n));
    if (n <= 10) CHECK(mass_of(t->block_strings(n)) == t->block_mass(n));
  }
}

TEST_CASE("LLN rate bounds the analytic tail") {
  auto t = lln_test(ratio(1, 4));
  for (auto d : {ratio(1, 2), ratio(1, 16), ratio(1, 1024)}) {
    std::size_t N = t->rate(d);
    long double tail = 0;
    for (std::size_t n = N; n < N + 4000; ++n) tail += t->block_bound(n);
    CHECK(tail <= to_long_double(d) * (1 + 1e-12L));
    if (N > 1) {
      long double prev = tail + t->block_bound(N - 1);
      CHECK(prev > to_long_double(d));
    }
  }
}

TEST_CASE("LIL blocks against brute force") {
  const Rational d = 2;
  auto t = lil_test(d);
  CHECK(t->first_block() == 2);
  for (std::size_t n = 2; n <= 3; ++n) {
    auto b = lil_block(d, n);
    CHECK(b.m_lo == (1u << n));
    CHECK(b.m_hi == (2u << n));
    CHECK(lil_block_mass(d, n) == lil_brute(b));
    auto xs = t->block_strings(n);
    CHECK(prefix_free(xs));
    CHECK(mass_of(xs) == lil_block_mass(d, n));
    CHECK(to_long_double(t->block_mass(n)) <= t->block_bound(n) * (1 + 1e-12L));
  }
  // delta = 3/2 has short blocks: brute force over several of them
  const Rational d2 = ratio(3, 2);
  for (std::size_t n = 3; n <= 7; ++n) CHECK(lil_block_mass(d2, n) == lil_brute(lil_block(d2, n)));
}

TEST_CASE("LIL rigorous Hoeffding bound and rate") {
  const Rational d = 2;
  for (std::size_t n = 2; n <= 7; ++n) {
    auto b = lil_block(d, n);
    long double hoeff = 2 * std::exp(-2 * b.threshold * b.threshold / static_cast<long double>(b.m_hi));
    CHECK(to_long_double(lil_block_mass(d, n)) <= hoeff);
  }
  auto t = lil_test(d);
  const std::size_t N = t->rate(ratio(1, 4));
  long double tail = 0;
  const std::size_t K = 200000;
  for (std::size_t n = N; n < N + K; ++n) tail += t->block_bound(n);
  // remainder past N + K by the integral comparison
  const long double c0 = t->block_bound(N + K) * std::pow(static_cast<long double>(N + K) * std::log(2.0L), 2.0L);
  tail += c0 / (std::log(2.0L) * std::log(2.0L)) / static_cast<long double>(N + K - 1);
  CHECK(tail <= 0.25L);
  CHECK(N >= t->first_block());
}

TEST_CASE("combined test stays within budget") {
  std::vector<std::unique_ptr<SolovayTest>> fam;
  fam.push_back(lln_test(ratio(1, 4)));
  fam.push_back(lln_test(ratio(1, 8)));
  auto c = combine_tests(std::move(fam));
  long double total = 0;
  for (std::size_t n = c->first_block(); n < c->first_block() + 5000; ++n) total += c->block_bound(n);
  CHECK(total <= 1.0L);
  // exact masses on the first blocks agree with the sum of members
  auto a = lln_test(ratio(1, 4));
  const std::size_t n0 = c->first_block();
  CHECK(c->block_mass(n0) >= 0);
  CHECK(c->block_mass(n0) <= a->block_mass(n0) + lln_test(ratio(1, 8))->block_mass(n0));
}

TEST_CASE("run_test and the Martin-Loef conversion") {
  auto t = lln_test(ratio(1, 4));
  BitString zeros(std::string(40, '0'));
  auto v = run_test(*t, zeros, ratio(1, 2));
  CHECK(v.hits.size() == 40);
  CHECK(ml_conversion_count(v.hits.size(), 5, 0));
  CHECK_FALSE(ml_conversion_count(v.hits.size(), 6, 0));
  BitString alt;
  for (int i = 0; i < 40; ++i) alt.push_back(i % 2);
  CHECK(run_test(*t, alt, ratio(1, 2)).hits.size() == 1);  // only the first bit
}

TEST_CASE("degree functions from a rate") {
  auto m = [](const Rational& d) { return static_cast<std::uint64_t>(ceil_of(1 / d).get_ui()); };
  DegreeFunctions deg(m, 1 << 12);
  CHECK(deg.nu(16) == 2);
  CHECK(deg.nu(15) == 1);
  CHECK(deg.nu(1) == 0);
  CHECK(deg.sigma(256) == 2);
  CHECK(deg.sigma(16) == 1);
  for (std::uint64_t n = 1; n < 4096; ++n) {
    // oracle: largest i with 4^i <= n
    unsigned i = 0;
    while ((std::uint64_t{1} << (2 * (i + 1))) <= n) ++i;
    REQUIRE(deg.nu(n) == i);
  }
}

TEST_CASE("weighted budget of the LLN test") {
  auto t = lln_test(ratio(1, 4));
  auto deg = sigma_from_rate([&](const Rational& d) { return static_cast<std::uint64_t>(t->rate(d)); }, 2000);
  Rational w = weighted_budget(*t, deg, 400);
  CHECK(w <= 1);
  CHECK(w > 0);
}

TEST_CASE("maximal inequality") {
  for (unsigned m : {4u, 10u, 16u})
    for (auto a : {ratio(0, 1), ratio(1, 2), ratio(3, 2)}) {
      auto r = max_inequality(m, a);
      CHECK(r.max_mass >= r.end_mass);
      // reflection: P(max > a) <= 2 P(end > a) + P(end == a+) for the centred walk
      CHECK(r.max_mass <= 2 * r.end_mass + 2 * max_inequality(m, a - ratio(1, 2)).end_mass);
    }
  // oracle on m = 2, a = 0: walks ++, +-, -+, -- ; max > 0 for ++ and +-
  auto r = max_inequality(2, 0);
  CHECK(r.max_mass == ratio(1, 2));
  CHECK(r.end_mass == ratio(1, 4));
}

TEST_CASE("Schnorr sets on a finite stage") {
  Partition pi = standard_partition(ratio(1, 2));
  Gadget g = independent_cut_stack(fixtures::layout({{ratio(1, 2), 2}}, 0, {"01"}), 64);
  TransformStage st(g, 1);
  Observable f{0, 1};
  auto s = schnorr_sets_from_rate(st, f, 1, pi);
  REQUIRE_FALSE(s.thresholds.empty());
  // oracle: walk orbits from every level's left endpoint
  Rational in = 0, undecided = 0;
  for (const auto& c : g.columns)
    for (std::size_t j = 0; j < c.height(); ++j) {
      Orbit o = orbit(st, c.lefts[j], c.height() + 1, pi);
      const std::size_t L = o.defined_up_to;
      bool hit = false, open = false;
      for (std::size_t t = 0; t < s.thresholds.size(); ++t) {
        const std::size_t M = s.thresholds[t];
        if (L < M) {
          open = true;
          continue;
        }
        Rational lo, hi, sum = 0;
        for (std::size_t n = 1; n <= L; ++n) {
          sum += f(o.name[n - 1]);
          Rational a = sum / static_cast<unsigned long>(n);
          if (n == M) lo = hi = a;
          if (n > M) lo = std::min(lo, a), hi = std::max(hi, a);
        }
        if (hi - lo > ratio(1, static_cast<long>(t + 2))) hit = true;
      }
      if (hit) in += c.width;
      else if (open) undecided += c.width;
    }
  CHECK(s.measure == in);
  CHECK(s.undefined_mass == undecided);
  Rational sum = 0;
  for (const auto& iv : s.intervals) sum += iv.length();
  CHECK(sum == s.measure);
}
