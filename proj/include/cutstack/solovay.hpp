#pragma once

// Total Solovay tests for the law of large numbers and the law of the iterated
// logarithm, their combination, and the degree functions extracted from a rate.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cutstack/exact.hpp"
#include "cutstack/transform.hpp"

namespace cutstack {

/// A test enumerated block by block. Block n is a finite set of strings; the
/// test is total when rate(delta) bounds the tail mass from that block on.
class SolovayTest {
 public:
  virtual ~SolovayTest() = default;

  virtual std::string id() const = 0;
  virtual std::size_t first_block() const = 0;
  virtual std::vector<BitString> block_strings(std::size_t n) const = 0;
  /// Exact sum of 2^-l(x) over block n.
  virtual Rational block_mass(std::size_t n) const = 0;
  /// Analytic upper bound on block_mass(n).
  virtual long double block_bound(std::size_t n) const = 0;
  /// Length of the block-n string that is a prefix of omega, if any. Needs
  /// omega long enough to decide; returns nullopt otherwise.
  virtual std::optional<std::size_t> block_hit(std::size_t n, const BitString& omega) const = 0;
  /// Smallest block index N with sum_{n >= N} block_bound(n) <= delta.
  virtual std::size_t rate(const Rational& delta) const = 0;
  /// Shortest and longest string lengths in block n.
  virtual std::size_t min_length(std::size_t n) const = 0;
  virtual std::size_t max_length(std::size_t n) const = 0;
  bool total() const { return true; }
};

/// Strings of length n with |ones/n - 1/2| >= eps, one block per length n >= 1.
std::unique_ptr<SolovayTest> lln_test(const Rational& eps);

/// Prefix-free first-crossing covers of U_{delta,n} over blocks m_n = ceil(delta^n).
std::unique_ptr<SolovayTest> lil_test(const Rational& delta);

/// Family member k (1-based) trimmed to blocks n >= rate_k(2^-k); total mass <= 1.
std::unique_ptr<SolovayTest> combine_tests(std::vector<std::unique_ptr<SolovayTest>> family);

/// Exact B{|S_n - n/2| >= n eps} from binomial coefficients.
Rational lln_region_mass(std::size_t n, const Rational& eps);

/// LIL block geometry.
struct LilBlock {
  std::uint64_t m_lo;
  std::uint64_t m_hi;
  long double threshold;  // delta * sqrt(m_lo ln ln m_lo / 2)
};
LilBlock lil_block(const Rational& delta, std::size_t n);
/// S_k - k/2 > threshold, decided on the integer 2 S_k - k.
bool lil_crosses(long long twice_excess, long double threshold);

/// Exact first-crossing mass of block n by dynamic programming over (k, S_k).
Rational lil_block_mass(const Rational& delta, std::size_t n);

/// Calibrated constant c with block_mass(n) <= c (ln m_n)^-delta on blocks up to n_max.
long double lil_calibrate_c(const Rational& delta, std::size_t n_max);

struct TestVerdict {
  std::string test_id;
  std::size_t prefix_len = 0;
  std::vector<std::size_t> hits;  // block indices with a hit
  std::vector<std::size_t> hit_lengths;
  Rational tail_budget;
};

/// Hits of `test` on omega over all blocks decidable from l(omega).
TestVerdict run_test(const SolovayTest& test, const BitString& omega, const Rational& tail_delta);

/// Prefix belongs to level n of the Martin-Loef test built from a test of mass < 2^K.
bool ml_conversion_count(const SolovayTest& test, const BitString& omega_prefix, unsigned n, unsigned K);
bool ml_conversion_count(std::size_t hit_count, unsigned n, unsigned K);

/// nu(n) = i for m(4^-i) <= n < m(4^-(i+1)) (0 below m(1)); sigma = floor(sqrt(nu)).
class DegreeFunctions {
 public:
  DegreeFunctions(std::function<std::uint64_t(const Rational&)> m, std::uint64_t horizon);

  unsigned nu(std::uint64_t n) const;
  unsigned sigma(std::uint64_t n) const;
  const std::vector<std::uint64_t>& thresholds() const { return thresholds_; }

 private:
  std::vector<std::uint64_t> thresholds_;  // m(4^-i) for i = 0, 1, ...
};

DegreeFunctions sigma_from_rate(std::function<std::uint64_t(const Rational&)> m, std::uint64_t horizon);

/// sum over blocks n in [m(1/4), horizon] of block_mass(n) 2^nu(n), nu taken from the
/// test's own rate (block index equals string length for the LLN family).
Rational weighted_budget(const SolovayTest& test, const DegreeFunctions& deg, std::size_t horizon);

struct SchnorrSet {
  std::vector<Interval> intervals;
  Rational measure;
  Rational undefined_mass;
  std::vector<std::size_t> thresholds;  // m(1/j, 2^-j) for the levels used
};

/// Finite-stage approximation of U_i = union_{j > i} V_j with
/// V_j = {x : |A_n f - A_n' f| > 1/j for some n, n' >= m(1/j, 2^-j)}.
SchnorrSet schnorr_sets_from_rate(const TransformStage& stage, const Observable& f, unsigned i, const Partition& pi);

/// Exhaustive B{max_{k <= m} (S_k - k/2) > a} and B{S_m - m/2 > a} as exact masses.
struct MaxInequality {
  Rational max_mass;
  Rational end_mass;
};
MaxInequality max_inequality(unsigned m, const Rational& a);

nlohmann::json test_report(const SolovayTest& test, std::size_t n_max);

}  // namespace cutstack
