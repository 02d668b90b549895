#pragma once

// Computable supermartingales over binary strings, deficiency traces and the
// extension selector that keeps the deficiency under a budget.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cutstack/exact.hpp"

namespace cutstack {

struct Supermartingale {
  std::string label;
  std::function<Rational(const BitString&)> value;
  /// Optional fast path: M(x^j) for j = 0..l(x). Falls back to `value` per prefix.
  std::function<std::vector<Rational>(const BitString&)> path;

  Rational operator()(const BitString& x) const { return value(x); }
  std::vector<Rational> along(const BitString& x) const;
};

/// 2^{l(x)} a! b! / (a+b+1)!; the Bayes mixture over Bernoulli sources.
Rational kt_mixture(const BitString& x);
Supermartingale kt_supermartingale();

/// M(x) >= (M(x0) + M(x1)) / 2 and M >= 0 on every string of length < depth, M(empty) <= 1.
struct SupermartingaleCheck {
  bool ok = true;
  bool equality_everywhere = true;
  std::string first_violation;
};
SupermartingaleCheck check_supermartingale(const Supermartingale& m, unsigned depth);

/// Strings of A with no proper prefix in A.
std::vector<BitString> prefix_reduce(const std::vector<BitString>& a);
/// sum over the reduced set of 2^-l(y)
Rational uniform_mass(const std::vector<BitString>& a);

struct Selection {
  BitString y;
  Rational max_value;  // max_{1<=j<=l(y)} M(x y^j)
  Rational bound;      // 2 M(x) / B(A)
};

/// y in A minimising max_j M(x y^j); ties lexicographically least. Throws
/// martingale/"supermartingale_violated" when no candidate meets the bound.
Selection select_extension(const Supermartingale& m, const BitString& x, const std::vector<BitString>& a);

/// Relative mass of the candidates that exceed 2 M(x) / B(A) somewhere along y.
Rational over_threshold_fraction(const Supermartingale& m, const BitString& x, const std::vector<BitString>& a);

struct DeficiencyTrace {
  BitString prefix;
  std::vector<Rational> values;  // M(prefix^j), j = 0..l(prefix)
};
DeficiencyTrace trace_deficiency(const Supermartingale& m, const BitString& omega);

/// log2 M for display only.
long double deficiency_display(const Rational& m);

/// M(omega^j) <= 2^{sigma(j)} for every j >= 1, decided exactly.
bool budget_check(const DeficiencyTrace& trace, const std::function<unsigned(std::size_t)>& sigma);

/// CSV with columns j, M, sigma, slack_ok.
void write_trace_csv(std::ostream& os, const DeficiencyTrace& trace, const std::function<unsigned(std::size_t)>& sigma);

}  // namespace cutstack
