#include "cutstack/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cutstack/error.hpp"

namespace cutstack {

std::vector<Rational> Supermartingale::along(const BitString& x) const {
  if (path) return path(x);
  std::vector<Rational> out;
  for (std::size_t j = 0; j <= x.size(); ++j) out.push_back(value(x.prefix(j)));
  return out;
}

namespace {

// M(xb) = M(x) * 2 (count_b + 1) / (l(x) + 2)
std::vector<Rational> kt_path_from(Rational m, std::size_t zeros, std::size_t ones, const BitString& y) {
  std::vector<Rational> out{m};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t n = zeros + ones;
    std::size_t& c = y[i] ? ones : zeros;
    m *= Rational(static_cast<unsigned long>(2 * (c + 1)), static_cast<unsigned long>(n + 2));
    m.canonicalize();
    ++c;
    out.push_back(m);
  }
  return out;
}

}  // namespace

Rational kt_mixture(const BitString& x) {
  const std::size_t b = x.ones(), a = x.size() - b;
  BigInt fa, fb, fn;
  mpz_fac_ui(fa.get_mpz_t(), a);
  mpz_fac_ui(fb.get_mpz_t(), b);
  mpz_fac_ui(fn.get_mpz_t(), a + b + 1);
  Rational r(fa * fb * (BigInt(1) << static_cast<mp_bitcnt_t>(x.size())), fn);
  r.canonicalize();
  return r;
}

Supermartingale kt_supermartingale() {
  Supermartingale m;
  m.label = "kt_mixture";
  m.value = kt_mixture;
  m.path = [](const BitString& x) { return kt_path_from(1, 0, 0, x); };
  return m;
}

SupermartingaleCheck check_supermartingale(const Supermartingale& m, unsigned depth) {
  if (depth > 20) throw Error(Module::martingale, "too_deep", "exhaustive check limited to depth 20");
  SupermartingaleCheck out;
  auto flag = [&](const std::string& why) {
    if (out.ok) out.first_violation = why;
    out.ok = false;
  };
  if (m(BitString()) > 1) flag("M(empty) > 1");
  for (unsigned len = 0; len < depth; ++len) {
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      BitString x = BitString::from_uint(v, len);
      const Rational mx = m(x), m0 = m(x + BitString("0")), m1 = m(x + BitString("1"));
      if (mx < 0 || m0 < 0 || m1 < 0) flag("negative value below " + x.str());
      const Rational avg = (m0 + m1) / 2;
      if (mx < avg) flag("M(" + x.str() + ") < (M(x0)+M(x1))/2");
      if (mx != avg) out.equality_everywhere = false;
    }
  }
  return out;
}

std::vector<BitString> prefix_reduce(const std::vector<BitString>& a) {
  std::vector<BitString> sorted(a);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  // in lexicographic order a prefix precedes its extensions
  std::vector<BitString> out;
  for (const auto& y : sorted)
    if (out.empty() || !out.back().is_prefix_of(y)) out.push_back(y);
  return out;
}

Rational uniform_mass(const std::vector<BitString>& a) {
  Rational b = 0;
  for (const auto& y : prefix_reduce(a)) b += pow2(-static_cast<long>(y.size()));
  return b;
}

namespace {

std::vector<Rational> values_after(const Supermartingale& m, const BitString& x, const BitString& y) {
  auto all = m.along(x + y);
  return {all.begin() + static_cast<long>(x.size()) + 1, all.end()};
}

}  // namespace

Selection select_extension(const Supermartingale& m, const BitString& x, const std::vector<BitString>& a) {
  auto reduced = prefix_reduce(a);
  if (reduced.empty()) throw Error(Module::martingale, "empty_candidates", "candidate set is empty");
  const Rational b = uniform_mass(reduced);
  const Rational bound = 2 * m(x) / b;
  std::optional<Selection> best;
  for (const auto& y : reduced) {  // sorted, so the first minimum is the least
    auto vals = values_after(m, x, y);
    Rational mx = vals.empty() ? m(x) : *std::max_element(vals.begin(), vals.end());
    if (!best || mx < best->max_value) best = Selection{y, mx, bound};
  }
  if (best->max_value > bound)
    throw Error(Module::martingale, "supermartingale_violated",
                "supermartingale property violated: best candidate reaches " + to_string(best->max_value) + " > " +
                    to_string(bound));
  return *best;
}

Rational over_threshold_fraction(const Supermartingale& m, const BitString& x, const std::vector<BitString>& a) {
  auto reduced = prefix_reduce(a);
  const Rational b = uniform_mass(reduced);
  const Rational bound = 2 * m(x) / b;
  Rational over = 0;
  for (const auto& y : reduced) {
    auto vals = values_after(m, x, y);
    if (std::any_of(vals.begin(), vals.end(), [&](const Rational& v) { return v > bound; }))
      over += pow2(-static_cast<long>(y.size()));
  }
  return over / b;
}

DeficiencyTrace trace_deficiency(const Supermartingale& m, const BitString& omega) {
  return {omega, m.along(omega)};
}

long double deficiency_display(const Rational& m) {
  if (m <= 0) return -INFINITY;
  return std::log2(to_long_double(m));
}

namespace {

bool within(const Rational& m, unsigned sigma) { return m <= pow2(static_cast<long>(sigma)); }

}  // namespace

bool budget_check(const DeficiencyTrace& trace, const std::function<unsigned(std::size_t)>& sigma) {
  for (std::size_t j = 1; j < trace.values.size(); ++j)
    if (!within(trace.values[j], sigma(j))) return false;
  return true;
}

void write_trace_csv(std::ostream& os, const DeficiencyTrace& trace, const std::function<unsigned(std::size_t)>& sigma) {
  os << "j,M,sigma,slack_ok\n";
  for (std::size_t j = 1; j < trace.values.size(); ++j) {
    const unsigned s = sigma(j);
    os << j << ',' << to_string(trace.values[j]) << ',' << s << ',' << (within(trace.values[j], s) ? "true" : "false")
       << '\n';
  }
}

}  // namespace cutstack
