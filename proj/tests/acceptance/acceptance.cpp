// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails,
// except criteria listed with --expect-fail, which must then fail (a pass is reported too).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "cutstack/construction.hpp"
#include "cutstack/kernels.hpp"
#include "cutstack/lz78.hpp"
#include "cutstack/martingale.hpp"
#include "cutstack/solovay.hpp"
#include "fixtures.hpp"

using namespace cutstack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void need(Outcome& o, bool ok, const std::string& what) {
  if (!ok && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

std::vector<BitString> all_of_length(unsigned n) {
  std::vector<BitString> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) out.push_back(BitString::from_uint(v, n));
  return out;
}

// Shared by criteria 9 and 10: one toy construction for r = 1/8.
const BuildResult& toy_run() {
  static const BuildResult res = [] {
    Construction c(default_toy_config(ratio(1, 8)));
    return build_unstable(c, 4);
  }();
  return res;
}

Outcome c1_gadget_calculus() {
  Outcome o;
  const auto suite = fixtures::suite();
  need(o, suite.size() >= 10, "fewer than 10 fixtures");
  for (const auto& [name, g] : suite) {
    need(o, audit_gadget(g).ok, name + ": fixture fails audit");
    for (unsigned m : {1u, 2u, 3u}) {
      Gadget f = independent_cut_stack(g, m);
      need(o, f.measure() == g.measure(), name + ": fold changes measure");
      need(o, audit_gadget(f).ok, name + ": fold overlaps levels");
    }
    auto halves = cut_copies(g, {ratio(1, 2), ratio(1, 2)});
    need(o, halves[0].measure() + halves[1].measure() == g.measure(), name + ": cut changes measure");
    // product rule on two disjoint copies: Upsilon * Lambda
    Gadget prod = stack_gadget_on_gadget(halves[0], halves[1]);
    need(o, prod.columns.size() == halves[0].columns.size() * halves[1].columns.size(), name + ": product rule");
    need(o, prod.measure() == g.measure(), name + ": stacking changes measure");
    need(o, audit_gadget(prod).ok, name + ": stacking overlaps levels");
    Gadget u = gadget_union({&halves[0], &halves[1]}, 0);
    need(o, u.measure() == g.measure() && audit_gadget(u).ok, name + ": union");
  }
  if (o.pass) o.detail = std::to_string(suite.size()) + " fixtures, cut/stack/fold/union";
  return o;
}

Outcome c2_fold_search() {
  Outcome o;
  unsigned worst = 0;
  for (const auto& [name, g] : fixtures::suite()) {
    auto res = find_well_distributing_fold(g, ratio(1, 4), 1u << 12);
    need(o, res.metric < ratio(1, 4), name + ": metric " + to_string(res.metric));
    worst = std::max(worst, res.m);
  }
  // proportional split: one column stacked from both halves of a two-column gadget
  auto lam = fixtures::layout({{ratio(1, 2), 1}, {ratio(1, 2), 1}});
  Gadget up;
  up.stage_id = 1;
  Column col = stack_columns(lam.columns[0], lam.columns[1]);
  col.lineage = {0, 1};
  up.columns.push_back(col);
  need(o, well_distribution(lam, up).value == 0, "proportional split metric is not 0");
  need(o, well_distribution_fold(fixtures::suite()[0].g, 4) == 0, "single-column fold metric is not 0");
  if (o.pass) o.detail = "largest m needed " + std::to_string(worst);
  return o;
}

Outcome c3_measure_preservation() {
  Outcome o;
  std::uint64_t levels = 0;
  for (auto r : {ratio(1, 8), ratio(1, 16)}) {
    Construction c(default_toy_config(r));
    for (unsigned s = 0; s <= 5; ++s) {
      const StageAudit a = audit_stage(c, s, 200000);
      const std::string tag = "r=" + to_string(r) + " s=" + std::to_string(s);
      need(o, a.ledger_ok, tag + ": measure ledger");
      need(o, a.maps_ok, tag + ": successor map");
      need(o, a.tiles_ok, tag + ": tiling");
      need(o, a.names_ok, tag + ": names");
      // equal widths inside a column make successor measures equal; check the
      // stage width table is consistent with the ledger as well
      const Stage& st = c.stage(s);
      need(o, st.pi->measure() == 1 - pow2(1 - static_cast<long>(s)) * r, tag + ": Pi measure");
      need(o, st.delta->measure() == pow2(1 - static_cast<long>(s)) * r, tag + ": Delta measure");
      levels += a.levels_checked;
    }
  }
  if (o.pass) o.detail = std::to_string(levels) + " levels checked, s <= 5, r in {1/8, 1/16}";
  return o;
}

Outcome c4_lln() {
  Outcome o;
  for (auto eps : {ratio(1, 8), ratio(1, 4), ratio(1, 2)})
    for (unsigned n = 1; n <= 20; ++n) {
      // |k/n - 1/2| >= eps  <=>  |2k - n| >= 2 eps n
      const auto count = kernels::lln_violations_parallel(n, 2 * eps.get_num().get_ui() * n, eps.get_den().get_ui());
      const Rational mass = Rational(static_cast<unsigned long>(count)) / pow2(n);
      need(o, mass == lln_region_mass(n, eps), "kernel and binomial masses differ");
      const long double e = to_long_double(eps);
      need(o, to_long_double(mass) <= 2.0L * std::exp(-2.0L * n * e * e),
           "n=" + std::to_string(n) + " eps=" + to_string(eps) + " exceeds Hoeffding");
    }
  if (o.pass) o.detail = "n <= 20, eps in {1/8,1/4,1/2}";
  return o;
}

Outcome c5_max_inequality() {
  Outcome o;
  for (unsigned m = 1; m <= 16; ++m)
    for (long a = -static_cast<long>(m); a <= static_cast<long>(m); ++a) {
      // library walk is S_k - k/2, half the +-1 walk
      const MaxInequality r = max_inequality(m, ratio(a, 2));
      need(o, r.max_mass <= 2 * r.end_mass, "m=" + std::to_string(m) + " a=" + std::to_string(a));
    }
  if (o.pass) o.detail = "m <= 16, integer a in [-m, m]";
  return o;
}

Outcome c6_sigma_extraction() {
  Outcome o;
  DegreeFunctions deg([](const Rational& d) { return static_cast<std::uint64_t>(ceil_of(1 / d).get_ui()); }, 1000000);
  need(o, deg.nu(16) == 2, "nu(16) = " + std::to_string(deg.nu(16)));
  unsigned prev = 0;
  for (std::uint64_t n = 1; n <= 1000000; ++n) {
    const unsigned v = deg.nu(n);
    if (v < prev) {
      need(o, false, "nu decreases at " + std::to_string(n));
      break;
    }
    prev = v;
  }
  need(o, prev >= 9, "nu(10^6) = " + std::to_string(prev));
  Rational worst = 0;
  for (auto eps : {ratio(1, 8), ratio(1, 4), ratio(3, 8)}) {
    auto t = lln_test(eps);
    auto d = sigma_from_rate([&](const Rational& x) { return static_cast<std::uint64_t>(t->rate(x)); }, 2000);
    const Rational w = weighted_budget(*t, d, 400);
    need(o, w <= 1, "weighted budget " + to_string(w) + " for eps=" + to_string(eps));
    worst = std::max(worst, w);
  }
  if (o.pass) o.detail = "nu(10^6)=" + std::to_string(prev) + ", budget <= " + to_decimal(worst, 6);
  return o;
}

Outcome c7_supermartingale() {
  Outcome o;
  auto m = kt_supermartingale();
  const auto chk = check_supermartingale(m, 13);  // every x with l(x) <= 12
  need(o, chk.ok && chk.equality_everywhere, "fairness fails: " + chk.first_violation);
  need(o, m(BitString("")) == 1, "M(empty) != 1");
  need(o, m(BitString("00")) == ratio(4, 3), "M(00) != 4/3");
  if (o.pass) o.detail = "equality for l(x) <= 12";
  return o;
}

Outcome c8_selector() {
  Outcome o;
  auto m = kt_supermartingale();
  std::size_t cases = 0;
  for (unsigned len = 0; len <= 4; ++len)
    for (const auto& x : all_of_length(len))
      for (unsigned n = 1; n <= 6; ++n) {
        auto full = all_of_length(n);
        for (std::size_t size : {1ul, 5ul, 64ul})
          for (std::size_t start = 0; start < full.size(); start += std::max<std::size_t>(size, 7)) {
            std::vector<BitString> a(full.begin() + static_cast<long>(start),
                                     full.begin() + static_cast<long>(std::min(full.size(), start + size)));
            const Rational b = uniform_mass(a);
            const Selection s = select_extension(m, x, a);
            for (std::size_t j = 1; j <= s.y.size(); ++j)
              need(o, m(x + s.y.prefix(j)) * b <= 2 * m(x), "bound fails at x=" + x.str());
            need(o, over_threshold_fraction(m, x, a) <= ratio(1, 2), "over-threshold mass at x=" + x.str());
            ++cases;
          }
      }
  if (o.pass) o.detail = std::to_string(cases) + " fixtures, |A| <= 64";
  return o;
}

Outcome c9_construction() {
  Outcome o;
  const BuildResult& res = toy_run();
  need(o, res.steps.size() >= 4, "fewer than 4 steps");
  std::string parts;
  const bool a = res.budget_ok;
  bool b = true, cc = true, d = true;
  for (const auto& st : res.steps) {
    const auto& cp = st.checkpoint;
    if (st.odd) b = b && 8 * cp.ones <= 2 * cp.length;  // <= 2r with r = 1/8
    else cc = cc && 8 * cp.ones >= cp.length;
  }
  b = b && res.checkpoints_ok;
  cc = cc && res.checkpoints_ok;
  std::string metrics;
  for (const auto& st : res.stages)
    if (st.s > 0) {
      d = d && st.metric < st.metric_target;
      metrics += " s" + std::to_string(st.s) + "=" + to_decimal(st.metric, 3);
    }
  need(o, a, "(a) budget");
  need(o, b, "(b) odd-step frequency");
  need(o, cc, "(c) even-step frequency");
  need(o, d, "(d) well-distribution certificate < 1/s fails at R <= 2:" + metrics);
  o.detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " (b) " + (b ? "ok" : "FAIL") + " (c) " + (cc ? "ok" : "FAIL") +
             " (d) " + (d ? "ok" : "FAIL") + (d ? "" : " [metrics" + metrics + "]");
  return o;
}

Outcome c10_compression(const Rational& margin) {
  Outcome o;
  need(o, kernels::lz78_roundtrip_failures_parallel(16) == 0, "LZ78 round trip fails");
  const BuildResult& res = toy_run();
  std::optional<Rational> lo_odd, hi_even;
  for (const auto& cp : res.checkpoints) {
    const Rational v = ratio_series(res.name, {cp.length})[0];
    if (cp.odd) lo_odd = lo_odd ? std::min(*lo_odd, v) : v;
    else hi_even = hi_even ? std::max(*hi_even, v) : v;
  }
  need(o, lo_odd && hi_even, "missing checkpoints");
  if (lo_odd && hi_even) {
    const Rational gap = *hi_even - *lo_odd;
    need(o, gap >= margin, "gap " + to_decimal(gap, 6) + " < " + to_decimal(margin, 6));
    if (o.pass) o.detail = "round trip <= 16 ok, gap " + to_string(gap) + " = " + to_decimal(gap, 4) + " >= " + to_string(margin);
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome c11_determinism(const std::string& cli) {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / "cutstack_acceptance";
  fs::remove_all(base);
  std::string manifests[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path dir = base / ("run" + std::to_string(i));
    const std::string cmd = "\"" + cli + "\" --out \"" + dir.string() + "\" construct --steps 4 > /dev/null";
    need(o, std::system(cmd.c_str()) == 0, "construct run failed");
    manifests[i] = slurp(dir / "manifest.json");
  }
  need(o, !manifests[0].empty() && manifests[0] == manifests[1], "manifests differ");
  fs::remove_all(base);
  if (o.pass) o.detail = "two construct runs, identical manifest.json";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = CUTSTACK_CLI;
  Rational margin = ratio(1, 20);
  std::set<int> expect_fail;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--expect-fail") {
      std::stringstream ss(argv[i + 1]);
      for (std::string id; std::getline(ss, id, ',');) expect_fail.insert(std::stoi(id));
    }
    if (std::string(argv[i]) == "--margin") margin = parse_rational(argv[i + 1]);
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }

  struct Criterion {
    int id;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, 60, c1_gadget_calculus},
      {2, 300, c2_fold_search},
      {3, 300, c3_measure_preservation},
      {4, 120, c4_lln},
      {5, 120, c5_max_inequality},
      {6, 120, c6_sigma_extraction},
      {7, 60, c7_supermartingale},
      {8, 120, c8_selector},
      {9, 1800, c9_construction},
      {10, 600, [&] { return c10_compression(margin); }},
      {11, 1800, [&] { return c11_determinism(cli); }},
  };

  int failed = 0, unexpected = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.detail += " (over the time limit)";
    }
    failed += !o.pass;
    unexpected += o.pass == expect_fail.count(c.id) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << o.detail << " [" << std::fixed
              << std::setprecision(2) << secs << "s < " << c.limit_s << "s]\n";
    std::cout.unsetf(std::ios::fixed);
  }
  std::cout << (all.size() - failed) << "/" << all.size() << " criteria pass";
  if (!expect_fail.empty()) std::cout << " (" << expect_fail.size() << " expected to fail, " << unexpected << " unexpected outcomes)";
  std::cout << "\n";
  return unexpected == 0 ? 0 : 1;
}
