#include "cutstack/construction.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cutstack/error.hpp"

namespace cutstack {

namespace {

[[noreturn]] void fail(std::string code, const std::string& msg) { throw Error(Module::construction, std::move(code), msg); }

unsigned floor_log2(std::uint64_t n) {
  unsigned k = 0;
  while (n >>= 1) ++k;
  return k;
}

}  // namespace

SigmaFn parse_sigma(const std::string& spec) {
  if (spec == "log2") return {spec, [](std::uint64_t n) -> std::uint64_t { return n ? floor_log2(n) : 0; }};
  if (spec == "sqrt")
    return {spec, [](std::uint64_t n) {
              std::uint64_t s = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
              while (s * s > n) --s;
              while ((s + 1) * (s + 1) <= n) ++s;
              return s;
            }};
  if (spec.rfind("linear:", 0) == 0) {
    Rational slope = parse_rational(spec.substr(7));
    if (slope <= 0) fail("bad_sigma", "linear sigma needs a positive slope");
    return {spec, [slope](std::uint64_t n) {
              return static_cast<std::uint64_t>(floor_of(slope * static_cast<unsigned long>(n)).get_ui());
            }};
  }
  if (spec.rfind("table:", 0) == 0) {
    std::vector<std::uint64_t> table;
    std::stringstream ss(spec.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
        fail("bad_sigma", "sigma table entries must be nonnegative integers");
      table.push_back(std::stoull(item));
    }
    if (table.empty()) fail("bad_sigma", "empty sigma table");
    for (std::size_t i = 1; i < table.size(); ++i)
      if (table[i] < table[i - 1]) fail("bad_sigma", "sigma table must be nondecreasing");
    // sigma(n) = table[n] inside the table, then the last value plus floor(log2) growth past it
    return {spec, [table](std::uint64_t n) {
              if (n < table.size()) return table[n];
              return table.back() + floor_log2(n) - floor_log2(table.size() - 1 ? table.size() - 1 : 1);
            }};
  }
  fail("bad_sigma", "unknown sigma preset '" + spec + "' (log2, sqrt, linear:p/q, table:...)");
}

std::uint64_t HeightSchedule::at(long i) const {
  if (i < -2 || static_cast<std::size_t>(i + 2) >= h.size())
    fail("schedule_short", "schedule has no entry h_" + std::to_string(i));
  return h[static_cast<std::size_t>(i + 2)];
}

HeightSchedule compute_schedule(const SigmaFn& sigma, const Rational& r, std::size_t count, std::uint64_t horizon) {
  if (!(r > 0 && r <= ratio(1, 8)) || !is_dyadic(r)) fail("bad_r", "r must be dyadic with 0 < r <= 1/8");
  if (count < 2) fail("bad_count", "schedule needs at least h_{-2} and h_{-1}");
  const long log_r = static_cast<long>(dyadic_exponent(r));  // -log2 r
  HeightSchedule out;
  out.r = r;
  out.sigma_spec = sigma.spec;
  out.h.push_back(1);
  for (std::size_t idx = 1; idx < count; ++idx) {
    const long i = static_cast<long>(idx) - 1;  // the inequality for h_{i-1} = h[idx]
    const std::uint64_t prev = out.h.back();
    const std::uint64_t base = sigma(prev);
    const long need = i + log_r + 11;  // sigma(h) - base > need
    auto ok = [&](std::uint64_t h) { return static_cast<long double>(sigma(h)) - static_cast<long double>(base) > need; };
    std::uint64_t hi = prev + 1;
    while (!ok(hi)) {
      if (hi > horizon / 2) fail("sigma_too_flat", "sigma too flat: no h <= " + std::to_string(horizon) + " for i = " + std::to_string(i));
      hi *= 2;
    }
    std::uint64_t lo = std::max(prev, hi / 2);  // !ok(lo) or lo == prev
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (ok(mid))
        hi = mid;
      else
        lo = mid;
    }
    out.h.push_back(hi);
  }
  return out;
}

HeightSchedule toy_schedule(const Rational& r, std::vector<std::uint64_t> h) {
  if (!(r > 0 && r <= ratio(1, 8)) || !is_dyadic(r)) fail("bad_r", "r must be dyadic with 0 < r <= 1/8");
  if (h.size() < 3) fail("bad_schedule", "toy schedule needs h_{-2}, h_{-1}, h_0 at least");
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i] <= h[i - 1]) fail("bad_schedule", "schedule must be strictly increasing");
  return {r, std::move(h), true, ""};
}

nlohmann::json schedule_json(const HeightSchedule& s) {
  nlohmann::json h = nlohmann::json::array();
  for (std::size_t i = 0; i < s.h.size(); ++i) h.push_back({{"i", static_cast<long>(i) - 2}, {"h", s.h[i]}});
  nlohmann::json out = {{"r", to_string(s.r)}, {"mode", s.toy ? "toy" : "schedule"}, {"h", h}};
  if (!s.sigma_spec.empty()) out["sigma"] = s.sigma_spec;
  return out;
}

ConstructionConfig default_toy_config(const Rational& r) {
  ConstructionConfig c;
  c.r = r;
  c.schedule = toy_schedule(r, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  c.sigma = parse_sigma("log2");
  c.toy = true;
  return c;
}

Rational fold_metric(const LazyGadget& lambda, unsigned m) {
  if (m == 2) return well_distribution_fold_two(lambda.shapes());
  auto classes = lambda.shapes();
  std::vector<ColumnShape> cols;
  for (const auto& c : classes) {
    if (c.count + cols.size() > 12) fail("metric_unavailable", "fold metric for m > 2 limited to 12 columns");
    for (std::uint64_t i = 0; i < c.count; ++i) cols.push_back({c.width, c.height});
  }
  return well_distribution_fold(cols, m);
}

Construction::Construction(ConstructionConfig config) : config_(std::move(config)) {
  if (!is_dyadic(config_.r) || !(config_.r > 0 && config_.r <= ratio(1, 8)))
    fail("bad_r", "r must be dyadic with 0 < r <= 1/8");
  if (config_.schedule.r != config_.r) fail("bad_schedule", "schedule was computed for a different r");
  pi_ = standard_partition(config_.r);
  init_stage0();
}

// Delta_0: one column over [1/2 - r, 1/2 + r), zeros below 1/2 and ones above, so every
// later copy and fold of it has ones frequency exactly 1/2.
// Pi_0: one column over [0, 1/2 - r) then [1/2 + r, 1).
void Construction::init_stage0() {
  const Rational& r = config_.r;
  const unsigned er = dyadic_exponent(r);
  const std::uint64_t h0 = config_.schedule.at(0);
  const unsigned e = std::max<std::uint64_t>(h0, er + 2) > 40 ? 41 : static_cast<unsigned>(std::max<std::uint64_t>(h0, er + 2));
  if (e > 20) fail("stage0_too_large", "stage 0 would need columns of width 2^-" + std::to_string(e));
  const Rational w = pow2(-static_cast<long>(e));

  auto column = [&](Rational lo, const Rational& hi, Column c) {
    for (; lo < hi; lo += w) {
      c.lefts.push_back(lo);
      c.names.push_back(pi_.symbol(Interval{lo, lo + w}) ? '1' : '0');
    }
    return c;
  };
  Column base;
  base.width = w;
  Gadget pi0, delta0;
  Column p = column(0, ratio(1, 2) - r, base);
  p = column(ratio(1, 2) + r, 1, p);
  pi0.columns.push_back(p);
  delta0.columns.push_back(column(ratio(1, 2) - r, ratio(1, 2) + r, base));

  Stage st;
  st.pi = lazy_explicit(std::move(pi0));
  st.delta = lazy_explicit(std::move(delta0));
  st.record.s = 0;
  st.record.width = st.pi->total_width();
  st.record.width_bound = pow2(-static_cast<long>(h0));
  st.record.width_ok = st.record.width <= st.record.width_bound;
  st.record.measure_pi = st.pi->measure();
  st.record.measure_delta = st.delta->measure();
  st.record.pi_columns = st.pi->size();
  st.record.delta_columns = st.delta->size();
  stages_.push_back(std::move(st));
}

void Construction::advance_stage() {
  const unsigned s = static_cast<unsigned>(stages_.size());
  const Stage& prev = stages_.back();
  auto delta1 = lazy_copy(prev.delta, 1, 2);
  auto delta2 = lazy_copy(prev.delta, 2, 2);
  auto lambda = lazy_union({prev.pi, delta2});

  StageRecord rec;
  rec.s = s;
  rec.width_bound = pow2(-static_cast<long>(config_.schedule.at(static_cast<long>(s))));
  rec.metric_target = ratio(1, static_cast<long>(s));
  rec.gamma = (prev.delta->measure() / 2) / prev.pi->measure();
  rec.gamma_formula = pow2(-static_cast<long>(s) + 1) * config_.r / (1 - pow2(-static_cast<long>(s) + 2) * config_.r);
  if (s > 2) rec.gamma_printed = pow2(-static_cast<long>(s) + 1) * config_.r / (1 - pow2(-static_cast<long>(s) + 2));

  std::optional<unsigned> chosen, width_only;
  for (unsigned m = 2; m <= config_.fold_cap; m *= 2) {
    const bool width_ok = lambda->total_width() / m <= rec.width_bound;
    Rational metric;
    try {
      metric = fold_metric(*lambda, m);
    } catch (const Error&) {
      break;
    }
    rec.search.emplace_back(m, metric);
    if (width_ok && !width_only) width_only = m;
    if (width_ok && metric < rec.metric_target) {
      chosen = m;
      break;
    }
  }
  if (!chosen) {
    std::string best;
    for (const auto& [m, v] : rec.search) best += " R=" + std::to_string(m) + ":" + to_decimal(v, 6);
    if (!config_.toy || !width_only)
      fail("fold_cap", "no R <= " + std::to_string(config_.fold_cap) + " meets the stage " + std::to_string(s) +
                           " conditions; best metrics" + best);
    chosen = width_only;  // toy mode: keep going and record the unmet certificate
  }
  rec.fold = *chosen;
  for (const auto& [m, v] : rec.search)
    if (m == rec.fold) rec.metric = v;
  rec.metric_met = rec.metric < rec.metric_target;

  Stage st;
  st.lambda = lambda;
  st.lambda_pi_columns = prev.pi->size();
  st.pi = lazy_fold(lambda, rec.fold);
  st.delta = lazy_fold(delta1, rec.fold);
  rec.width = st.pi->total_width();
  rec.width_ok = rec.width <= rec.width_bound;
  rec.measure_pi = st.pi->measure();
  rec.measure_delta = st.delta->measure();
  rec.pi_columns = st.pi->size();
  rec.delta_columns = st.delta->size();
  st.record = std::move(rec);
  stages_.push_back(std::move(st));
}

const Stage& Construction::stage(unsigned s) {
  if (s > config_.stage_cap)
    fail("stage_cap", "stage " + std::to_string(s) + " beyond the configured cap " + std::to_string(config_.stage_cap));
  while (stages_.size() <= s) advance_stage();
  return stages_[s];
}

StageAudit audit_stage(Construction& c, unsigned s, std::uint64_t exhaustive_level_limit) {
  const Stage& st = c.stage(s);
  const Rational& r = c.config().r;
  const Partition& pi = c.partition();
  StageAudit out;
  out.s = s;
  const Rational want_delta = pow2(-static_cast<long>(s) + 1) * r;
  out.ledger_ok = st.delta->measure() == want_delta && st.pi->measure() == 1 - want_delta &&
                  st.record.measure_pi + st.record.measure_delta == 1;

  const LazyGadget* parts[2] = {st.pi.get(), st.delta.get()};
  auto total_levels = [&](const LazyGadget& g) -> std::optional<std::uint64_t> {
    if (g.size() > (1u << 20)) return std::nullopt;
    std::uint64_t n = 0;
    for (std::uint64_t col = 0; col < g.size(); ++col) n += g.height(col);
    return n;
  };
  auto np = total_levels(*st.pi), nd = total_levels(*st.delta);
  out.exhaustive = np && nd && *np + *nd <= exhaustive_level_limit;
  out.maps_ok = out.names_ok = out.tiles_ok = true;

  auto check_level = [&](const LazyGadget& g, std::uint64_t col, std::uint64_t j, const Rational& lo) {
    const Rational w = g.width(col);
    if (pi.symbol(Interval{lo, lo + w}) != (g.name(col, j) == '1')) out.names_ok = false;
    if (j + 1 < g.height(col)) {
      // T moves the level onto its successor, which must be found where it claims to be
      const Rational up = g.left(col, j + 1);
      auto hit = g.locate(up + w / 3);
      if (!hit || hit->column != col || hit->level != j + 1 || hit->offset != ratio(1, 3)) out.maps_ok = false;
    }
    ++out.levels_checked;
  };

  if (out.exhaustive) {
    std::vector<Interval> all;
    for (const LazyGadget* g : parts)
      for (std::uint64_t col = 0; col < g->size(); ++col)
        for (std::uint64_t j = 0; j < g->height(col); ++j) {
          Rational lo = g->left(col, j);
          check_level(*g, col, j, lo);
          all.push_back({lo, lo + g->width(col)});
        }
    std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    if (all.empty() || all.front().lo != 0 || all.back().hi != 1) out.tiles_ok = false;
    for (std::size_t i = 1; i < all.size() && out.tiles_ok; ++i)
      if (all[i].lo != all[i - 1].hi) out.tiles_ok = false;
    out.detail = "exhaustive over " + std::to_string(all.size()) + " levels";
    return out;
  }

  // Sampled windows: sweep each window level by level through Pi_s and Delta_s.
  const std::vector<Rational> starts{ratio(0, 1), ratio(1, 7), ratio(1, 3), ratio(1, 2) - r / 3, ratio(1, 2),
                                     ratio(1, 2) + r / 5, ratio(5, 7), ratio(9, 10)};
  const std::uint64_t per_window = std::max<std::uint64_t>(64, exhaustive_level_limit / 64);
  for (const auto& x0 : starts) {
    Rational x = x0;
    for (std::uint64_t n = 0; n < per_window && x < 1; ++n) {
      auto hp = st.pi->locate(x);
      auto hd = st.delta->locate(x);
      if (static_cast<bool>(hp) == static_cast<bool>(hd)) {
        out.tiles_ok = false;  // a gap or an overlap between Pi_s and Delta_s
        break;
      }
      const LazyGadget& g = hp ? *st.pi : *st.delta;
      const LevelHit& h = hp ? *hp : *hd;
      const Rational lo = g.left(h.column, h.level);
      const Rational w = g.width(h.column);
      if (!(lo <= x && x < lo + w) || x != lo + h.offset * w) out.tiles_ok = false;
      check_level(g, h.column, h.level, lo);
      x = lo + w;
    }
  }
  out.detail = "sampled " + std::to_string(out.levels_checked) + " levels in " + std::to_string(starts.size()) + " windows";
  return out;
}

}  // namespace cutstack

namespace cutstack {

namespace {

struct Piece {
  Interval part;
  std::uint64_t column;
  std::uint64_t level;
};

BitString dyadic_string(const Interval& iv) { return interval_to_string(dyadic_subinterval(iv.lo, iv.hi)); }

// omega(0): shortest, then lexicographically least, string inside Pi_0 with M <= 4 on every prefix.
BitString initial_segment(const LazyGadget& pi0, const Supermartingale& m) {
  for (unsigned len = 1; len <= 20; ++len)
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      BitString x = BitString::from_uint(v, len);
      const Interval iv = string_to_interval(x).interval();
      bool inside = true;
      for (Rational lo = iv.lo; lo < iv.hi && inside;) {
        auto hit = pi0.locate(lo);
        if (!hit) {
          inside = false;
          break;
        }
        lo = pi0.level(hit->column, hit->level).hi;
      }
      if (!inside) continue;
      bool small = true;
      for (const auto& v2 : m.along(x))
        if (!le_pow2(v2, 2)) small = false;
      if (small) return x;
    }
  fail("no_initial_segment", "no omega(0) of length <= 20");
}

std::vector<BitString> suffixes(const std::vector<BitString>& strings, std::size_t n) {
  std::vector<BitString> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(s.suffix_from(n));
  return out;
}

void hypotheses(StepRecord& rec, const Construction& c, const Supermartingale& m, const BitString& a,
                unsigned s_prev, unsigned s_prev2) {
  const auto& cfg = c.config();
  rec.length_hypothesis = a.size() >= cfg.schedule.at(static_cast<long>(s_prev));
  const long budget = static_cast<long>(cfg.sigma(cfg.schedule.at(static_cast<long>(s_prev2))));
  rec.deficiency_hypothesis = le_pow2(m(a), rec.odd ? budget - 5 : budget);
}

// Selection among the candidates; fills bound, max_value and omega.
void choose(StepRecord& rec, const Supermartingale& m, const BitString& a, const std::vector<BitString>& cand,
            const Rational& penalty) {
  auto rel = suffixes(cand, a.size());
  rec.candidate_mass = uniform_mass(rel);
  rec.mass_ok = rec.candidate_mass >= rec.required_mass;
  const Selection sel = select_extension(m, a, rel);
  rec.bound = sel.bound;
  rec.max_value = sel.max_value;
  rec.penalty_ok = sel.max_value <= penalty * m(a);
  rec.omega = a + sel.y;
}

StepRecord odd_step(Construction& c, const Supermartingale& m, const BitString& a, unsigned k, unsigned s_prev,
                    unsigned s_prev2) {
  const auto& cfg = c.config();
  StepRecord rec;
  rec.k = k;
  rec.odd = true;
  hypotheses(rec, c, m, a, s_prev, s_prev2);
  rec.required_mass = ratio(1, 16);
  const Interval ia = string_to_interval(a).interval();
  const Rational scale = pow2(static_cast<long>(a.size()));  // relative to 2^-l(a)

  for (unsigned s = s_prev + 1; s <= cfg.stage_cap; ++s) {
    const Stage& st = c.stage(s);
    std::vector<Piece> lower;
    Rational low = 0;
    std::uint64_t pieces = 0;
    bool truncated = false;
    for (Rational x = ia.lo; x < ia.hi;) {
      if (++pieces > cfg.piece_cap) {
        truncated = true;
        break;
      }
      auto hit = st.pi->locate(x);
      if (!hit) {
        auto hd = st.delta->locate(x);
        if (!hd) fail("tiling", "point " + to_string(x) + " in neither Pi nor Delta at stage " + std::to_string(s));
        x = st.delta->level(hd->column, hd->level).hi;
        continue;
      }
      const Interval lev = st.pi->level(hit->column, hit->level);
      const Interval part = intersect(lev, ia);
      const std::uint64_t h = st.pi->height(hit->column);
      const std::uint64_t rest = h - hit->level;
      const Rational ones = st.pi->ones_from(hit->column, hit->level);
      if (ones <= 2 * cfg.r * static_cast<unsigned long>(rest)) {
        low += part.length();
        if (hit->level < (h + 1) / 2) lower.push_back({part, hit->column, hit->level});
      }
      x = part.hi;
    }
    rec.s = s;
    rec.pieces = pieces - truncated;
    rec.truncated = truncated;
    rec.low_freq_mass = low * scale;
    if (rec.low_freq_mass < ratio(1, 2) || lower.empty()) continue;

    std::vector<BitString> cand;
    for (const auto& p : lower) cand.push_back(dyadic_string(p.part));
    rec.candidates = cand.size();
    choose(rec, m, a, cand, Rational(32));
    const Interval ib = string_to_interval(rec.omega).interval();
    for (const auto& p : lower)
      if (p.part.contains(ib)) {
        const std::uint64_t len = st.pi->height(p.column) - p.level;
        const std::uint64_t ones = st.pi->ones_from(p.column, p.level);
        rec.checkpoint = {k, true, s, len, ones, ones <= 2 * cfg.r * static_cast<unsigned long>(len)};
      }
    if (truncated) rec.note = "sweep truncated at the piece cap";
    return rec;
  }
  fail("low_frequency_mass", "stage cap " + std::to_string(cfg.stage_cap) + " reached; low-frequency mass " +
                                 to_string(rec.low_freq_mass) + " of I_a at stage " + std::to_string(rec.s));
}

StepRecord even_step(Construction& c, const Supermartingale& m, const BitString& b, unsigned k, unsigned s_prev,
                     unsigned s_prev2) {
  const auto& cfg = c.config();
  StepRecord rec;
  rec.k = k;
  rec.odd = false;
  hypotheses(rec, c, m, b, s_prev, s_prev2);
  const unsigned s = s_prev + 1;
  rec.s = s;
  const Stage& prev = c.stage(s - 1);
  const Stage& st = c.stage(s);
  const LazyGadget& lambda = *st.lambda;
  const unsigned R = st.record.fold;
  rec.required_mass = st.record.gamma / 16;

  const Interval ib = string_to_interval(b).interval();
  auto hit = prev.pi->locate(ib.lo);
  if (!hit) fail("even_start", "I_b is not inside Pi_" + std::to_string(s - 1));
  const Interval lev = prev.pi->level(hit->column, hit->level);
  if (!lev.contains(ib)) fail("even_start", "I_b straddles levels of Pi_" + std::to_string(s - 1));
  const std::uint64_t rem = prev.pi->height(hit->column) - hit->level;
  const std::uint64_t ones_rem = prev.pi->ones_from(hit->column, hit->level);
  const Rational w = lev.length();
  const Rational u_lo = (ib.lo - lev.lo) / w, u_hi = (ib.hi - lev.lo) / w;
  const std::uint64_t first_delta = st.lambda_pi_columns;
  const Rational delta_start = lambda.prefix(first_delta);

  std::vector<BitString> cand;
  std::vector<Checkpoint> marks;
  std::vector<Interval> spans;
  // Slot t holds the level, slot t+1 a Delta'' column e: offsets (t + P(e) + [0, p(e))) / R of the level.
  for (unsigned t = 0; t + 1 < R; ++t) {
    const Rational lo = std::max<Rational>(u_lo * R - t, delta_start);
    const Rational hi = std::min<Rational>(u_hi * R - t, Rational(1));
    if (lo >= hi) continue;
    for (std::uint64_t e = lambda.find_by_prefix(lo); e < lambda.size(); ++e) {
      const Rational pe = lambda.prefix(e);
      if (pe >= hi) break;
      if (++rec.pieces > cfg.piece_cap) {
        rec.truncated = true;
        break;
      }
      const std::uint64_t me = lambda.height(e);
      const std::uint64_t ones_e = lambda.ones_total(e);
      if (4 * ones_e < me || 8 * (ones_rem + ones_e) < rem + me) continue;
      const Interval j = intersect({lev.lo + (t + pe) * w / R, lev.lo + (t + pe + lambda.prob(e)) * w / R}, ib);
      if (j.empty()) continue;
      cand.push_back(dyadic_string(j));
      spans.push_back(j);
      marks.push_back({k, false, s, rem + me, ones_rem + ones_e, true});
    }
  }
  rec.candidates = cand.size();
  if (cand.empty()) fail("frequency_mass_shortfall", "no Delta'' traversal with ones frequency >= 1/4 inside I_b at stage " + std::to_string(s));
  choose(rec, m, b, cand, 64 / st.record.gamma);
  if (!rec.mass_ok) {
    if (!cfg.toy)
      fail("frequency_mass_shortfall", "frequency mass shortfall: " + to_string(rec.candidate_mass) + " < " + to_string(rec.required_mass));
    rec.note = "frequency mass shortfall " + to_string(rec.candidate_mass) + " < " + to_string(rec.required_mass);
  }
  const Interval ic = string_to_interval(rec.omega).interval();
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i].contains(ic)) rec.checkpoint = marks[i];
  return rec;
}

}  // namespace

BuildResult build_unstable(Construction& c, unsigned k_max) {
  const auto& cfg = c.config();
  const Supermartingale m = kt_supermartingale();
  BuildResult out;
  out.toy = cfg.toy;
  out.omega = initial_segment(*c.stage(0).pi, m);

  std::vector<unsigned> s_of{0, 0};  // s(-1), s(0)
  for (unsigned k = 1; k <= k_max; ++k) {
    const unsigned s_prev = s_of.back(), s_prev2 = s_of[s_of.size() - 2];
    StepRecord rec = (k % 2 == 1) ? odd_step(c, m, out.omega, k, s_prev, s_prev2) : even_step(c, m, out.omega, k, s_prev, s_prev2);
    out.omega = rec.omega;
    s_of.push_back(rec.s);
    out.checkpoints.push_back(rec.checkpoint);
    out.steps.push_back(std::move(rec));
  }
  for (unsigned s = 0; s <= c.built(); ++s) out.stages.push_back(c.stage(s).record);

  // The trajectory name of the left endpoint, read off the deepest stage used.
  out.x_star = string_to_interval(out.omega).left;
  const Stage& last = c.stage(s_of.back());
  auto hit = last.pi->locate(out.x_star);
  if (!hit) fail("x_star", "x* is not inside Pi_" + std::to_string(s_of.back()));
  std::string name;
  for (std::uint64_t j = hit->level; j < last.pi->height(hit->column); ++j) name += last.pi->name(hit->column, j);
  out.name = BitString(name);
  out.checkpoints_ok = true;
  for (const auto& cp : out.checkpoints)
    if (!cp.ok || cp.length == 0 || cp.length > out.name.size() || out.name.prefix(cp.length).ones() != cp.ones)
      out.checkpoints_ok = false;

  out.trace = trace_deficiency(m, out.omega);
  const SigmaFn sigma = cfg.sigma;
  out.budget_ok = budget_check(out.trace, [&](std::size_t j) { return static_cast<unsigned>(sigma(j)); });
  return out;
}

void write_construction_jsonl(std::ostream& os, const BuildResult& r, const ConstructionConfig& config) {
  const char* mode = r.toy ? "toy" : "schedule";
  for (const auto& st : r.stages) {
    nlohmann::json search = nlohmann::json::array();
    for (const auto& [m, v] : st.search) search.push_back({{"R", m}, {"metric", to_string(v)}});
    nlohmann::json j = {{"record", "stage"},
                        {"mode", mode},
                        {"s", st.s},
                        {"R", st.fold},
                        {"width", to_string(st.width)},
                        {"width_bound", to_string(st.width_bound)},
                        {"width_ok", st.width_ok},
                        {"metric", to_string(st.metric)},
                        {"metric_target", to_string(st.metric_target)},
                        {"metric_met", st.metric_met},
                        {"search", search},
                        {"gamma", to_string(st.gamma)},
                        {"gamma_formula", to_string(st.gamma_formula)},
                        {"measure_pi", to_string(st.measure_pi)},
                        {"measure_delta", to_string(st.measure_delta)},
                        {"pi_columns", st.pi_columns},
                        {"delta_columns", st.delta_columns}};
    j["gamma_printed"] = st.gamma_printed ? nlohmann::json(to_string(*st.gamma_printed)) : nlohmann::json(nullptr);
    os << j.dump() << '\n';
  }
  for (const auto& st : r.steps) {
    const auto& cp = st.checkpoint;
    nlohmann::json j = {{"record", "step"},
                        {"mode", mode},
                        {"k", st.k},
                        {"parity", st.odd ? "odd" : "even"},
                        {"s", st.s},
                        {"omega", st.omega.str()},
                        {"candidates", st.candidates},
                        {"pieces", st.pieces},
                        {"truncated", st.truncated},
                        {"low_freq_mass", to_string(st.low_freq_mass)},
                        {"candidate_mass", to_string(st.candidate_mass)},
                        {"required_mass", to_string(st.required_mass)},
                        {"mass_ok", st.mass_ok},
                        {"bound", to_string(st.bound)},
                        {"max_value", to_string(st.max_value)},
                        {"penalty_ok", st.penalty_ok},
                        {"length_hypothesis", st.length_hypothesis},
                        {"deficiency_hypothesis", st.deficiency_hypothesis},
                        {"checkpoint", {{"length", cp.length}, {"ones", cp.ones}, {"ok", cp.ok}}},
                        {"note", st.note}};
    os << j.dump() << '\n';
  }
  nlohmann::json summary = {{"record", "summary"},
                            {"mode", mode},
                            {"r", to_string(config.r)},
                            {"sigma", config.sigma.spec},
                            {"schedule", schedule_json(config.schedule)},
                            {"omega", r.omega.str()},
                            {"x_star", to_string(r.x_star)},
                            {"name", r.name.str()},
                            {"checkpoints_ok", r.checkpoints_ok},
                            {"budget_ok", r.budget_ok}};
  os << summary.dump() << '\n';
}

}  // namespace cutstack
