#include "cutstack/gadget.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "cutstack/error.hpp"

namespace cutstack {

namespace {

[[noreturn]] void fail(std::string code, const std::string& msg) { throw Error(Module::gadget, std::move(code), msg); }

std::vector<Interval> sorted_levels(const Column& c) {
  std::vector<Interval> out;
  out.reserve(c.height());
  for (std::size_t j = 0; j < c.height(); ++j) out.push_back(c.level(j));
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  return out;
}

bool pairwise_disjoint(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i].lo < v[i - 1].hi) return false;
  return true;
}

// Column cut to the horizontal slice [offset, offset + frac) of its width.
Column slice(const Column& c, const Rational& offset, const Rational& frac) {
  Column out;
  out.width = c.width * frac;
  out.names = c.names;
  out.lineage = c.lineage;
  out.lefts.reserve(c.height());
  const Rational shift = c.width * offset;
  for (const auto& l : c.lefts) out.lefts.push_back(l + shift);
  return out;
}

}  // namespace

std::size_t Column::ones() const { return static_cast<std::size_t>(std::count(names.begin(), names.end(), '1')); }

Rational Gadget::width() const {
  Rational w = 0;
  for (const auto& c : columns) w += c.width;
  return w;
}

Rational Gadget::measure() const {
  Rational m = 0;
  for (const auto& c : columns) m += c.measure();
  return m;
}

std::size_t Gadget::level_count() const {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.height();
  return n;
}

bool IntervalSet::contains(const Rational& x) const {
  return std::any_of(parts.begin(), parts.end(), [&](const Interval& i) { return i.contains(x); });
}

Rational IntervalSet::measure() const {
  Rational m = 0;
  for (const auto& p : parts) m += p.length();
  return m;
}

int Partition::symbol(const Rational& x) const {
  if (pi1.contains(x)) return 1;
  if (pi0.contains(x)) return 0;
  throw Error(Module::gadget, "outside_partition", to_string(x) + " lies in neither partition element");
}

int Partition::symbol(const Interval& level) const {
  for (const auto& p : pi1.parts)
    if (p.contains(level)) return 1;
  for (const auto& p : pi0.parts)
    if (p.contains(level)) return 0;
  fail("incompatible_level", "level [" + to_string(level.lo) + ", " + to_string(level.hi) + ") straddles the partition");
}

Partition standard_partition(const Rational& r) {
  const Rational half(1, 2);
  Partition p;
  p.pi1.parts = {{half, half + r}};
  p.pi0.parts = {{0, half}, {half + r, 1}};
  return p;
}

std::vector<Rational> distribution(const Gadget& g) {
  if (g.columns.empty()) fail("empty_gadget", "empty gadget");
  const Rational w = g.width();
  std::vector<Rational> out;
  out.reserve(g.columns.size());
  for (const auto& c : g.columns) out.push_back(c.width / w);
  return out;
}

std::vector<Gadget> cut_copies(const Gadget& g, const std::vector<Rational>& weights) {
  Rational total = 0;
  for (const auto& w : weights) {
    if (w <= 0) fail("bad_weights", "copy weights must be positive");
    total += w;
  }
  if (total != 1) fail("bad_weights", "copy weights sum to " + to_string(total) + ", not 1");
  std::vector<Gadget> out(weights.size());
  Rational offset = 0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    out[m].stage_id = g.stage_id;
    out[m].columns.reserve(g.columns.size());
    for (const auto& c : g.columns) out[m].columns.push_back(slice(c, offset, weights[m]));
    offset += weights[m];
  }
  return out;
}

Column stack_columns(const Column& lower, const Column& upper) {
  if (lower.width != upper.width)
    fail("width_mismatch", "cannot stack columns of widths " + to_string(lower.width) + " and " + to_string(upper.width));
  auto a = sorted_levels(lower);
  auto b = sorted_levels(upper);
  std::vector<Interval> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all),
             [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].lo < all[i - 1].hi) fail("overlap", "stacked columns have overlapping supports");
  Column out;
  out.width = lower.width;
  out.lefts = lower.lefts;
  out.lefts.insert(out.lefts.end(), upper.lefts.begin(), upper.lefts.end());
  out.names = lower.names + upper.names;
  out.lineage = lower.lineage;
  out.lineage.insert(out.lineage.end(), upper.lineage.begin(), upper.lineage.end());
  return out;
}

Gadget stack_gadget_on_gadget(const Gadget& u, const Gadget& l) {
  const Rational wu = u.width();
  if (wu != l.width()) fail("width_mismatch", "gadgets to stack have different widths");
  const auto pu = distribution(u);
  const auto pl = distribution(l);
  auto copies = cut_copies(l, pu);
  Gadget out;
  out.stage_id = std::max(u.stage_id, l.stage_id);
  out.columns.reserve(u.columns.size() * l.columns.size());
  for (std::size_t i = 0; i < u.columns.size(); ++i) {
    Rational offset = 0;
    for (std::size_t j = 0; j < l.columns.size(); ++j) {
      Column base = slice(u.columns[i], offset, pl[j]);
      out.columns.push_back(stack_columns(base, copies[i].columns[j]));
      offset += pl[j];
    }
  }
  return out;
}

Gadget independent_cut_stack(const Gadget& g, unsigned m) {
  if (m == 0) fail("bad_fold", "fold count must be positive");
  if (g.columns.empty()) fail("empty_gadget", "empty gadget");
  auto copies = cut_copies(g, std::vector<Rational>(m, ratio(1, m)));
  for (auto& copy : copies)
    for (std::uint32_t i = 0; i < copy.columns.size(); ++i) copy.columns[i].lineage = {i};
  Gadget acc = std::move(copies.back());
  for (std::size_t k = m - 1; k-- > 0;) acc = stack_gadget_on_gadget(copies[k], acc);
  acc.stage_id = g.stage_id + 1;
  return acc;
}

Gadget gadget_union(const std::vector<const Gadget*>& parts, std::uint32_t stage_id) {
  Gadget out;
  out.stage_id = stage_id;
  std::vector<Interval> all;
  for (const Gadget* g : parts) {
    for (const auto& c : g->columns) {
      out.columns.push_back(c);
      for (std::size_t j = 0; j < c.height(); ++j) all.push_back(c.level(j));
    }
  }
  if (!pairwise_disjoint(std::move(all))) fail("overlap", "union of gadgets with overlapping supports");
  return out;
}

const Gadget* GadgetRegistry::find(std::uint32_t stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? nullptr : it->second;
}

namespace {

// Expand a lineage word one stage down by substituting each letter's own lineage.
std::vector<std::uint32_t> expand(const std::vector<std::uint32_t>& word, const Gadget& parent) {
  std::vector<std::uint32_t> out;
  for (auto c : word) {
    if (c >= parent.columns.size() || parent.columns[c].lineage.empty())
      fail("lineage_missing", "lineage not tracked to requested stage");
    const auto& l = parent.columns[c].lineage;
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

}  // namespace

WellDistribution well_distribution(const Gadget& lam, const Gadget& up, const GadgetRegistry* registry) {
  if (up.stage_id <= lam.stage_id) fail("lineage_missing", "lineage not tracked to requested stage");
  const bool multi = up.stage_id > lam.stage_id + 1;
  if (multi && !registry) fail("lineage_missing", "lineage not tracked to requested stage");

  std::vector<Rational> lam_measure(lam.columns.size());
  Rational lam_total = 0;
  for (std::size_t d = 0; d < lam.columns.size(); ++d) {
    lam_measure[d] = lam.columns[d].measure();
    lam_total += lam_measure[d];
  }

  Rational total = 0;
  for (const auto& e : up.columns) {
    // An empty word means E uses no column of lam (it is built from other material).
    std::vector<std::uint32_t> word = e.lineage;
    for (std::uint32_t s = up.stage_id - 1; s > lam.stage_id; --s) {
      const Gadget* parent = registry->find(s);
      if (!parent) fail("lineage_missing", "lineage not tracked to requested stage");
      word = expand(word, *parent);
    }
    std::unordered_map<std::uint32_t, std::uint64_t> counts;
    for (auto d : word) {
      if (d >= lam.columns.size()) fail("lineage_missing", "lineage refers past the base gadget");
      ++counts[d];
    }
    const Rational le = e.measure();
    Rational covered = 0;
    for (const auto& [d, c] : counts) {
      Rational inter = e.width * static_cast<unsigned long>(c * lam.columns[d].height());
      total += abs(inter - le * lam_measure[d]);
      covered += lam_measure[d];
    }
    // Columns of lam absent from this E contribute lambda(E) lambda(D) each.
    total += le * (lam_total - covered);
  }
  return {total, multi};
}

Rational well_distribution_fold(const Gadget& lam, unsigned m) {
  std::vector<ColumnShape> shapes;
  shapes.reserve(lam.columns.size());
  for (const auto& c : lam.columns) shapes.push_back({c.width, c.height()});
  return well_distribution_fold(shapes, m);
}

namespace {

// m = 2 closed form: only the two letters of E deviate from lambda(E) lambda(D),
// so the inner sum reduces to sorted prefix sums over heights. Columns come in
// classes of equal shape; every sum is weighted by the class size.
Rational fold_metric_two_classes(const std::vector<ShapeClass>& lam) {
  const std::size_t n = lam.size();
  Rational W = 0;
  for (const auto& c : lam) W += c.width * static_cast<unsigned long>(c.count);
  std::vector<Rational> p(n), h(n), l(n), cnt(n);
  Rational ltot = 0, A = 0, B = 0, C = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cnt[i] = Rational(static_cast<unsigned long>(lam[i].count));
    p[i] = lam[i].width / W;
    h[i] = Rational(static_cast<unsigned long>(lam[i].height));
    l[i] = lam[i].width * h[i];
    ltot += cnt[i] * l[i];
    A += cnt[i] * p[i] * h[i];
    B += cnt[i] * p[i] * l[i];
    C += cnt[i] * p[i] * h[i] * l[i];
  }
  Rational sum = 2 * A * ltot - 2 * C - 2 * A * B;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lam[a].height < lam[b].height; });
  std::vector<Rational> sp(n + 1), sph(n + 1);
  std::vector<std::uint64_t> hs(n);
  for (std::size_t k = 0; k < n; ++k) {
    sp[k + 1] = sp[k] + cnt[order[k]] * p[order[k]];
    sph[k + 1] = sph[k] + cnt[order[k]] * p[order[k]] * h[order[k]];
    hs[k] = lam[order[k]].height;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Rational pii = p[i] * p[i];
    Rational term = -pii * 2 * h[i] * (ltot - 2 * l[i]);
    term += pii * (2 * h[i] * (ltot - l[i]) + 2 * h[i] * (1 - l[i]));
    // sum_{j != i} p_j |h_i (1 - l_i) - h_j l_i|
    Rational inner;
    if (l[i] == 0) {
      inner = 0;
    } else {
      const Rational tau = h[i] * (1 - l[i]) / l[i];
      const BigInt fl = floor_of(tau);
      // k = number of classes with h_j <= tau
      std::size_t k = 0;
      if (fl >= 0) {
        if (!mpz_fits_ulong_p(fl.get_mpz_t())) {
          k = n;
        } else {
          const std::uint64_t cut = fl.get_ui();
          k = static_cast<std::size_t>(std::upper_bound(hs.begin(), hs.end(), cut) - hs.begin());
        }
      }
      inner = l[i] * (tau * sp[k] - sph[k] + (sph[n] - sph[k]) - tau * (sp[n] - sp[k]));
    }
    inner -= p[i] * h[i] * abs(1 - 2 * l[i]);
    term += 2 * p[i] * inner;
    sum += cnt[i] * term;
  }
  return sum * W / 2;
}

Rational fold_metric_two(const std::vector<ColumnShape>& lam) {
  std::vector<ShapeClass> classes;
  classes.reserve(lam.size());
  for (const auto& c : lam) classes.push_back({c.width, c.height, 1});
  return fold_metric_two_classes(classes);
}

struct CompositionWalk {
  const std::vector<ColumnShape>& lam;
  unsigned m;
  std::vector<Rational> p, lmeas;
  std::vector<unsigned> counts;
  Rational total = 0;

  void run(std::size_t i, unsigned left, const Rational& weight) {
    if (i + 1 == lam.size()) {
      counts[i] = left;
      Rational w = weight;
      for (unsigned k = 0; k < left; ++k) w *= p[i];
      finish(w);
      return;
    }
    Rational w = weight;
    for (unsigned c = 0; c <= left; ++c) {
      counts[i] = c;
      run(i + 1, left - c, w);
      w *= p[i];
    }
  }

  void finish(const Rational& prod) {
    // multinomial m! / prod c_i!
    BigInt mult;
    mpz_fac_ui(mult.get_mpz_t(), m);
    Rational H = 0;
    for (std::size_t d = 0; d < lam.size(); ++d) {
      BigInt f;
      mpz_fac_ui(f.get_mpz_t(), counts[d]);
      mult /= f;
      H += Rational(static_cast<unsigned long>(counts[d] * lam[d].height));
    }
    Rational inner = 0;
    for (std::size_t d = 0; d < lam.size(); ++d)
      inner += abs(Rational(static_cast<unsigned long>(counts[d] * lam[d].height)) - H * lmeas[d]);
    total += Rational(mult) * prod * inner;
  }
};

}  // namespace

Rational well_distribution_fold(const std::vector<ColumnShape>& lam, unsigned m) {
  if (m == 0) fail("bad_fold", "fold count must be positive");
  if (lam.empty()) fail("empty_gadget", "empty gadget");
  if (m == 2 && lam.size() > 8) return fold_metric_two(lam);
  Rational W = 0;
  for (const auto& c : lam) W += c.width;
  CompositionWalk walk{lam, m, {}, {}, std::vector<unsigned>(lam.size()), 0};
  for (const auto& c : lam) {
    walk.p.push_back(c.width / W);
    walk.lmeas.push_back(c.width * static_cast<unsigned long>(c.height));
  }
  walk.run(0, m, Rational(1));
  return walk.total * W / m;
}

Rational well_distribution_fold_two(const std::vector<ShapeClass>& lam) {
  if (lam.empty()) fail("empty_gadget", "empty gadget");
  for (const auto& c : lam)
    if (c.count == 0 || c.width <= 0) fail("bad_shape", "shape classes need positive width and count");
  return fold_metric_two_classes(lam);
}

FoldSearch find_well_distributing_fold(const Gadget& g, const Rational& eps, unsigned max_m) {
  FoldSearch out;
  for (unsigned m = 1; m <= max_m; m *= 2) {
    Rational v = well_distribution_fold(g, m);
    out.history.emplace_back(m, v);
    if (v < eps) {
      out.m = m;
      out.metric = v;
      return out;
    }
  }
  fail("fold_cap", "no fold count up to " + std::to_string(max_m) + " reaches the well-distribution target");
}

AuditReport audit_gadget(const Gadget& g) {
  std::vector<Interval> all;
  for (std::size_t i = 0; i < g.columns.size(); ++i) {
    const auto& c = g.columns[i];
    if (c.width <= 0) return {false, "column " + std::to_string(i) + " has nonpositive width"};
    if (c.names.size() != c.height()) return {false, "column " + std::to_string(i) + " names/levels mismatch"};
    for (std::size_t j = 0; j < c.height(); ++j) {
      const auto lv = c.level(j);
      if (lv.lo < 0 || lv.hi > 1) return {false, "column " + std::to_string(i) + " leaves [0,1)"};
      all.push_back(lv);
    }
  }
  if (!pairwise_disjoint(std::move(all))) return {false, "levels overlap"};
  return {};
}

nlohmann::json gadget_to_json(const Gadget& g) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : g.columns) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : c.lefts) levels.push_back(to_string(l));
    cols.push_back({{"width", to_string(c.width)},
                    {"height", c.height()},
                    {"names", c.names},
                    {"lineage", c.lineage},
                    {"level_lefts", levels}});
  }
  return {{"stage_id", g.stage_id}, {"width", to_string(g.width())}, {"measure", to_string(g.measure())}, {"columns", cols}};
}

}  // namespace cutstack
