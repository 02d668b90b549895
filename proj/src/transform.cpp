#include "cutstack/transform.hpp"

#include <algorithm>

#include "cutstack/error.hpp"

namespace cutstack {

TransformStage::TransformStage(Gadget g, std::uint32_t stage_index) : gadget_(std::move(g)), stage_index_(stage_index) {
  for (std::size_t c = 0; c < gadget_.columns.size(); ++c)
    for (std::size_t j = 0; j < gadget_.columns[c].height(); ++j) index_.push_back({gadget_.columns[c].lefts[j], c, j});
  std::sort(index_.begin(), index_.end(), [](const Entry& a, const Entry& b) { return a.lo < b.lo; });
}

std::optional<TransformStage::Position> TransformStage::locate(const Rational& x) const {
  auto it = std::upper_bound(index_.begin(), index_.end(), x, [](const Rational& v, const Entry& e) { return v < e.lo; });
  if (it == index_.begin()) return std::nullopt;
  --it;
  const Column& c = gadget_.columns[it->column];
  if (x >= it->lo + c.width) return std::nullopt;
  return Position{it->column, it->level};
}

Rational evaluate_T(const TransformStage& stage, const Rational& x) {
  auto pos = stage.locate(x);
  if (!pos) throw Error(Module::transform, "undefined", "T undefined at this stage: " + to_string(x) + " is outside the support");
  const Column& c = stage.gadget().columns[pos->column];
  if (pos->level + 1 >= c.height())
    throw Error(Module::transform, "undefined", "T undefined at this stage: " + to_string(x) + " is in a top level");
  return x + (c.lefts[pos->level + 1] - c.lefts[pos->level]);
}

Orbit orbit(const TransformStage& stage, const Rational& x, std::size_t n, const Partition& pi) {
  if (n == 0) throw Error(Module::transform, "bad_length", "orbit length must be at least 1");
  Orbit o;
  o.start = x;
  Rational cur = x;
  for (std::size_t i = 0; i < n; ++i) {
    o.points.push_back(cur);
    o.name.push_back(pi.symbol(cur));
    o.defined_up_to = i + 1;
    if (i + 1 == n) break;
    auto pos = stage.locate(cur);
    if (!pos) break;
    const Column& c = stage.gadget().columns[pos->column];
    if (pos->level + 1 >= c.height()) break;
    cur += c.lefts[pos->level + 1] - c.lefts[pos->level];
  }
  return o;
}

Rational ergodic_average(const TransformStage& stage, const Rational& x, std::size_t n, const Observable& f,
                         const Partition& pi) {
  Orbit o = orbit(stage, x, n, pi);
  if (o.defined_up_to < n)
    throw Error(Module::transform, "orbit_undefined",
                "orbit leaves the defined domain after " + std::to_string(o.defined_up_to) + " points");
  Rational sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += f(o.name[i]);
  return sum / static_cast<unsigned long>(n);
}

L1Norm average_l1_norm(const TransformStage& stage, const Observable& f, std::size_t n, const Partition& pi) {
  if (n == 0) throw Error(Module::transform, "bad_length", "average length must be at least 1");
  const Rational mean = f.mean(pi);
  L1Norm out{0, 0};
  for (const auto& c : stage.gadget().columns) {
    if (c.height() < n) continue;
    // Sliding window of symbol sums over levels j .. j+n-1.
    std::size_t ones = 0;
    for (std::size_t j = 0; j < n; ++j) ones += c.names[j] == '1';
    for (std::size_t j = 0;; ++j) {
      Rational avg = (f.f1 * static_cast<unsigned long>(ones) + f.f0 * static_cast<unsigned long>(n - ones)) /
                     static_cast<unsigned long>(n);
      out.integral += c.width * abs(avg - mean);
      out.defined_mass += c.width;
      if (j + n >= c.height()) break;
      ones += c.names[j + n] == '1';
      ones -= c.names[j] == '1';
    }
  }
  if (out.defined_mass == 0) throw Error(Module::transform, "no_defined_mass", "no defined mass: n exceeds every column height");
  return out;
}

Rational conservative_norm(const L1Norm& norm, const Observable& f, const Partition& pi) {
  const Rational mean = f.mean(pi);
  const Rational dev = std::max(abs(f.f0 - mean), abs(f.f1 - mean));
  return norm.integral + (1 - norm.defined_mass) * dev;
}

Rate convergence_rate(const TransformStage& stage, const Observable& f, const Rational& delta, const Rational& eps,
                      const Partition& pi) {
  if (delta <= 0 || eps <= 0) throw Error(Module::transform, "bad_tolerance", "delta and eps must be positive");
  std::size_t max_h = 0;
  for (const auto& c : stage.gadget().columns) max_h = std::max(max_h, c.height());
  const Rational target = delta * eps / 2;
  std::optional<std::pair<std::size_t, Rational>> best;
  for (std::size_t p = 1; p <= max_h; ++p) {
    Rational v = conservative_norm(average_l1_norm(stage, f, p, pi), f, pi);
    if (!best || v < best->second) best = {{p, v}};
    if (v <= target) {
      BigInt m = ceil_of(2 * Rational(static_cast<unsigned long>(p - 1)) * f.sup_abs() / delta);
      return {p, m, v};
    }
  }
  throw Error(Module::transform, "stage_too_shallow",
              "stage too shallow: best p = " + std::to_string(best ? best->first : 0) + " with norm " +
                  (best ? to_decimal(best->second, 6) : std::string("n/a")) + " > " + to_string(target));
}

bool audit_measure_preservation(const TransformStage& stage) {
  for (const auto& c : stage.gadget().columns) {
    for (std::size_t j = 0; j + 1 < c.height(); ++j) {
      const Rational mid = c.lefts[j] + c.width / 2;
      if (evaluate_T(stage, c.lefts[j]) != c.lefts[j + 1]) return false;
      if (evaluate_T(stage, mid) != c.lefts[j + 1] + c.width / 2) return false;
    }
  }
  return true;
}

void write_orbit_csv(std::ostream& os, const Orbit& o) {
  os << "step,point,symbol\n";
  for (std::size_t i = 0; i < o.points.size(); ++i) os << i << ',' << to_string(o.points[i]) << ',' << o.name[i] << '\n';
}

void write_norm_csv(std::ostream& os, const std::vector<std::pair<std::size_t, L1Norm>>& rows) {
  os << "n,norm,defined_mass\n";
  for (const auto& [n, v] : rows) os << n << ',' << to_string(v.integral) << ',' << to_string(v.defined_mass) << '\n';
}

}  // namespace cutstack
