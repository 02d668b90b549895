#pragma once

// Explicit columns and gadgets with exact endpoints, plus the cutting and
// stacking calculus on them.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cutstack/exact.hpp"

namespace cutstack {

/// A stack of equal-width level intervals. Level j is [lefts[j], lefts[j] + width).
/// Names hold one '0'/'1' symbol per level; lineage is a word over the columns of
/// the parent-stage gadget (indices into it).
struct Column {
  Rational width;
  std::vector<Rational> lefts;
  std::string names;
  std::vector<std::uint32_t> lineage;

  std::size_t height() const { return lefts.size(); }
  Interval level(std::size_t j) const { return {lefts[j], lefts[j] + width}; }
  Rational measure() const { return width * static_cast<unsigned long>(lefts.size()); }
  std::size_t ones() const;
};

struct Gadget {
  std::vector<Column> columns;
  std::uint32_t stage_id = 0;

  Rational width() const;
  Rational measure() const;
  std::size_t level_count() const;
};

/// Union of half-open intervals.
struct IntervalSet {
  std::vector<Interval> parts;

  bool contains(const Rational& x) const;
  Rational measure() const;
};

struct Partition {
  IntervalSet pi0;
  IntervalSet pi1;

  int symbol(const Rational& x) const;
  /// Symbol of a whole interval; throws if it straddles pi0 and pi1.
  int symbol(const Interval& level) const;
};

/// pi1 = [1/2, 1/2 + r), pi0 the rest of [0,1).
Partition standard_partition(const Rational& r);

std::vector<Rational> distribution(const Gadget& g);

std::vector<Gadget> cut_copies(const Gadget& g, const std::vector<Rational>& weights);

Column stack_columns(const Column& lower, const Column& upper);

/// Upsilon * Lambda: each column E_i of `u` receives a copy of `l` of width w(E_i) on top.
Gadget stack_gadget_on_gadget(const Gadget& u, const Gadget& l);

/// g cut into m equal copies, stacked Y1*(Y2*(...*Ym)). Lineage words index g's columns.
Gadget independent_cut_stack(const Gadget& g, unsigned m);

/// Concatenate the column lists of gadgets with disjoint supports (used for Pi u Delta'').
Gadget gadget_union(const std::vector<const Gadget*>& parts, std::uint32_t stage_id);

/// Gadgets by stage id, used to flatten lineage across several stages.
class GadgetRegistry {
 public:
  void add(const Gadget& g) { stages_[g.stage_id] = &g; }
  const Gadget* find(std::uint32_t stage) const;

 private:
  std::map<std::uint32_t, const Gadget*> stages_;
};

struct WellDistribution {
  Rational value;
  bool multi_stage = false;
};

/// Sum over D in lam, E in up of |count_D(E) h(D) w(E) - lambda(E) lambda(D)|.
/// up's lineage must reach lam's stage, directly or through `registry`.
WellDistribution well_distribution(const Gadget& lam, const Gadget& up, const GadgetRegistry* registry = nullptr);

/// The same metric for independent_cut_stack(lam, m) without materializing it:
/// columns are grouped by their letter counts.
Rational well_distribution_fold(const Gadget& lam, unsigned m);

/// Column summary enough for the fold metric: width and height per column.
struct ColumnShape {
  Rational width;
  std::uint64_t height;
};
Rational well_distribution_fold(const std::vector<ColumnShape>& lam, unsigned m);

/// Columns grouped by shape; `count` columns share width and height.
struct ShapeClass {
  Rational width;
  std::uint64_t height;
  std::uint64_t count;
};
/// The m = 2 fold metric from shape classes alone.
Rational well_distribution_fold_two(const std::vector<ShapeClass>& lam);

struct FoldSearch {
  unsigned m = 0;
  Rational metric;
  std::vector<std::pair<unsigned, Rational>> history;
};

/// Doubling search for m with well_distribution_fold(g, m) < eps.
FoldSearch find_well_distributing_fold(const Gadget& g, const Rational& eps, unsigned max_m);

struct AuditReport {
  bool ok = true;
  std::string problem;
};

/// Equal widths, disjoint levels across the whole gadget, names length.
AuditReport audit_gadget(const Gadget& g);

nlohmann::json gadget_to_json(const Gadget& g);

}  // namespace cutstack
