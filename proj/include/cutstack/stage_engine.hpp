#pragma once

// Implicit gadgets for construction stages too large to store column by column.
// A node is an explicit gadget, one equal-width copy of another node, an ordered
// union of nodes, or an independent fold of a node. Columns are numbered in the
// same order the explicit operations produce them.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cutstack/exact.hpp"
#include "cutstack/gadget.hpp"

namespace cutstack {

struct LevelHit {
  std::uint64_t column;
  std::uint64_t level;
  Rational offset;  // relative position inside the level, in [0, 1)
};

class LazyGadget;
using LazyPtr = std::shared_ptr<const LazyGadget>;

class LazyGadget {
 public:
  virtual ~LazyGadget() = default;

  virtual std::uint64_t size() const = 0;
  virtual char name(std::uint64_t c, std::uint64_t j) const = 0;
  virtual Rational left(std::uint64_t c, std::uint64_t j) const = 0;
  virtual std::optional<LevelHit> locate(const Rational& x) const = 0;
  virtual std::vector<ShapeClass> shapes() const = 0;
  virtual Rational measure() const = 0;
  /// Ones among the names of levels j, j+1, ..., top of column c.
  virtual std::uint64_t ones_from(std::uint64_t c, std::uint64_t j) const = 0;

  std::uint64_t ones_total(std::uint64_t c) const { return tabulated_ ? ones_table_[c] : ones_from(c, 0); }
  Rational width(std::uint64_t c) const;
  std::uint64_t height(std::uint64_t c) const;
  const Rational& total_width() const { return total_width_; }
  Rational prob(std::uint64_t c) const;
  /// Sum of prob over columns before c.
  Rational prefix(std::uint64_t c) const;
  /// Column i with prefix(i) <= u < prefix(i) + prob(i), for u in [0, 1).
  std::uint64_t find_by_prefix(const Rational& u) const;

  Interval level(std::uint64_t c, std::uint64_t j) const {
    Rational l = left(c, j);
    return {l, l + width(c)};
  }

 protected:
  virtual Rational width_raw(std::uint64_t c) const = 0;
  virtual std::uint64_t height_raw(std::uint64_t c) const = 0;
  virtual Rational prefix_raw(std::uint64_t c) const;
  /// Call at the end of every constructor: sets the total width and caches
  /// per-column tables for nodes small enough to tabulate.
  void finish(Rational total_width);

 private:
  Rational total_width_;
  bool tabulated_ = false;
  std::vector<Rational> width_table_, prob_table_, prefix_table_;
  std::vector<std::uint64_t> height_table_, ones_table_;
};

LazyPtr lazy_explicit(Gadget g);
LazyPtr lazy_copy(LazyPtr child, unsigned t, unsigned copies);  // t is 1-based
LazyPtr lazy_union(std::vector<LazyPtr> parts);
LazyPtr lazy_fold(LazyPtr child, unsigned m);

/// Word of child columns behind a fold column, slot 1 first.
std::vector<std::uint64_t> fold_word(const LazyGadget& fold, std::uint64_t c);
/// Slot (0-based) and level inside the slot column for level j of a fold column.
struct FoldSlot {
  unsigned slot;
  std::uint64_t child_column;
  std::uint64_t child_level;
};
FoldSlot fold_slot(const LazyGadget& fold, std::uint64_t c, std::uint64_t j);
unsigned fold_count(const LazyGadget& fold);
const LazyGadget& fold_child(const LazyGadget& fold);

/// Materialise a node; only for small nodes.
Gadget materialize(const LazyGadget& g, std::uint32_t stage_id = 0);

/// Shape classes merged by (width, height).
std::vector<ShapeClass> merge_shapes(std::vector<ShapeClass> shapes);

}  // namespace cutstack
