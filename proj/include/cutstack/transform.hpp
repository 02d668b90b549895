#pragma once

// The partial map T defined by a gadget: each non-top level translates onto the
// level above it.

#include <optional>
#include <ostream>
#include <vector>

#include "cutstack/gadget.hpp"

namespace cutstack {

class TransformStage {
 public:
  TransformStage(Gadget g, std::uint32_t stage_index);

  const Gadget& gadget() const { return gadget_; }
  std::uint32_t stage_index() const { return stage_index_; }

  struct Position {
    std::size_t column;
    std::size_t level;
  };
  /// Column and level containing x, if x lies in the support.
  std::optional<Position> locate(const Rational& x) const;

 private:
  Gadget gadget_;
  std::uint32_t stage_index_;
  struct Entry {
    Rational lo;
    std::size_t column;
    std::size_t level;
  };
  std::vector<Entry> index_;  // sorted by lo
};

/// T(x). Throws Error(transform, "undefined") on top levels and outside the support.
Rational evaluate_T(const TransformStage& stage, const Rational& x);

struct Orbit {
  Rational start;
  std::vector<Rational> points;
  BitString name;
  std::size_t defined_up_to = 0;
};

Orbit orbit(const TransformStage& stage, const Rational& x, std::size_t n, const Partition& pi);

/// Step observable: value f0 on pi0 and f1 on pi1.
struct Observable {
  Rational f0;
  Rational f1;

  Rational operator()(int symbol) const { return symbol ? f1 : f0; }
  Rational mean(const Partition& pi) const { return f0 * pi.pi0.measure() + f1 * pi.pi1.measure(); }
  Rational sup_abs() const { return std::max(abs(f0), abs(f1)); }
};

Rational ergodic_average(const TransformStage& stage, const Rational& x, std::size_t n, const Observable& f,
                         const Partition& pi);

struct L1Norm {
  Rational integral;      // over points whose n-step orbit stays in its column
  Rational defined_mass;  // measure of those points
};

/// Exact integral of |A_n f - mean(f)| restricted to the defined set; A_n f is
/// read off the column names, which must be compatible with pi.
L1Norm average_l1_norm(const TransformStage& stage, const Observable& f, std::size_t n, const Partition& pi);

/// Upper bound on the full L1 norm: undefined mass is charged sup|f - mean|.
Rational conservative_norm(const L1Norm& norm, const Observable& f, const Partition& pi);

struct Rate {
  std::size_t p;
  BigInt m;
  Rational norm;
};

/// Smallest p whose conservative norm is at most delta*eps/2, and
/// m = ceil(2 (p - 1) sup|f| / delta).
Rate convergence_rate(const TransformStage& stage, const Observable& f, const Rational& delta, const Rational& eps,
                      const Partition& pi);

/// Every non-top level maps onto its successor with equal measure (checked at both
/// endpoints of the level through evaluate_T).
bool audit_measure_preservation(const TransformStage& stage);

void write_orbit_csv(std::ostream& os, const Orbit& o);
void write_norm_csv(std::ostream& os, const std::vector<std::pair<std::size_t, L1Norm>>& rows);

}  // namespace cutstack
