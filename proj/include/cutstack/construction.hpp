#pragma once

// Stage builder for the unstable sequence: gadgets Delta_s (shrinking, half ones)
// and Pi_s (growing, mostly zeros), and the step-by-step builder of omega.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cutstack/exact.hpp"
#include "cutstack/gadget.hpp"
#include "cutstack/martingale.hpp"
#include "cutstack/stage_engine.hpp"

namespace cutstack {

/// Named degree-of-stability preset: "log2", "sqrt", "linear:p/q" or "table:v1,v2,...".
struct SigmaFn {
  std::string spec;
  std::function<std::uint64_t(std::uint64_t)> fn;
  std::uint64_t operator()(std::uint64_t n) const { return fn(n); }
};
SigmaFn parse_sigma(const std::string& spec);

struct HeightSchedule {
  Rational r;
  std::vector<std::uint64_t> h;  // h[0] = h_{-2}, h[1] = h_{-1}, h[2] = h_0, ...
  bool toy = false;
  std::string sigma_spec;

  std::uint64_t at(long i) const;  // h_i for i >= -2
  std::size_t count() const { return h.size(); }
};

/// Pointwise-minimal schedule with sigma(h_{i-1}) - sigma(h_{i-2}) > i - log2 r + 11, h_{-2} = 1.
HeightSchedule compute_schedule(const SigmaFn& sigma, const Rational& r, std::size_t count,
                                std::uint64_t horizon = std::uint64_t{1} << 62);
/// Explicit list, no inequality; tagged toy.
HeightSchedule toy_schedule(const Rational& r, std::vector<std::uint64_t> h);
nlohmann::json schedule_json(const HeightSchedule& s);

struct ConstructionConfig {
  Rational r = ratio(1, 8);
  HeightSchedule schedule;
  SigmaFn sigma;
  unsigned fold_cap = 2;      // largest R_s tried
  unsigned stage_cap = 5;     // largest stage the builder may advance to
  std::uint64_t piece_cap = 4000000;
  bool toy = true;
};

ConstructionConfig default_toy_config(const Rational& r = ratio(1, 8));

struct StageRecord {
  unsigned s = 0;
  unsigned fold = 0;
  Rational width;
  Rational width_bound;
  bool width_ok = true;
  Rational metric;
  Rational metric_target;
  bool metric_met = true;
  std::vector<std::pair<unsigned, Rational>> search;  // (R, metric) tried
  Rational gamma;          // lambda(Delta'') / lambda(Pi_{s-1}) from the measures
  Rational gamma_formula;  // 2^{-s+1} r / (1 - 2^{-s+2} r)
  std::optional<Rational> gamma_printed;  // 2^{-s+1} r / (1 - 2^{-s+2}) as printed; undefined for s <= 2
  Rational measure_pi;
  Rational measure_delta;
  std::uint64_t pi_columns = 0;
  std::uint64_t delta_columns = 0;
};

struct Stage {
  LazyPtr pi;
  LazyPtr delta;
  LazyPtr lambda;  // Pi_{s-1} u Delta'' (absent at s = 0)
  std::uint64_t lambda_pi_columns = 0;  // the first columns of lambda come from Pi_{s-1}
  StageRecord record;
};

class Construction {
 public:
  explicit Construction(ConstructionConfig config);

  /// Stage s, advancing as needed; throws past the stage cap.
  const Stage& stage(unsigned s);
  unsigned built() const { return static_cast<unsigned>(stages_.size()) - 1; }
  const ConstructionConfig& config() const { return config_; }
  const Partition& partition() const { return pi_; }

 private:
  void init_stage0();
  void advance_stage();

  ConstructionConfig config_;
  Partition pi_;
  std::vector<Stage> stages_;
};

/// Fold metric of lambda for m copies (m = 2 from shape classes; small gadgets otherwise).
Rational fold_metric(const LazyGadget& lambda, unsigned m);

struct StageAudit {
  unsigned s = 0;
  bool ledger_ok = false;      // measures match 2^{-s+1} r and 1 - 2^{-s+1} r
  bool exhaustive = false;     // every level checked, else sampled windows
  bool maps_ok = false;        // each non-top level maps to its successor
  bool tiles_ok = false;       // levels of Pi_s and Delta_s tile the checked region
  bool names_ok = false;       // names agree with the partition
  std::uint64_t levels_checked = 0;
  std::string detail;
};
StageAudit audit_stage(Construction& c, unsigned s, std::uint64_t exhaustive_level_limit);

struct Checkpoint {
  unsigned k = 0;
  bool odd = true;
  unsigned s = 0;
  std::uint64_t length = 0;
  std::uint64_t ones = 0;
  bool ok = false;  // odd: ones <= 2r length; even: 8 ones >= length
};

struct StepRecord {
  unsigned k = 0;
  bool odd = true;
  unsigned s = 0;
  BitString omega;
  std::size_t candidates = 0;
  std::uint64_t pieces = 0;
  bool truncated = false;
  Rational low_freq_mass;   // odd steps: relative to 2^-l(a)
  Rational candidate_mass;  // B(C~) relative to 2^-l(a)
  Rational required_mass;
  bool mass_ok = false;
  Rational bound;           // 2 M(a) / B(C~)
  Rational max_value;       // max_j M(b^j) over the new bits
  bool penalty_ok = false;  // exact form of d(b^j) <= d(a) + 5 (odd) or d(b) + 1 - log(gamma/32) (even)
  bool length_hypothesis = false;   // l(a) >= h_{s(k-1)}
  bool deficiency_hypothesis = false;  // M(a) <= 2^{sigma(h_{s(k-2)}) - 5} (odd) or 2^{sigma(h_{s(k-2)})} (even)
  Checkpoint checkpoint;
  std::string note;
};

struct BuildResult {
  bool toy = true;
  BitString omega;
  DeficiencyTrace trace;
  std::vector<StepRecord> steps;
  std::vector<StageRecord> stages;
  Rational x_star;
  BitString name;  // trajectory name of x_star at the last built stage
  std::vector<Checkpoint> checkpoints;
  bool checkpoints_ok = false;  // recomputed from x_star's name
  bool budget_ok = false;
};

BuildResult build_unstable(Construction& c, unsigned k_max);

/// One JSON object per stage and per step, then a summary line.
void write_construction_jsonl(std::ostream& os, const BuildResult& r, const ConstructionConfig& config);

}  // namespace cutstack
