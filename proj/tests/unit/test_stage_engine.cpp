#include <doctest.h>

#include <algorithm>
#include <map>

#include "cutstack/stage_engine.hpp"
#include "cutstack/transform.hpp"
#include "fixtures.hpp"

using namespace cutstack;

namespace {

void same_columns(const Gadget& a, const Gadget& b) {
  REQUIRE(a.columns.size() == b.columns.size());
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    REQUIRE(a.columns[c].width == b.columns[c].width);
    REQUIRE(a.columns[c].lefts == b.columns[c].lefts);
    REQUIRE(a.columns[c].names == b.columns[c].names);
  }
}

// Oracle for locate: the explicit transform stage, with the offset recomputed.
void locate_matches(const LazyGadget& lazy, const Gadget& g) {
  TransformStage st(g, 0);
  for (const auto& c : g.columns)
    for (std::size_t j = 0; j < c.height(); ++j)
      for (auto frac : {ratio(0, 1), ratio(1, 3), ratio(5, 7)}) {
        const Rational x = c.lefts[j] + frac * c.width;
        auto want = st.locate(x);
        auto got = lazy.locate(x);
        REQUIRE(want);
        REQUIRE(got);
        CHECK(got->column == want->column);
        CHECK(got->level == want->level);
        CHECK(got->offset == frac);
      }
}

std::vector<ShapeClass> explicit_shapes(const Gadget& g) {
  std::vector<ShapeClass> s;
  for (const auto& c : g.columns) s.push_back({c.width, c.height(), 1});
  return merge_shapes(s);
}

void same_shapes(const std::vector<ShapeClass>& a, const std::vector<ShapeClass>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].width == b[i].width);
    CHECK(a[i].height == b[i].height);
    CHECK(a[i].count == b[i].count);
  }
}

}  // namespace

TEST_CASE("lazy fold matches explicit cut-and-stack") {
  for (const auto& f : fixtures::suite()) {
    for (unsigned m : {1u, 2u, 3u}) {
      if (f.g.columns.size() > 3 && m == 3) continue;
      auto lazy = lazy_fold(lazy_explicit(f.g), m);
      Gadget want = independent_cut_stack(f.g, m);
      same_columns(materialize(*lazy), want);
      locate_matches(*lazy, want);
      same_shapes(lazy->shapes(), explicit_shapes(want));
      Rational acc = 0;
      for (std::uint64_t c = 0; c < lazy->size(); ++c) {
        REQUIRE(lazy->prefix(c) == acc);
        acc += lazy->prob(c);
      }
      CHECK(acc == 1);
      CHECK(lazy->measure() == f.g.measure());
      for (std::uint64_t c = 0; c < lazy->size(); ++c)
        for (std::uint64_t j = 0; j < lazy->height(c); ++j) {
          const auto& n = want.columns[c].names;
          REQUIRE(lazy->ones_from(c, j) == static_cast<std::uint64_t>(std::count(n.begin() + static_cast<long>(j), n.end(), '1')));
        }
    }
  }
}

TEST_CASE("nested copies, unions and folds") {
  Gadget a = fixtures::layout({{ratio(1, 8), 3}, {ratio(1, 16), 2}}, 0);
  Gadget b = fixtures::layout({{ratio(1, 8), 2}}, ratio(1, 2), {"11"});
  // explicit: fold a, cut b into halves, union fold(a) with the second half, fold again
  Gadget fa = independent_cut_stack(a, 2);
  auto halves = cut_copies(b, {ratio(1, 2), ratio(1, 2)});
  Gadget lam = gadget_union({&fa, &halves[1]}, 0);
  Gadget want = independent_cut_stack(lam, 2);

  auto la = lazy_fold(lazy_explicit(a), 2);
  auto lb = lazy_copy(lazy_explicit(b), 2, 2);
  auto llam = lazy_union({la, lb});
  same_columns(materialize(*llam), lam);
  auto lazy = lazy_fold(llam, 2);
  same_columns(materialize(*lazy), want);
  locate_matches(*lazy, want);
  same_shapes(lazy->shapes(), explicit_shapes(want));

  // word structure: level j sits in the slot whose heights cover it
  for (std::uint64_t c = 0; c < lazy->size(); ++c) {
    auto w = fold_word(*lazy, c);
    std::uint64_t j = 0;
    for (unsigned t = 0; t < 2; ++t)
      for (std::uint64_t k = 0; k < llam->height(w[t]); ++k, ++j) {
        auto s = fold_slot(*lazy, c, j);
        CHECK(s.slot == t);
        CHECK(s.child_column == w[t]);
        CHECK(s.child_level == k);
      }
  }
  // points outside every level
  CHECK_FALSE(lazy->locate(ratio(15, 16)));
  CHECK_FALSE(lb->locate(ratio(1, 2)));
  CHECK(lb->locate(ratio(1, 2) + ratio(1, 16)));
}
