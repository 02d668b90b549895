#include "doctest.h"

#include <map>

#include "cutstack/error.hpp"
#include "cutstack/gadget.hpp"
#include "fixtures.hpp"

using namespace cutstack;
using fixtures::layout;
using fixtures::q;

TEST_CASE("distribution") {
  CHECK(distribution(layout({{q(1, 4), 1}, {q(1, 4), 1}})) == std::vector<Rational>{q(1, 2), q(1, 2)});
  CHECK(distribution(layout({{q(1, 2), 1}})) == std::vector<Rational>{1});
  CHECK(distribution(layout({{q(1, 2), 1}, {q(1, 4), 1}})) == std::vector<Rational>{q(2, 3), q(1, 3)});
  CHECK_THROWS_AS(distribution(Gadget{}), Error);
}

TEST_CASE("cut_copies splits levels left to right") {
  auto g = layout({{q(1, 4), 2}});
  auto copies = cut_copies(g, {q(1, 2), q(1, 2)});
  REQUIRE(copies.size() == 2);
  CHECK(copies[0].columns[0].level(0) == Interval{0, q(1, 8)});
  CHECK(copies[0].columns[0].level(1) == Interval{q(1, 4), q(3, 8)});
  CHECK(copies[1].columns[0].level(0) == Interval{q(1, 8), q(1, 4)});
  CHECK(copies[1].columns[0].level(1) == Interval{q(3, 8), q(1, 2)});
  CHECK(copies[0].columns[0].names == g.columns[0].names);

  auto one = cut_copies(g, {1});
  CHECK(one[0].columns[0].lefts == g.columns[0].lefts);
  CHECK(one[0].columns[0].width == g.columns[0].width);
  CHECK_THROWS_AS(cut_copies(g, {q(1, 2), q(1, 3)}), Error);

  for (const auto& [name, fx] : fixtures::suite()) {
    auto cs = cut_copies(fx, {q(1, 3), q(1, 6), q(1, 2)});
    Rational total = 0;
    for (const auto& c : cs) {
      CHECK(distribution(c) == distribution(fx));
      total += c.measure();
    }
    CHECK(total == fx.measure());
  }
}

TEST_CASE("stack_columns") {
  auto g = layout({{q(1, 8), 2}, {q(1, 8), 3}});
  auto c = stack_columns(g.columns[0], g.columns[1]);
  CHECK(c.height() == 5);
  CHECK(c.names == "01010");
  CHECK_THROWS_AS(stack_columns(g.columns[0], g.columns[0]), Error);
  auto h = layout({{q(1, 8), 1}, {q(1, 4), 1}});
  CHECK_THROWS_AS(stack_columns(h.columns[0], h.columns[1]), Error);
}

TEST_CASE("stack_gadget_on_gadget multiplies column counts") {
  auto u = layout({{q(1, 8), 1}, {q(1, 8), 2}});
  auto l = layout({{q(1, 12), 1}, {q(1, 12), 1}, {q(1, 12), 2}}, q(1, 2));
  auto g = stack_gadget_on_gadget(u, l);
  CHECK(g.columns.size() == 6);
  CHECK(g.measure() == u.measure() + l.measure());
  CHECK(audit_gadget(g).ok);

  auto a = layout({{q(1, 4), 2}});
  auto b = layout({{q(1, 4), 3}}, q(1, 2));
  auto ab = stack_gadget_on_gadget(a, b);
  REQUIRE(ab.columns.size() == 1);
  CHECK(ab.columns[0].height() == 5);
  CHECK_THROWS_AS(stack_gadget_on_gadget(a, layout({{q(1, 8), 1}}, q(1, 2))), Error);
}

TEST_CASE("independent_cut_stack") {
  for (const auto& [name, fx] : fixtures::suite()) {
    CAPTURE(name);
    auto one = independent_cut_stack(fx, 1);
    CHECK(one.columns.size() == fx.columns.size());
    CHECK(one.measure() == fx.measure());
    auto three = independent_cut_stack(fx, 3);
    std::size_t n = fx.columns.size();
    CHECK(three.columns.size() == n * n * n);
    CHECK(three.width() == fx.width() / 3);
    CHECK(three.measure() == fx.measure());
    CHECK(three.stage_id == fx.stage_id + 1);
    CHECK(audit_gadget(three).ok);
    for (const auto& c : three.columns) {
      std::size_t h = 0;
      for (auto d : c.lineage) h += fx.columns[d].height();
      CHECK(h == c.height());
    }
  }
  CHECK_THROWS_AS(independent_cut_stack(fixtures::suite()[0].g, 0), Error);
}

TEST_CASE("well_distribution direct formula") {
  // One column stacked from both equal-width columns: each used in proportion.
  auto lam = layout({{q(1, 2), 1}, {q(1, 2), 1}});
  Gadget up;
  up.stage_id = 1;
  auto col = stack_columns(lam.columns[0], lam.columns[1]);
  col.lineage = {0, 1};
  up.columns.push_back(col);
  CHECK(well_distribution(lam, up).value == 0);

  // lam: D of measure 1/2; E1 holds all of D, E2 none of it.
  auto lam2 = layout({{q(1, 2), 1}});
  Gadget up2;
  up2.stage_id = 1;
  auto e1 = lam2.columns[0];
  e1.lineage = {0};
  Column e2;
  e2.width = q(1, 2);
  e2.lefts = {q(1, 2)};
  e2.names = "0";
  up2.columns = {e1, e2};
  CHECK(well_distribution(lam2, up2).value == q(1, 2));

  Gadget same = lam;
  CHECK_THROWS_AS(well_distribution(lam, same), Error);
}

TEST_CASE("fold metric agrees with the explicit lineage route") {
  for (const auto& [name, fx] : fixtures::suite()) {
    CAPTURE(name);
    for (unsigned m : {1u, 2u, 3u}) {
      if (std::pow(fx.columns.size(), m) > 500) continue;
      auto up = independent_cut_stack(fx, m);
      CHECK(well_distribution(fx, up).value == well_distribution_fold(fx, m));
    }
  }
  // m = 2 shortcut on more than eight columns.
  std::vector<std::pair<Rational, unsigned>> shapes;
  for (unsigned i = 0; i < 10; ++i) shapes.push_back({q(1, 60), 1 + (i * 7) % 5});
  auto wide = layout(shapes);
  auto up = independent_cut_stack(wide, 2);
  CHECK(well_distribution(wide, up).value == well_distribution_fold(wide, 2));
}

TEST_CASE("multi-stage flattening through a registry") {
  auto g0 = layout({{q(1, 4), 1}, {q(1, 4), 3}});
  auto g1 = independent_cut_stack(g0, 2);
  auto g2 = independent_cut_stack(g1, 2);
  CHECK_THROWS_AS(well_distribution(g0, g2), Error);
  GadgetRegistry reg;
  reg.add(g1);
  auto wd = well_distribution(g0, g2, &reg);
  CHECK(wd.multi_stage);
  CHECK(wd.value >= 0);
}

TEST_CASE("well-distribution decreases along doubling folds") {
  for (const auto& [name, fx] : fixtures::suite()) {
    CAPTURE(name);
    Rational prev = well_distribution_fold(fx, 1);
    for (unsigned m : {2u, 4u, 8u}) {
      if (fx.columns.size() > 4 && m > 4) continue;
      Rational v = well_distribution_fold(fx, m);
      CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("doubling fold search reaches 1/4 on every fixture") {
  for (const auto& [name, fx] : fixtures::suite()) {
    CAPTURE(name);
    auto res = find_well_distributing_fold(fx, q(1, 4), 1u << 10);
    CHECK(res.metric < q(1, 4));
    CHECK(res.m >= 1);
  }
  CHECK_THROWS_AS(find_well_distributing_fold(fixtures::suite()[4].g, q(1, 4), 4), Error);
}

TEST_CASE("m = 2 metric from shape classes matches the column route") {
  for (const auto& f : fixtures::suite()) {
    // duplicate every column three times, then group by shape
    std::vector<ColumnShape> cols;
    std::map<std::pair<std::string, std::uint64_t>, ShapeClass> grouped;
    for (int rep = 0; rep < 3; ++rep)
      for (const auto& c : f.g.columns) {
        cols.push_back({c.width / 3, c.height()});
        auto key = std::make_pair(to_string(c.width / 3), static_cast<std::uint64_t>(c.height()));
        auto [it, fresh] = grouped.try_emplace(key, ShapeClass{c.width / 3, c.height(), 0});
        ++it->second.count;
      }
    std::vector<ShapeClass> classes;
    for (auto& [k, v] : grouped) classes.push_back(v);
    CHECK(well_distribution_fold_two(classes) == well_distribution_fold(cols, 2));
    if (f.g.columns.size() <= 4) {
      std::vector<ColumnShape> once;
      for (const auto& c : f.g.columns) once.push_back({c.width, c.height()});
      std::vector<ShapeClass> single;
      for (const auto& c : once) single.push_back({c.width, c.height, 1});
      CHECK(well_distribution_fold_two(single) == well_distribution_fold(once, 2));
    }
  }
}
