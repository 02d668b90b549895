#pragma once

// Small gadgets shared by the unit and acceptance suites.

#include <string>
#include <utility>
#include <vector>

#include "cutstack/gadget.hpp"

namespace fixtures {

using cutstack::Column;
using cutstack::Gadget;
using cutstack::Rational;

// Lays columns out left to right from `start`: each (width, height) pair becomes
// `height` consecutive levels. Names alternate 0,1,0,... unless given.
inline Gadget layout(const std::vector<std::pair<Rational, unsigned>>& shapes, Rational start = 0,
                     const std::vector<std::string>& names = {}) {
  Gadget g;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Column c;
    c.width = shapes[i].first;
    for (unsigned j = 0; j < shapes[i].second; ++j) {
      c.lefts.push_back(start);
      start += c.width;
      c.names.push_back(j % 2 ? '1' : '0');
    }
    if (i < names.size()) c.names = names[i];
    g.columns.push_back(std::move(c));
  }
  return g;
}

inline Rational q(long p, long d) { return cutstack::ratio(p, d); }

struct Named {
  std::string name;
  Gadget g;
};

// Ten-plus gadgets; all but "partial" cover [0,1) exactly.
inline std::vector<Named> suite() {
  return {
      {"halves", layout({{q(1, 2), 2}})},
      {"two_equal", layout({{q(1, 4), 2}, {q(1, 4), 2}})},
      {"half_quarter", layout({{q(1, 2), 1}, {q(1, 4), 2}})},
      {"sixths_123", layout({{q(1, 6), 1}, {q(1, 6), 2}, {q(1, 6), 3}})},
      {"quarters", layout({{q(1, 4), 1}, {q(1, 4), 1}, {q(1, 4), 1}, {q(1, 4), 1}})},
      {"tall", layout({{q(1, 4), 4}})},
      {"third_sixth", layout({{q(1, 3), 2}, {q(1, 6), 2}})},
      {"partial", layout({{q(1, 8), 2}})},
      {"mixed_names", layout({{q(1, 8), 4}, {q(1, 8), 4}}, 0, {"0011", "0101"})},
      {"dyadic_three", layout({{q(1, 2), 1}, {q(1, 4), 1}, {q(1, 8), 2}})},
      {"fifths", layout({{q(1, 5), 2}, {q(1, 5), 3}})},
  };
}

}  // namespace fixtures
