#include "cutstack/stage_engine.hpp"

#include <algorithm>
#include <map>

#include "cutstack/error.hpp"

namespace cutstack {

namespace {

[[noreturn]] void fail(std::string code, const std::string& msg) { throw Error(Module::construction, std::move(code), msg); }

constexpr std::uint64_t kTableLimit = std::uint64_t{1} << 20;

}  // namespace

void LazyGadget::finish(Rational total_width) {
  total_width_ = std::move(total_width);
  const std::uint64_t n = size();
  if (n > kTableLimit) return;
  width_table_.reserve(n);
  prob_table_.reserve(n);
  prefix_table_.reserve(n + 1);
  height_table_.reserve(n);
  ones_table_.reserve(n);
  Rational acc = 0;
  for (std::uint64_t c = 0; c < n; ++c) {
    width_table_.push_back(width_raw(c));
    prob_table_.push_back(width_table_.back() / total_width_);
    height_table_.push_back(height_raw(c));
    ones_table_.push_back(ones_from(c, 0));
    prefix_table_.push_back(acc);
    acc += prob_table_.back();
  }
  prefix_table_.push_back(acc);
  if (acc != 1) fail("bad_distribution", "column probabilities sum to " + to_string(acc));
  tabulated_ = true;
}

Rational LazyGadget::width(std::uint64_t c) const { return tabulated_ ? width_table_[c] : width_raw(c); }
std::uint64_t LazyGadget::height(std::uint64_t c) const { return tabulated_ ? height_table_[c] : height_raw(c); }
Rational LazyGadget::prob(std::uint64_t c) const { return tabulated_ ? prob_table_[c] : width_raw(c) / total_width_; }
Rational LazyGadget::prefix(std::uint64_t c) const { return tabulated_ ? prefix_table_[c] : prefix_raw(c); }

Rational LazyGadget::prefix_raw(std::uint64_t c) const {
  Rational acc = 0;
  for (std::uint64_t i = 0; i < c; ++i) acc += prob(i);
  return acc;
}

std::uint64_t LazyGadget::find_by_prefix(const Rational& u) const {
  if (u < 0 || u >= 1) fail("bad_offset", "relative offset " + to_string(u) + " outside [0,1)");
  if (tabulated_) {
    auto it = std::upper_bound(prefix_table_.begin(), prefix_table_.end() - 1, u);
    return static_cast<std::uint64_t>(it - prefix_table_.begin()) - 1;
  }
  std::uint64_t lo = 0, hi = size();  // prefix(lo) <= u < prefix(hi)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (prefix(mid) <= u)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

namespace {

class ExplicitNode final : public LazyGadget {
 public:
  explicit ExplicitNode(Gadget g) : g_(std::move(g)) {
    if (g_.columns.empty()) fail("empty_gadget", "empty gadget");
    Rational w = 0;
    for (std::size_t c = 0; c < g_.columns.size(); ++c) {
      w += g_.columns[c].width;
      for (std::size_t j = 0; j < g_.columns[c].height(); ++j) index_.push_back({g_.columns[c].lefts[j], c, j});
    }
    std::sort(index_.begin(), index_.end(), [](const Entry& a, const Entry& b) { return a.lo < b.lo; });
    finish(w);
  }

  std::uint64_t size() const override { return g_.columns.size(); }
  char name(std::uint64_t c, std::uint64_t j) const override { return g_.columns[c].names[j]; }
  Rational left(std::uint64_t c, std::uint64_t j) const override { return g_.columns[c].lefts[j]; }
  Rational measure() const override { return g_.measure(); }
  std::uint64_t ones_from(std::uint64_t c, std::uint64_t j) const override {
    const auto& n = g_.columns[c].names;
    return static_cast<std::uint64_t>(std::count(n.begin() + static_cast<long>(j), n.end(), '1'));
  }

  std::optional<LevelHit> locate(const Rational& x) const override {
    auto it = std::upper_bound(index_.begin(), index_.end(), x, [](const Rational& v, const Entry& e) { return v < e.lo; });
    if (it == index_.begin()) return std::nullopt;
    --it;
    const Rational& w = g_.columns[it->column].width;
    if (x >= it->lo + w) return std::nullopt;
    return LevelHit{it->column, it->level, (x - it->lo) / w};
  }

  std::vector<ShapeClass> shapes() const override {
    std::vector<ShapeClass> out;
    for (const auto& c : g_.columns) out.push_back({c.width, c.height(), 1});
    return merge_shapes(std::move(out));
  }

 protected:
  Rational width_raw(std::uint64_t c) const override { return g_.columns[c].width; }
  std::uint64_t height_raw(std::uint64_t c) const override { return g_.columns[c].height(); }

 private:
  struct Entry {
    Rational lo;
    std::size_t column;
    std::size_t level;
  };
  Gadget g_;
  std::vector<Entry> index_;
};

class CopyNode final : public LazyGadget {
 public:
  CopyNode(LazyPtr child, unsigned t, unsigned copies) : child_(std::move(child)), t_(t), r_(copies) {
    if (copies == 0 || t == 0 || t > copies) fail("bad_copy", "copy index out of range");
    finish(child_->total_width() / r_);
  }

  std::uint64_t size() const override { return child_->size(); }
  char name(std::uint64_t c, std::uint64_t j) const override { return child_->name(c, j); }
  Rational left(std::uint64_t c, std::uint64_t j) const override {
    return child_->left(c, j) + ratio(t_ - 1, r_) * child_->width(c);
  }
  Rational measure() const override { return child_->measure() / r_; }
  std::uint64_t ones_from(std::uint64_t c, std::uint64_t j) const override { return child_->ones_from(c, j); }

  std::optional<LevelHit> locate(const Rational& x) const override {
    auto hit = child_->locate(x);
    if (!hit) return std::nullopt;
    Rational scaled = hit->offset * r_;
    const BigInt k = floor_of(scaled);
    if (k != static_cast<long>(t_ - 1)) return std::nullopt;
    hit->offset = scaled - static_cast<long>(t_ - 1);
    return hit;
  }

  std::vector<ShapeClass> shapes() const override {
    auto s = child_->shapes();
    for (auto& c : s) c.width /= r_;
    return s;
  }

 protected:
  Rational width_raw(std::uint64_t c) const override { return child_->width(c) / r_; }
  std::uint64_t height_raw(std::uint64_t c) const override { return child_->height(c); }
  Rational prefix_raw(std::uint64_t c) const override { return child_->prefix(c); }

 private:
  LazyPtr child_;
  unsigned t_, r_;
};

class UnionNode final : public LazyGadget {
 public:
  explicit UnionNode(std::vector<LazyPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) fail("empty_gadget", "union of no gadgets");
    Rational w = 0;
    std::uint64_t n = 0;
    for (const auto& p : parts_) {
      starts_.push_back(n);
      width_before_.push_back(w);
      n += p->size();
      w += p->total_width();
    }
    size_ = n;
    finish(w);
  }

  std::uint64_t size() const override { return size_; }
  char name(std::uint64_t c, std::uint64_t j) const override {
    auto [p, local] = part_of(c);
    return parts_[p]->name(local, j);
  }
  Rational left(std::uint64_t c, std::uint64_t j) const override {
    auto [p, local] = part_of(c);
    return parts_[p]->left(local, j);
  }
  std::uint64_t ones_from(std::uint64_t c, std::uint64_t j) const override {
    auto [p, local] = part_of(c);
    return parts_[p]->ones_from(local, j);
  }
  Rational measure() const override {
    Rational m = 0;
    for (const auto& p : parts_) m += p->measure();
    return m;
  }

  std::optional<LevelHit> locate(const Rational& x) const override {
    for (std::size_t p = 0; p < parts_.size(); ++p)
      if (auto hit = parts_[p]->locate(x)) {
        hit->column += starts_[p];
        return hit;
      }
    return std::nullopt;
  }

  std::vector<ShapeClass> shapes() const override {
    std::vector<ShapeClass> all;
    for (const auto& p : parts_) {
      auto s = p->shapes();
      all.insert(all.end(), s.begin(), s.end());
    }
    return merge_shapes(std::move(all));
  }

 protected:
  Rational width_raw(std::uint64_t c) const override {
    auto [p, local] = part_of(c);
    return parts_[p]->width(local);
  }
  std::uint64_t height_raw(std::uint64_t c) const override {
    auto [p, local] = part_of(c);
    return parts_[p]->height(local);
  }
  Rational prefix_raw(std::uint64_t c) const override {
    auto [p, local] = part_of(c);
    return (width_before_[p] + parts_[p]->total_width() * parts_[p]->prefix(local)) / total_width();
  }

 private:
  std::pair<std::size_t, std::uint64_t> part_of(std::uint64_t c) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), c);
    const std::size_t p = static_cast<std::size_t>(it - starts_.begin()) - 1;
    return {p, c - starts_[p]};
  }

  std::vector<LazyPtr> parts_;
  std::vector<std::uint64_t> starts_;
  std::vector<Rational> width_before_;
  std::uint64_t size_ = 0;
};

class FoldNode final : public LazyGadget {
 public:
  FoldNode(LazyPtr child, unsigned m) : child_(std::move(child)), m_(m) {
    if (m == 0) fail("bad_fold", "fold count must be positive");
    const std::uint64_t k = child_->size();
    std::uint64_t n = 1;
    for (unsigned i = 0; i < m; ++i) {
      if (n > (std::uint64_t{1} << 62) / k) fail("too_many_columns", "fold has more than 2^62 columns");
      n *= k;
    }
    size_ = n;
    finish(child_->total_width() / m_);
  }

  std::uint64_t size() const override { return size_; }
  Rational measure() const override { return child_->measure(); }
  std::uint64_t ones_from(std::uint64_t c, std::uint64_t j) const override {
    auto w = word(c);
    auto s = slot(c, j);
    std::uint64_t n = child_->ones_from(s.child_column, s.child_level);
    for (unsigned k = s.slot + 1; k < m_; ++k) n += child_->ones_total(w[k]);
    return n;
  }

  std::vector<std::uint64_t> word(std::uint64_t c) const {
    const std::uint64_t k = child_->size();
    std::vector<std::uint64_t> w(m_);
    for (unsigned t = m_; t-- > 0;) {
      w[t] = c % k;
      c /= k;
    }
    return w;
  }

  std::uint64_t encode(const std::vector<std::uint64_t>& w) const {
    std::uint64_t c = 0;
    for (auto i : w) c = c * child_->size() + i;
    return c;
  }

  FoldSlot slot(std::uint64_t c, std::uint64_t j) const {
    auto w = word(c);
    for (unsigned t = 0; t < m_; ++t) {
      const std::uint64_t h = child_->height(w[t]);
      if (j < h) return {t, w[t], j};
      j -= h;
    }
    fail("bad_level", "level beyond column top");
  }

  char name(std::uint64_t c, std::uint64_t j) const override {
    auto s = slot(c, j);
    return child_->name(s.child_column, s.child_level);
  }

  Rational left(std::uint64_t c, std::uint64_t j) const override {
    auto w = word(c);
    auto s = slot(c, j);
    const unsigned t = s.slot;
    // slots after t form the leading digits, slots before t (nearest first) the trailing ones
    Rational acc = 0;
    for (unsigned k = 0; k < t; ++k) acc = child_->prefix(w[k]) + child_->prob(w[k]) * acc;
    Rational rest_f = 0, rest_p = 1;
    for (unsigned k = t + 1; k < m_; ++k) {
      rest_f += rest_p * child_->prefix(w[k]);
      rest_p *= child_->prob(w[k]);
    }
    const Rational offset = (Rational(static_cast<unsigned long>(t)) + rest_f + rest_p * acc) / m_;
    return child_->left(w[t], s.child_level) + offset * child_->width(w[t]);
  }

  std::optional<LevelHit> locate(const Rational& x) const override {
    auto hit = child_->locate(x);
    if (!hit) return std::nullopt;
    Rational u = hit->offset * m_;
    const unsigned t = static_cast<unsigned>(floor_of(u).get_ui());
    u -= t;
    std::vector<std::uint64_t> w(m_);
    w[t] = hit->column;
    auto digit = [&](unsigned k) {
      w[k] = child_->find_by_prefix(u);
      u = (u - child_->prefix(w[k])) / child_->prob(w[k]);
    };
    for (unsigned k = t + 1; k < m_; ++k) digit(k);
    for (unsigned k = t; k-- > 0;) digit(k);
    std::uint64_t level = hit->level;
    for (unsigned k = 0; k < t; ++k) level += child_->height(w[k]);
    return LevelHit{encode(w), level, u};
  }

  std::vector<ShapeClass> shapes() const override {
    const Rational W = child_->total_width();
    auto base = child_->shapes();
    // classes of partial words: width carries the product of probabilities
    std::vector<ShapeClass> acc{{Rational(1), 0, 1}};
    for (unsigned t = 0; t < m_; ++t) {
      std::vector<ShapeClass> next;
      for (const auto& a : acc)
        for (const auto& b : base) next.push_back({a.width * (b.width / W), a.height + b.height, a.count * b.count});
      acc = merge_shapes(std::move(next));
    }
    for (auto& a : acc) a.width *= W / m_;
    return acc;
  }

  const LazyGadget& child() const { return *child_; }
  unsigned folds() const { return m_; }

 protected:
  Rational width_raw(std::uint64_t c) const override {
    Rational w = child_->total_width() / m_;
    for (auto i : word(c)) w *= child_->prob(i);
    return w;
  }
  std::uint64_t height_raw(std::uint64_t c) const override {
    std::uint64_t h = 0;
    for (auto i : word(c)) h += child_->height(i);
    return h;
  }
  Rational prefix_raw(std::uint64_t c) const override {
    Rational f = 0, p = 1;
    for (auto i : word(c)) {
      f += p * child_->prefix(i);
      p *= child_->prob(i);
    }
    return f;
  }

 private:
  LazyPtr child_;
  unsigned m_;
  std::uint64_t size_ = 0;
};

const FoldNode& as_fold(const LazyGadget& g) {
  auto* f = dynamic_cast<const FoldNode*>(&g);
  if (!f) fail("not_a_fold", "gadget is not a fold");
  return *f;
}

}  // namespace

LazyPtr lazy_explicit(Gadget g) { return std::make_shared<ExplicitNode>(std::move(g)); }
LazyPtr lazy_copy(LazyPtr child, unsigned t, unsigned copies) { return std::make_shared<CopyNode>(std::move(child), t, copies); }
LazyPtr lazy_union(std::vector<LazyPtr> parts) { return std::make_shared<UnionNode>(std::move(parts)); }
LazyPtr lazy_fold(LazyPtr child, unsigned m) { return std::make_shared<FoldNode>(std::move(child), m); }

std::vector<std::uint64_t> fold_word(const LazyGadget& fold, std::uint64_t c) { return as_fold(fold).word(c); }
FoldSlot fold_slot(const LazyGadget& fold, std::uint64_t c, std::uint64_t j) { return as_fold(fold).slot(c, j); }
unsigned fold_count(const LazyGadget& fold) { return as_fold(fold).folds(); }
const LazyGadget& fold_child(const LazyGadget& fold) { return as_fold(fold).child(); }

Gadget materialize(const LazyGadget& g, std::uint32_t stage_id) {
  if (g.size() > kTableLimit) fail("too_many_columns", "gadget too large to materialise");
  Gadget out;
  out.stage_id = stage_id;
  for (std::uint64_t c = 0; c < g.size(); ++c) {
    Column col;
    col.width = g.width(c);
    for (std::uint64_t j = 0; j < g.height(c); ++j) {
      col.lefts.push_back(g.left(c, j));
      col.names.push_back(g.name(c, j));
    }
    out.columns.push_back(std::move(col));
  }
  return out;
}

std::vector<ShapeClass> merge_shapes(std::vector<ShapeClass> shapes) {
  std::sort(shapes.begin(), shapes.end(), [](const ShapeClass& a, const ShapeClass& b) {
    return a.height != b.height ? a.height < b.height : a.width < b.width;
  });
  std::vector<ShapeClass> out;
  for (auto& s : shapes) {
    if (!out.empty() && out.back().height == s.height && out.back().width == s.width)
      out.back().count += s.count;
    else
      out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cutstack
