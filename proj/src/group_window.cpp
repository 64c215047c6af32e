#include "thermo/group_window.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

void require_same_dim(int a, int b, const char* where) {
  if (a != b) throw DimensionError(fmt::format("{}: dimension mismatch ({} vs {})", where, a, b));
}

}  // namespace

Element operator+(const Element& a, const Element& b) {
  require_same_dim(a.dim, b.dim, "element addition");
  return Element{a.dim, {a.c[0] + b.c[0], a.c[1] + b.c[1]}};
}

Element operator-(const Element& a, const Element& b) {
  require_same_dim(a.dim, b.dim, "element subtraction");
  return Element{a.dim, {a.c[0] - b.c[0], a.c[1] - b.c[1]}};
}

Element operator-(const Element& a) { return Element{a.dim, {-a.c[0], -a.c[1]}}; }

std::string to_string(const Element& e) {
  if (e.dim == 1) return std::to_string(e.x());
  return fmt::format("({},{})", e.x(), e.y());
}

Shape::Shape(int dim, std::vector<Element> elements) : dim_(dim), elements_(std::move(elements)) {
  if (dim != 1 && dim != 2) throw DimensionError(fmt::format("unsupported dimension {}", dim));
  for (const auto& e : elements_) require_same_dim(e.dim, dim, "shape construction");
  std::sort(elements_.begin(), elements_.end());
  elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
}

Shape Shape::interval(Coord lo, Coord hi) {
  std::vector<Element> out;
  for (Coord x = lo; x < hi; ++x) out.push_back(Element::z1(x));
  return Shape(1, std::move(out));
}

Shape Shape::box2(Coord x0, Coord x1, Coord y0, Coord y1) {
  std::vector<Element> out;
  for (Coord x = x0; x < x1; ++x)
    for (Coord y = y0; y < y1; ++y) out.push_back(Element::z2(x, y));
  return Shape(2, std::move(out));
}

Shape Shape::box(const Element& lo, const Element& hi) {
  require_same_dim(lo.dim, hi.dim, "box");
  return lo.dim == 1 ? interval(lo.x(), hi.x()) : box2(lo.x(), hi.x(), lo.y(), hi.y());
}

bool Shape::contains(const Element& e) const {
  return std::binary_search(elements_.begin(), elements_.end(), e);
}

std::optional<std::size_t> Shape::index_of(const Element& e) const {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), e);
  if (it == elements_.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - elements_.begin());
}

bool Shape::is_subset_of(const Shape& other) const {
  return std::includes(other.elements_.begin(), other.elements_.end(), elements_.begin(),
                       elements_.end());
}

Element Shape::lower() const {
  if (empty()) throw DomainError("lower corner of empty shape");
  Element lo = elements_.front();
  for (const auto& e : elements_) {
    lo.c[0] = std::min(lo.c[0], e.c[0]);
    lo.c[1] = std::min(lo.c[1], e.c[1]);
  }
  return lo;
}

Element Shape::upper() const {
  if (empty()) throw DomainError("upper corner of empty shape");
  Element hi = elements_.front();
  for (const auto& e : elements_) {
    hi.c[0] = std::max(hi.c[0], e.c[0]);
    hi.c[1] = std::max(hi.c[1], e.c[1]);
  }
  return hi;
}

Element Shape::extent() const {
  if (empty()) return Element::zero(dim_);
  return upper() - lower();
}

Shape Shape::hull() const {
  if (empty()) return *this;
  Element hi = upper();
  hi.c[0] += 1;
  if (dim_ == 2) hi.c[1] += 1;
  return box(lower(), hi);
}

bool Shape::is_box() const {
  if (empty()) return false;
  const Element ext = extent();
  std::size_t volume = static_cast<std::size_t>(ext.x() + 1);
  if (dim_ == 2) volume *= static_cast<std::size_t>(ext.y() + 1);
  return volume == size();
}

std::strong_ordering operator<=>(const Shape& a, const Shape& b) {
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  return std::lexicographical_compare_three_way(a.elements_.begin(), a.elements_.end(),
                                                b.elements_.begin(), b.elements_.end());
}

std::string to_string(const Shape& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += to_string(s[i]);
  }
  return out + "}";
}

Shape translate_left(const Shape& s, const Element& g) {
  require_same_dim(s.dim(), g.dim, "translate");
  std::vector<Element> out;
  out.reserve(s.size());
  for (const auto& e : s) out.push_back(g + e);
  return Shape(s.dim(), std::move(out));
}

Shape translate_right(const Shape& s, const Element& g) {
  require_same_dim(s.dim(), g.dim, "translate");
  std::vector<Element> out;
  out.reserve(s.size());
  for (const auto& e : s) out.push_back(e + g);
  return Shape(s.dim(), std::move(out));
}

Shape set_union(const Shape& a, const Shape& b) {
  require_same_dim(a.dim(), b.dim(), "union");
  std::vector<Element> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Shape(a.dim(), std::move(out));
}

Shape set_intersection(const Shape& a, const Shape& b) {
  require_same_dim(a.dim(), b.dim(), "intersection");
  std::vector<Element> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Shape(a.dim(), std::move(out));
}

Shape set_difference(const Shape& a, const Shape& b) {
  require_same_dim(a.dim(), b.dim(), "difference");
  std::vector<Element> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Shape(a.dim(), std::move(out));
}

Shape symmetric_difference(const Shape& a, const Shape& b) {
  require_same_dim(a.dim(), b.dim(), "symmetric difference");
  std::vector<Element> out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Shape(a.dim(), std::move(out));
}

Shape minkowski_sum(const Shape& a, const Shape& b) {
  require_same_dim(a.dim(), b.dim(), "sumset");
  std::vector<Element> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x + y);
  return Shape(a.dim(), std::move(out));
}

Shape negate(const Shape& s) {
  std::vector<Element> out;
  for (const auto& e : s) out.push_back(-e);
  return Shape(s.dim(), std::move(out));
}

bool is_left_sparse(std::span<const Element> s, const Shape& f) {
  std::vector<Element> cells;
  cells.reserve(s.size() * f.size());
  for (const auto& p : s) {
    require_same_dim(p.dim, f.dim(), "sparseness");
    for (const auto& q : f) cells.push_back(p + q);
  }
  // Within one translate the cells are distinct, so any repeat is a collision
  // between two different translates (or a duplicated element of S).
  std::sort(cells.begin(), cells.end());
  return std::adjacent_find(cells.begin(), cells.end()) == cells.end();
}

Shape right_interior(const Shape& f, const Shape& h) {
  require_same_dim(f.dim(), h.dim(), "interior");
  std::vector<Element> out;
  for (const auto& x : f) {
    bool inside = std::all_of(h.begin(), h.end(), [&](const Element& y) { return f.contains(x + y); });
    if (inside) out.push_back(x);
  }
  return Shape(f.dim(), std::move(out));
}

Shape right_boundary(const Shape& f, const Shape& h) { return set_difference(f, right_interior(f, h)); }

Rational invariance_ratio(const Shape& t, const Shape& k) {
  if (t.empty()) throw DomainError("invariance ratio of an empty shape");
  const Shape moved = minkowski_sum(t, k);
  const auto diff = symmetric_difference(moved, t).size();
  return Rational(static_cast<std::int64_t>(diff), static_cast<std::int64_t>(t.size()));
}

Shape folner_box(Coord n, int dim) {
  if (n < 1) throw DomainError("folner_box needs n >= 1");
  return dim == 1 ? Shape::interval(0, n) : Shape::box2(0, n, 0, n);
}

Shape symmetric_box(Coord r, int dim) {
  if (r < 0) throw DomainError("symmetric_box needs r >= 0");
  return dim == 1 ? Shape::interval(-r, r + 1) : Shape::box2(-r, r + 1, -r, r + 1);
}

BoxTiling box_tiling(const Shape& window, Coord block) {
  if (block < 1) throw DomainError("box tiling block must be positive");
  if (!window.is_box()) throw DomainError("box tiling needs a box window, got " + to_string(window));
  const int d = window.dim();
  const Element lo = window.lower();
  const Element ext = window.extent();
  for (int i = 0; i < d; ++i) {
    if ((ext[i] + 1) % block != 0)
      throw DomainError(fmt::format("window side {} is not a multiple of block {}", ext[i] + 1, block));
  }
  BoxTiling out;
  out.window = window;
  out.shape = folner_box(block, d);
  for (const auto& e : window) {
    const Element rel = e - lo;
    bool corner = rel.x() % block == 0 && (d == 1 || rel.y() % block == 0);
    if (corner) out.centers.push_back(e);
  }
  return out;
}

AlmostPartition almost_partition(const Shape& f, const Rational& epsilon, const Shape& window) {
  if (epsilon <= Rational(0) || epsilon >= Rational(1))
    throw DomainError("almost_partition needs epsilon in (0,1), got " + epsilon.str());
  if (f.empty()) throw DomainError("almost_partition needs a nonempty F");
  if (!window.is_box()) throw DomainError("almost_partition needs a box window");
  require_same_dim(f.dim(), window.dim(), "almost_partition");

  const int d = window.dim();
  const Element ext = f.extent();
  const Element wext = window.extent();
  Element modulus = Element::zero(d);
  for (int i = 0; i < d; ++i) {
    modulus.c[static_cast<std::size_t>(i)] = ext[i] + 1;
    if (wext[i] + 1 < modulus[i])
      throw DomainError(fmt::format("window too small: side {} below block {}; increase window",
                                    wext[i] + 1, modulus[i]));
  }

  const Element lo = window.lower();
  AlmostPartition out;
  out.window = window;
  out.sparse_against = f;
  out.epsilon = epsilon;

  std::vector<Element> residues;
  for (Coord rx = 0; rx < modulus.x(); ++rx) {
    if (d == 1) {
      residues.push_back(Element::z1(rx));
    } else {
      for (Coord ry = 0; ry < modulus.y(); ++ry) residues.push_back(Element::z2(rx, ry));
    }
  }
  std::size_t covered = 0;
  for (const auto& r : residues) {
    PartitionPart part{modulus, r, {}};
    for (const auto& e : window) {
      const Element rel = e - lo;
      bool match = rel.x() % modulus.x() == r.x() && (d == 1 || rel.y() % modulus.y() == r.y());
      if (match) part.elements.push_back(e);
    }
    covered += part.elements.size();
    out.parts.push_back(std::move(part));
  }
  out.coverage = Rational(static_cast<std::int64_t>(covered), static_cast<std::int64_t>(window.size()));
  if (out.coverage < Rational(1) - epsilon)
    throw DomainError("coverage below 1 - epsilon; increase window");
  return out;
}

}  // namespace thermo
