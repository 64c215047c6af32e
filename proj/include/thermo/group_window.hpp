#pragma once

// Lattice geometry on Z and Z^2: group elements, finite shapes, sparseness,
// interiors and boundaries, Folner boxes, box tilings and sparse
// almost-partitions. The group operation is written additively.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermo/rational.hpp"

namespace thermo {

using Coord = std::int64_t;

/// An element of Z^d for d in {1, 2}. In dimension 1 the second coordinate is 0.
struct Element {
  int dim = 1;
  std::array<Coord, 2> c{0, 0};

  static Element z1(Coord x) { return Element{1, {x, 0}}; }
  static Element z2(Coord x, Coord y) { return Element{2, {x, y}}; }
  static Element zero(int dim) { return Element{dim, {0, 0}}; }

  Coord x() const { return c[0]; }
  Coord y() const { return c[1]; }
  Coord operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Element&, const Element&) = default;
  friend std::strong_ordering operator<=>(const Element&, const Element&) = default;
};

Element operator+(const Element& a, const Element& b);
Element operator-(const Element& a, const Element& b);
Element operator-(const Element& a);

std::string to_string(const Element& e);

/// A finite subset of Z^d kept as a sorted, duplicate-free vector.
class Shape {
 public:
  Shape() = default;
  explicit Shape(int dim) : dim_(dim) {}
  Shape(int dim, std::vector<Element> elements);

  /// [lo, hi) in Z.
  static Shape interval(Coord lo, Coord hi);
  /// [x0, x1) x [y0, y1) in Z^2.
  static Shape box2(Coord x0, Coord x1, Coord y0, Coord y1);
  /// Box with inclusive lower corner `lo` and exclusive upper corner `hi`.
  static Shape box(const Element& lo, const Element& hi);

  int dim() const { return dim_; }
  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  std::span<const Element> elements() const { return elements_; }
  const Element& operator[](std::size_t i) const { return elements_[i]; }
  auto begin() const { return elements_.begin(); }
  auto end() const { return elements_.end(); }

  bool contains(const Element& e) const;
  std::optional<std::size_t> index_of(const Element& e) const;
  bool is_subset_of(const Shape& other) const;

  /// Componentwise minimum / maximum. Precondition: nonempty.
  Element lower() const;
  Element upper() const;
  /// Per-coordinate extent (max - min). Zero for the empty shape.
  Element extent() const;
  /// Smallest box containing the shape.
  Shape hull() const;
  bool is_box() const;

  friend bool operator==(const Shape&, const Shape&) = default;
  friend std::strong_ordering operator<=>(const Shape& a, const Shape& b);

 private:
  int dim_ = 1;
  std::vector<Element> elements_;
};

std::string to_string(const Shape& s);

/// g + S.
Shape translate_left(const Shape& s, const Element& g);
/// S + g. Agrees with translate_left because Z^d is abelian; both are kept so
/// call sites say which side the group element acts on.
Shape translate_right(const Shape& s, const Element& g);

Shape set_union(const Shape& a, const Shape& b);
Shape set_intersection(const Shape& a, const Shape& b);
Shape set_difference(const Shape& a, const Shape& b);
Shape symmetric_difference(const Shape& a, const Shape& b);
/// {a + b : a in A, b in B}.
Shape minkowski_sum(const Shape& a, const Shape& b);
/// {-s : s in S}.
Shape negate(const Shape& s);

/// True iff the translates s + F, s in S, are pairwise disjoint.
bool is_left_sparse(std::span<const Element> s, const Shape& f);

/// {f in F : f + h in F for every h in H}.
Shape right_interior(const Shape& f, const Shape& h);
/// F minus its right H-interior.
Shape right_boundary(const Shape& f, const Shape& h);

/// |(T + K) symmetric-difference T| / |T|.
Rational invariance_ratio(const Shape& t, const Shape& k);

/// [0, n)^d.
Shape folner_box(Coord n, int dim);
/// [-r, r]^d.
Shape symmetric_box(Coord r, int dim);

struct BoxTiling {
  Shape shape;                   // [0, block)^d
  std::vector<Element> centers;  // sorted
  Shape window;
};

/// Exact tiling of a box window by translates of [0, block)^d.
BoxTiling box_tiling(const Shape& window, Coord block);

struct PartitionPart {
  Element modulus;  // per-coordinate period of the progression
  Element residue;  // offset inside one period, relative to the window corner
  std::vector<Element> elements;
};

struct AlmostPartition {
  std::vector<PartitionPart> parts;
  Shape window;
  Shape sparse_against;  // the F every part is left F-sparse for
  Rational epsilon;
  Rational coverage;  // |union of parts| / |window|
};

/// Residue-class progressions modulo extent(F) + 1 inside a box window.
AlmostPartition almost_partition(const Shape& f, const Rational& epsilon, const Shape& window);

}  // namespace thermo
