#pragma once

// Shared helpers for the unit tests: a seeded generator and small builders.

#include <cstdint>
#include <vector>

#include "thermo/group_window.hpp"
#include "thermo/subshift.hpp"

namespace testing_support {

// splitmix64, kept separate from the library's streams so property tests do
// not share state with the code under test.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform on [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool coin() { return next() & 1; }

 private:
  std::uint64_t state_;
};

inline thermo::Shape cells1(std::initializer_list<thermo::Coord> xs) {
  std::vector<thermo::Element> e;
  for (auto x : xs) e.push_back(thermo::Element::z1(x));
  return thermo::Shape(1, e);
}

inline thermo::Shape cells2(std::initializer_list<std::pair<thermo::Coord, thermo::Coord>> xs) {
  std::vector<thermo::Element> e;
  for (auto [x, y] : xs) e.push_back(thermo::Element::z2(x, y));
  return thermo::Shape(2, e);
}

/// Random subset of the box [lo, hi]^d, possibly empty.
inline thermo::Shape random_shape(Gen& g, int dim, thermo::Coord lo, thermo::Coord hi, int tries) {
  std::vector<thermo::Element> e;
  for (int i = 0; i < tries; ++i) {
    if (dim == 1)
      e.push_back(thermo::Element::z1(g.range(lo, hi)));
    else
      e.push_back(thermo::Element::z2(g.range(lo, hi), g.range(lo, hi)));
  }
  return thermo::Shape(dim, e);
}

inline thermo::Pattern random_word(Gen& g, thermo::Coord start, int len, int q = 2) {
  std::vector<thermo::Symbol> v(static_cast<std::size_t>(len));
  for (auto& s : v) s = static_cast<thermo::Symbol>(g.range(0, q - 1));
  return thermo::Pattern(thermo::Shape::interval(start, start + len), v);
}

/// Binary words of length n in lexicographic order, as digit strings.
inline std::vector<std::string> binary_words(int n) {
  std::vector<std::string> out;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    std::string w(static_cast<std::size_t>(n), '0');
    for (int i = 0; i < n; ++i)
      if (s >> (n - 1 - i) & 1) w[static_cast<std::size_t>(i)] = '1';
    out.push_back(w);
  }
  return out;
}

}  // namespace testing_support
