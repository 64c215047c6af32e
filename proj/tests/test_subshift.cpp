#include <algorithm>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "thermo/error.hpp"

using namespace thermo;
using testing_support::binary_words;
using testing_support::cells1;
using testing_support::cells2;
using testing_support::Gen;

namespace {

std::vector<std::string> words_of(const Language& l) {
  std::vector<std::string> out;
  for (const auto& p : l.patterns) out.push_back(p.str());
  return out;
}

// Brute-force oracles: a binary word avoiding "11"; a binary array with no
// two adjacent 1s.
bool avoids_11(const std::string& w) { return w.find("11") == std::string::npos; }

std::size_t hard_square_count(int rows, int cols) {
  std::size_t count = 0;
  const int n = rows * cols;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    bool ok = true;
    for (int r = 0; r < rows && ok; ++r)
      for (int c = 0; c < cols && ok; ++c) {
        const bool one = s >> (r * cols + c) & 1;
        if (!one) continue;
        if (c + 1 < cols && (s >> (r * cols + c + 1) & 1)) ok = false;
        if (r + 1 < rows && (s >> ((r + 1) * cols + c) & 1)) ok = false;
      }
    count += ok;
  }
  return count;
}

Subshift memory_two() { return Subshift::sft(1, Alphabet::digits(2), {Pattern::word("111"), Pattern::word("101")}); }

// Word oracle for the memory-two example: no "111" and no "101" in a word
// that also extends to the left and right forever (append 0s).
bool memory_two_word(const std::string& w) {
  return w.find("111") == std::string::npos && w.find("101") == std::string::npos;
}

}  // namespace

TEST_CASE("alphabets and patterns") {
  const Alphabet ab({"a", "b", "c"});
  CHECK(ab.size() == 3);
  CHECK(ab.index_of('c') == 2);
  CHECK_THROWS_AS(ab.index_of('z'), DomainError);
  CHECK_THROWS(Alphabet({"a", "a"}));

  const Pattern p = Pattern::parse(ab, cells1({2, 5, 7}), "cab");
  CHECK(p.at(Element::z1(5)) == 0);
  CHECK(p.str(ab) == "cab");
  CHECK(p.translated(Element::z1(-2)).shape() == cells1({0, 3, 5}));
  CHECK(p.restrict(cells1({2, 7})).str(ab) == "cb");
  CHECK_THROWS(Pattern::parse(ab, cells1({0, 1}), "abc"));

  const Pattern over = Pattern::word("11", 6);
  CHECK(Pattern::word("0000", 4).overlay(over).str() == "0011");
  CHECK(Pattern::word("01") != Pattern::word("01", 1));
}

TEST_CASE("pattern codec round trip") {
  const Shape s = cells2({{0, 0}, {1, 0}, {0, 1}});
  const PatternCodec codec(s, 3);
  CHECK(codec.count() == 27);
  for (std::uint64_t c = 0; c < codec.count(); ++c) CHECK(codec.encode(codec.decode(c)) == c);
  // big-endian: the first cell in sorted order is most significant
  CHECK(PatternCodec(Shape::interval(0, 3), 2).encode(Pattern::word("100")) == 4);
}

TEST_CASE("languages from the examples") {
  const auto gm = Subshift::golden_mean();
  CHECK(words_of(language(gm, Shape::interval(0, 2))) == std::vector<std::string>{"00", "01", "10"});
  const auto full = Subshift::full(1, Alphabet::digits(2));
  CHECK(words_of(language(full, Shape::interval(0, 3))) == binary_words(3));
  const auto sunny = Subshift::sunny_side_up();
  CHECK(words_of(language(sunny, Shape::interval(0, 3))) == std::vector<std::string>{"000", "001", "010", "100"});
}

TEST_CASE("1D languages match brute force") {
  const auto gm = Subshift::golden_mean();
  const auto m2 = memory_two();
  for (int n = 1; n <= 12; ++n) {
    std::vector<std::string> expect_gm, expect_m2;
    for (const auto& w : binary_words(n)) {
      if (avoids_11(w)) expect_gm.push_back(w);
      if (memory_two_word(w)) expect_m2.push_back(w);
    }
    CHECK(words_of(language(gm, Shape::interval(0, n))) == expect_gm);
    CHECK(words_of(language(m2, Shape::interval(3, 3 + n))) == expect_m2);
  }
  // non-interval shapes: projections of the hull language
  const Shape gap = cells1({0, 2, 5});
  std::set<std::string> expect;
  for (const auto& w : binary_words(6))
    if (avoids_11(w)) expect.insert(std::string{w[0], w[2], w[5]});
  CHECK(words_of(language(gm, gap)) == std::vector<std::string>(expect.begin(), expect.end()));
}

TEST_CASE("essential states drop words that cannot extend") {
  // "0" cannot be followed by anything: only 1^infinity survives
  const auto x = Subshift::sft(1, Alphabet::digits(2), {Pattern::word("00"), Pattern::word("01")});
  CHECK(words_of(language(x, Shape::interval(0, 3))) == std::vector<std::string>{"111"});
  const auto empty = Subshift::sft(1, Alphabet::digits(2), {Pattern::word("0"), Pattern::word("1")});
  CHECK(language(empty, Shape::interval(0, 1)).patterns.empty());
}

TEST_CASE("2D languages") {
  const auto hs = Subshift::hard_square();
  for (auto [r, c] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {2, 3}, {3, 3}}) {
    const Language l = language(hs, Shape::box2(0, c, 0, r));
    CHECK(l.patterns.size() == hard_square_count(r, c));
    CHECK(l.admissibility == Admissibility::MarginStable);
  }
  const auto full2 = Subshift::full(2, Alphabet::digits(2));
  const Language l = language(full2, Shape::box2(0, 2, 0, 2));
  CHECK(l.patterns.size() == 16);
  CHECK(l.admissibility == Admissibility::Exact);

  // a checkerboard-forcing SFT: forbid equal horizontal and vertical neighbours
  const auto checker = Subshift::sft(2, Alphabet::digits(2),
                                     {Pattern(cells2({{0, 0}, {1, 0}}), {0, 0}), Pattern(cells2({{0, 0}, {1, 0}}), {1, 1}),
                                      Pattern(cells2({{0, 0}, {0, 1}}), {0, 0}), Pattern(cells2({{0, 0}, {0, 1}}), {1, 1})});
  CHECK(language(checker, Shape::box2(0, 3, 0, 3)).patterns.size() == 2);
}

TEST_CASE("sub-shape restrictions stay in the language") {
  Gen g(11);
  const std::vector<Subshift> xs{Subshift::golden_mean(), memory_two(), Subshift::sunny_side_up(), Subshift::hard_square()};
  for (const auto& x : xs) {
    const Shape f = x.dim() == 1 ? Shape::interval(0, 7) : Shape::box2(0, 3, 0, 3);
    const Language big = language(x, f);
    for (int t = 0; t < 8; ++t) {
      Shape sub = set_intersection(f, testing_support::random_shape(g, x.dim(), 0, 6, 5));
      if (sub.empty()) continue;
      const auto small = language(x, sub).patterns;
      for (const auto& p : big.patterns)
        CHECK(std::binary_search(small.begin(), small.end(), p.restrict(sub)));
    }
  }
}

TEST_CASE("scale cap") {
  const auto old = scale_cap();
  set_scale_cap(100);
  try {
    language(Subshift::full(1, Alphabet::digits(2)), Shape::interval(0, 10));
    FAIL("expected a scale cap error");
  } catch (const ScaleCapError& e) {
    CHECK(e.requested() == 1024.0);
    CHECK(e.cap() == 100.0);
  }
  set_scale_cap(old);
  CHECK_THROWS_AS(set_scale_cap(0), DomainError);
}

TEST_CASE("cylinder patterns") {
  const auto gm = Subshift::golden_mean();
  const auto a = cylinder_patterns(gm, Pattern::word("1"), Shape::interval(0, 2));
  REQUIRE(a.size() == 1);
  CHECK(a[0].str() == "10");
  const auto full = Subshift::full(1, Alphabet::digits(2));
  const auto b = cylinder_patterns(full, Pattern::word("0"), Shape::interval(0, 2));
  REQUIRE(b.size() == 2);
  CHECK(b[0].str() == "00");
  CHECK(b[1].str() == "01");
  const auto c = cylinder_patterns(Subshift::sunny_side_up(), Pattern::word("1"), Shape::interval(-1, 2));
  REQUIRE(c.size() == 1);
  CHECK(c[0].str() == "010");
}

TEST_CASE("occurrences and replacements") {
  const Pattern u = Pattern::word("01011");
  CHECK(occurrences(Pattern::word("01"), u) == std::vector<Element>{Element::z1(0), Element::z1(2)});
  CHECK(occurrences(Pattern::word("0"), Pattern::word("000")).size() == 3);
  CHECK(occurrences(Pattern::word("11"), u) == std::vector<Element>{Element::z1(3)});

  const Pattern v = Pattern::word("01"), w = Pattern::word("10");
  std::vector<Element> s0{Element::z1(0)};
  CHECK(replace(u, v, w, s0).str() == "10011");
  CHECK(replace(u, v, w, {}).str() == "01011");
  std::vector<Element> s02{Element::z1(0), Element::z1(2)};
  CHECK(replace(u, v, w, s02).str() == "10101");

  std::vector<Element> overlapping{Element::z1(0), Element::z1(1)};
  CHECK_THROWS_AS(replace(Pattern::word("000"), Pattern::word("00"), Pattern::word("11"), overlapping), DomainError);
  std::vector<Element> not_occ{Element::z1(1)};
  CHECK_THROWS_AS(replace(u, v, w, not_occ), DomainError);
}

TEST_CASE("extender comparison examples") {
  const auto gm = Subshift::golden_mean();
  const Pattern one = Pattern::word("1"), zero = Pattern::word("0");

  const auto r1 = extender_compare(gm, one, zero, 4);
  CHECK(r1.relation == ExtenderRelation::ProperContainment);
  CHECK(r1.method == ExtenderMethod::Exact1D);

  const auto r2 = extender_compare(gm, zero, one, 4);
  CHECK(r2.relation == ExtenderRelation::NotContained);
  CHECK(r2.radius == 1);
  REQUIRE(r2.witness.has_value());
  CHECK(r2.witness->at(Element::z1(-1)) == 1);
  CHECK(in_language(gm, r2.witness->overlay(zero)));
  CHECK_FALSE(in_language(gm, r2.witness->overlay(one)));

  const auto sunny = Subshift::sunny_side_up();
  const auto r3 = extender_compare(sunny, one, zero, 4);
  CHECK(r3.relation == ExtenderRelation::ProperContainment);
  CHECK(r3.method == ExtenderMethod::FamilyExact);

  CHECK(extender_compare(gm, one, one, 4).relation == ExtenderRelation::Equal);
  CHECK_THROWS_AS(extender_compare(gm, one, Pattern::word("00"), 4), DomainError);

  // the bounded method stamps its radius and never claims exactness
  ExtenderOracle oracle(Subshift::hard_square());
  const Pattern v(cells2({{0, 0}}), {1}), w(cells2({{0, 0}}), {0});
  const auto r4 = oracle.compare(v, w, 2);
  CHECK(r4.relation == ExtenderRelation::ContainedUpTo);
  CHECK(r4.radius == 2);
  CHECK_FALSE(r4.exact());
  const auto r5 = oracle.compare(w, v, 2);
  CHECK(r5.relation == ExtenderRelation::NotContained);
  CHECK(r5.radius == 1);
}

TEST_CASE("property: bounded extender verdicts are monotone in the radius") {
  const std::vector<Subshift> xs{Subshift::golden_mean(), memory_two(), Subshift::sunny_side_up()};
  for (const auto& x : xs) {
    ExtenderOracle oracle(x);
    for (Coord len = 1; len <= 3; ++len) {
      const auto words = language(x, Shape::interval(0, len)).patterns;
      for (const auto& v : words)
        for (const auto& w : words) {
          std::vector<bool> contained;
          for (int r = 1; r <= 5; ++r) contained.push_back(oracle.compare_bounded(v, w, r).contained());
          for (std::size_t r = 1; r < contained.size(); ++r) CHECK((contained[r - 1] || !contained[r]));
        }
    }
  }
}

TEST_CASE("property: exact and bounded verdicts agree from the memory radius on") {
  struct Case {
    Subshift x;
    int from_radius;
  };
  const std::vector<Case> cases{{Subshift::golden_mean(), 1},
                                {Subshift::full(1, Alphabet::digits(2)), 1},
                                {memory_two(), 2},
                                {Subshift::sunny_side_up(), 1}};
  for (const auto& [x, from] : cases) {
    ExtenderOracle oracle(x);
    for (Coord len = 1; len <= 3; ++len) {
      const auto words = language(x, Shape::interval(0, len)).patterns;
      for (const auto& v : words)
        for (const auto& w : words) {
          const bool exact = oracle.compare_exact(v, w).contained();
          for (int r = from; r <= 6; ++r) CHECK(oracle.compare_bounded(v, w, r).contained() == exact);
          // exact containment forces containment at every radius
          if (exact)
            for (int r = 1; r < from; ++r) CHECK(oracle.compare_bounded(v, w, r).contained());
        }
    }
  }
}

TEST_CASE("points and backgrounds") {
  const PointApprox zeros = PointApprox::constant(1, 0);
  CHECK(zeros.at(Element::z1(-40)) == 0);
  const PointApprox p(Pattern::word("110", 2), Background{Element::z1(2), Pattern::word("01")});
  CHECK(p.at(Element::z1(2)) == 1);
  CHECK(p.at(Element::z1(3)) == 1);
  CHECK(p.at(Element::z1(4)) == 0);
  CHECK(p.at(Element::z1(5)) == 1);
  CHECK(p.at(Element::z1(6)) == 0);
  CHECK(p.at(Element::z1(-1)) == 1);
  CHECK(p.normalized().core().size() < p.core().size());
  CHECK(p.normalized() == p);

  const PointApprox q = zeros.overwritten(Pattern::word("11", 3));
  CHECK(q.difference_set(zeros) == cells1({3, 4}));
  CHECK_THROWS_AS(q.difference_set(p), DomainError);
  CHECK(is_legal_point(Subshift::full(1, Alphabet::digits(2)), q));
  CHECK_FALSE(is_legal_point(Subshift::golden_mean(), q));
}

TEST_CASE("swap maps") {
  const auto full = Subshift::full(1, Alphabet::digits(2));
  const Pattern one = Pattern::word("1"), zero = Pattern::word("0");
  const PointApprox x = PointApprox::constant(1, 0).overwritten(one);
  CHECK(swap_map(full, one, zero, x).at(Element::z1(0)) == 0);

  const auto sunny = Subshift::sunny_side_up();
  const PointApprox zeros = PointApprox::constant(1, 0);
  const PointApprox x0 = swap_map(sunny, one, zero, zeros);
  CHECK(x0 == zeros.overwritten(one));
  const PointApprox x5 = zeros.overwritten(Pattern::word("1", 5));
  CHECK(swap_map(sunny, one, zero, x5) == x5);

  CHECK(swap_map(full, one, one, x) == x);
  CHECK_THROWS_AS(swap_map(Subshift::golden_mean(), one, zero, zeros.overwritten(Pattern::word("11"))), DomainError);

  // 2D: hard square, swapping a single cell
  const auto hs = Subshift::hard_square();
  const Pattern v(cells2({{0, 0}}), {1}), w(cells2({{0, 0}}), {0});
  const PointApprox z2 = PointApprox::constant(2, 0);
  CHECK(swap_map(hs, v, w, z2).at(Element::z2(0, 0)) == 1);
  const PointApprox blocked = z2.overwritten(Pattern(cells2({{1, 0}}), {1}));
  CHECK(swap_map(hs, v, w, blocked) == blocked);
}

TEST_CASE("property: swap maps are involutions") {
  Gen g(99);
  const std::vector<Subshift> xs{Subshift::golden_mean(), memory_two(), Subshift::full(1, Alphabet::digits(3)),
                                 Subshift::sunny_side_up()};
  for (const auto& x : xs) {
    const auto cores = language(x, Shape::interval(0, 8)).patterns;
    for (int t = 0; t < 200; ++t) {
      const Pattern& core = cores[static_cast<std::size_t>(g.range(0, static_cast<std::int64_t>(cores.size()) - 1))];
      const PointApprox p(core, Background::constant(1, 0));
      if (!is_legal_point(x, p)) continue;
      const Coord start = g.range(-2, 8);
      const Coord len = g.range(1, 3);
      const auto words = language(x, Shape::interval(start, start + len)).patterns;
      const Pattern& v = words[static_cast<std::size_t>(g.range(0, static_cast<std::int64_t>(words.size()) - 1))];
      const Pattern& w = words[static_cast<std::size_t>(g.range(0, static_cast<std::int64_t>(words.size()) - 1))];
      const PointApprox once = swap_map(x, v, w, p);
      CHECK(is_legal_point(x, once));
      CHECK(swap_map(x, v, w, once).agrees_on(p, Shape::interval(-6, 16)));
    }
  }
}
