#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "thermo/audit.hpp"
#include "thermo/error.hpp"

using namespace thermo;
using testing_support::Gen;

namespace {

LocallyConstantPotential equal_neighbours() {
  return LocallyConstantPotential::from_function(Shape::interval(0, 2), 2, [](const Pattern& u) {
    return u.values()[0] == u.values()[1] ? 1.0 : 0.0;
  });
}

Subshift full2() { return Subshift::full(1, Alphabet::digits(2)); }

AuditCase lc_case(const Subshift& x, const LocallyConstantPotential& phi, const std::string& v, const std::string& w,
                  Coord start = 0) {
  const auto mu = transfer_pressure(x, phi).measure;
  return make_case(v + ">" + w, x, phi, Pattern::word(v, start), Pattern::word(w, start), mu);
}

const Check& find(const AuditReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  FAIL("missing check " << name);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("theorem bound on the golden mean shift") {
  const auto gm = Subshift::golden_mean();
  const auto phi = LocallyConstantPotential::single_site(1, {0.0, 0.8});
  const auto c = lc_case(gm, phi, "1", "0");
  const auto rep = audit_theorem1(c);
  REQUIRE(rep.checks.size() == 1);
  const auto& ch = rep.checks[0];
  CHECK(ch.pass);
  CHECK(ch.lhs == doctest::Approx(cylinder_measure(c.measure, Pattern::word("1"))));
  CHECK(ch.rhs == doctest::Approx(cylinder_measure(c.measure, Pattern::word("0")) * std::exp(0.8)));
  CHECK(ch.slack == doctest::Approx(ch.rhs - ch.lhs));
  CHECK(ch.provenance.find("sup_cocycle=exact") != std::string::npos);
  CHECK(rep.extender_stamp == c.extender.stamp());

  // 0 has more extensions than 1, so the reverse swap is not certified
  CHECK_THROWS_AS(audit_theorem1(lc_case(gm, phi, "0", "1")), CaseRejected);
}

TEST_CASE("locally constant form") {
  // full shift, equal-neighbour potential: both words have two equal neighbour pairs
  const auto c = lc_case(full2(), equal_neighbours(), "01110", "00100");
  CHECK(c.extender.relation == ExtenderRelation::Equal);
  CHECK(cylinder_measure(c.measure, c.v) == doctest::Approx(cylinder_measure(c.measure, c.w)).epsilon(1e-12));
  const auto rep = audit_corollary_lc(c);
  CHECK(rep.passed());
  CHECK(find(rep, "corollary_lc").pass);
  CHECK(find(rep, "corollary_matches_sup").lhs <= 1e-12);
  CHECK(find(rep, "corollary_equality").lhs <= 1e-12);

  // v and w must agree near the edge of F
  CHECK_THROWS_AS(audit_corollary_lc(lc_case(full2(), equal_neighbours(), "110", "010")), CaseRejected);

  const auto gm = lc_case(Subshift::golden_mean(), equal_neighbours(), "0100", "0000");
  const auto grep = audit_corollary_lc(gm);
  CHECK(grep.passed());
  CHECK_FALSE(grep.checks.empty());
}

TEST_CASE("maximal entropy on sunny-side-up") {
  const auto x = Subshift::sunny_side_up();
  const auto mu = EquilibriumMeasure::point_mass(PointApprox::constant(1, 0));
  const auto c = make_case("sunny", x, LocallyConstantPotential::zero(1, 2), Pattern::word("1"), Pattern::word("0"), mu);
  CHECK(c.extender.relation == ExtenderRelation::ProperContainment);
  const auto rep = audit_mme(c);
  CHECK(rep.passed());
  CHECK(rep.checks[0].lhs == 0.0);
  CHECK(rep.checks[0].rhs == 1.0);

  const auto back = make_case("back", x, LocallyConstantPotential::zero(1, 2), Pattern::word("0"), Pattern::word("1"), mu);
  CHECK_THROWS_AS(audit_mme(back), CaseRejected);
}

TEST_CASE("property: theorem and locally constant forms hold on random cases") {
  Gen g(2024);
  int audited = 0;
  for (int t = 0; t < 120; ++t) {
    std::vector<double> table(4);
    for (auto& v : table) v = g.unit() * 2.0 - 1.0;
    const LocallyConstantPotential phi(Shape::interval(0, 2), 2, table);
    const Subshift x = t % 2 ? full2() : Subshift::golden_mean();
    const int len = static_cast<int>(g.range(1, 5));
    const Pattern v = testing_support::random_word(g, 0, len), w = testing_support::random_word(g, 0, len);
    if (!in_language(x, v) || !in_language(x, w)) continue;
    const auto c = make_case("r", x, phi, v, w, transfer_pressure(x, phi).measure);
    try {
      const auto rep = audit_theorem1(c);
      CHECK(rep.passed());
      ++audited;
    } catch (const CaseRejected&) {
      CHECK(c.extender.relation == ExtenderRelation::NotContained);
    }
  }
  CHECK(audited > 20);
}

TEST_CASE("ratio stabilization along growing windows") {
  const auto c = lc_case(full2(), equal_neighbours(), "1", "0");
  LrnOptions opts;
  opts.max_n = 8;
  opts.samples = 30;
  const auto rep = audit_lrn(c, opts);
  CHECK(rep.passed());
  CHECK(find(rep, "lrn_failures").lhs == 0.0);
  CHECK(find(rep, "lrn_stabilization").lhs <= 1e-12);

  // a Markov measure of memory one has r_n constant from n = 1
  const Pattern u = Pattern::parse(Alphabet::digits(2), Shape::interval(-8, 9), "01101001001101101");
  const auto r = lrn_ratios(c, u, 8);
  REQUIRE(r.size() == 8);
  for (double x : r) CHECK(x == doctest::Approx(r.front()).epsilon(1e-12));
  // neighbours of x_0 are 0 and 1: swapping 0 -> 1 keeps the count
  CHECK(r.front() == doctest::Approx(1.0).epsilon(1e-12));

  // points outside [w] or fixed by the swap are skipped
  LrnOptions with_points = opts;
  with_points.points.push_back(PointApprox::constant(1, 1));
  with_points.points.push_back(PointApprox::constant(1, 0));
  const auto rp = audit_lrn(c, with_points);
  CHECK(rp.skipped >= 1);
  CHECK(rp.passed());

  opts.max_n = 2;
  CHECK_THROWS_AS(audit_lrn(c, opts), DomainError);

  const auto gm = lc_case(Subshift::golden_mean(), equal_neighbours(), "1", "0");
  LrnOptions g_opts;
  g_opts.max_n = 6;
  g_opts.samples = 40;
  const auto grep = audit_lrn(gm, g_opts);
  CHECK(grep.passed());
}

TEST_CASE("conformal equality") {
  const auto c = lc_case(full2(), LocallyConstantPotential::single_site(1, {0.0, 1.3}), "1", "0");
  LrnOptions opts;
  opts.max_n = 4;
  opts.samples = 20;
  const auto rep = audit_conformal_equality(c, opts);
  CHECK(rep.passed());
  REQUIRE_FALSE(rep.checks.empty());

  const auto gm = lc_case(Subshift::golden_mean(), LocallyConstantPotential::zero(1, 2), "1", "0");
  CHECK_THROWS_AS(audit_conformal_equality(gm, opts), CaseRejected);
}

TEST_CASE("integrated ratio bound") {
  for (const auto& [v, w] : {std::pair{"1", "0"}, std::pair{"010", "000"}, std::pair{"10", "00"}}) {
    const auto c = lc_case(Subshift::golden_mean(), equal_neighbours(), v, w);
    const auto rep = audit_obs_thm3(c);
    CHECK(rep.passed());
    CHECK(find(rep, "obs_mass").lhs <= 1e-12);
  }
  const auto sv = SVPotential::geometric(0.5, 5);
  const auto mu = transfer_pressure(full2(), sv.approximant(5)).measure;
  const auto c = make_case("sv", full2(), sv, Pattern::word("1"), Pattern::word("0"), mu);
  CHECK(audit_obs_thm3(c, 2).passed());
}

TEST_CASE("binomial entropy gap") {
  const Rational a(2), b(1);
  CHECK(stirling_gap(a, b, Rational(1, 10)) == doctest::Approx(0.0719475133).epsilon(1e-9));
  CHECK(stirling_gap(a, b, Rational(1, 6)) == doctest::Approx(0.1231107572).epsilon(1e-9));
  CHECK(binomial_gap(a, b, Rational(1, 6), 120) == doctest::Approx(0.1227145).epsilon(1e-6));
  CHECK(binomial_gap(a, b, Rational(1, 6), 720) == doctest::Approx(0.1230446).epsilon(1e-6));
  CHECK(binomial_gap(a, b, Rational(1, 10), 120) == doctest::Approx(0.0717227).epsilon(1e-6));
  CHECK(binomial_gap(a, b, Rational(1, 10), 720) == doctest::Approx(0.0719100).epsilon(1e-6));
  CHECK_THROWS_AS(binomial_gap(a, b, Rational(1, 7), 120), DomainError);
  CHECK_THROWS_AS(stirling_gap(a, b, Rational(1)), DomainError);
  CHECK_THROWS_AS(stirling_gap(2.0, 1.0, 0.0), DomainError);

  for (int k = 1; k < 10; ++k) CHECK(stirling_gap(a, b, Rational(k, 10)) > 0.6 * k / 10.0);
  CHECK(stirling_threshold(a, b, Rational(3, 5), 10) == doctest::Approx(0.9));

  const auto rep = audit_stirling(a, b, Rational(3, 5));
  CHECK(rep.passed());
  CHECK(find(rep, "binomial@n=120,c=1/6").pass);
  CHECK(find(rep, "binomial@n=720,c=1/10").pass);
  CHECK(find(rep, "slope_at_zero").lhs < 1e-3);

  // log(a/b) = log 2 < 7/10
  CHECK_THROWS_AS(audit_stirling(a, b, Rational(7, 10)), DomainError);
}

TEST_CASE("property: the gap function is increasing and above its tangent at zero") {
  Gen g(31);
  for (int t = 0; t < 500; ++t) {
    const double b = 0.5 + g.unit() * 2.0;
    const double a = b * (1.0 + 0.05 + g.unit() * 3.0);
    const double c1 = g.unit() * b * 0.98 + b * 0.01;
    const double c2 = std::min(c1 + g.unit() * (b - c1) * 0.9, b * 0.999);
    const double f1 = stirling_gap(a, b, c1);
    CHECK(f1 > 0.0);
    CHECK(f1 >= c1 * std::log(a / b) - 1e-12);
    if (c2 > c1) CHECK(stirling_gap(a, b, c2) >= f1);
  }
}
