#include "thermo/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>
#include <gmp.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_contained(const AuditCase& c) {
  if (!c.extender.contained())
    throw CaseRejected(fmt::format("case {}: extender set of v is not contained in that of w ({})", c.id,
                                   c.extender.stamp()));
}

std::string provenance(const AuditCase& c, const std::string& extra) {
  const char* pot = std::holds_alternative<LocallyConstantPotential>(c.potential) ? "lc" : "sv";
  return fmt::format("{};measure={};potential={};{}", c.extender.stamp(), to_string(c.measure.kind()), pot, extra);
}

// The locally constant view of the potential plus the SV error per swapped cell.
struct View {
  const LocallyConstantPotential* lc;
  double cell_error;
};

View view_of(const Potential& phi) {
  if (const auto* lc = std::get_if<LocallyConstantPotential>(&phi)) return {lc, 0.0};
  const auto& sv = std::get<SVPotential>(phi);
  return {&sv.approximant(sv.depth()), sv.approximant_error(sv.depth())};
}

double safe_exp(double x) { return x == -kInf ? 0.0 : std::exp(x); }

// Upper bound on the swap cocycle exponent for patterns on a window.
double exponent_upper(const AuditCase& c, const Pattern& vn, const Pattern& wn) {
  const View view = view_of(c.potential);
  const Shape& f = c.v.shape();
  const Shape terms = minkowski_sum(f, negate(view.lc->window()));
  if (minkowski_sum(terms, view.lc->window()).is_subset_of(vn.shape()))
    return pattern_sum_difference(*view.lc, terms, vn, wn) + static_cast<double>(f.size()) * view.cell_error;
  return sup_cocycle_over_cylinder(c.potential, c.subshift, vn, wn).upper;
}

Shape lrn_window(const Shape& f, int n) {
  if (f.dim() != 1) throw DomainError("ratio audits run on Z");
  return Shape::interval(f.lower().x() - n, f.upper().x() + n + 1);
}

// Samples u on F_{max_n} from mu conditioned on [w]. Empty when unsupported.
std::vector<Pattern> sample_in_cylinder(const AuditCase& c, int max_n, int samples, std::uint64_t seed) {
  const Shape window = lrn_window(c.w.shape(), max_n);
  std::vector<Pattern> out;
  switch (c.measure.kind()) {
    case EquilibriumMeasure::Kind::Markov: {
      if (cylinder_measure(c.measure, c.w) <= 0.0) return out;
      std::map<Coord, Symbol> fixed;
      for (std::size_t i = 0; i < c.w.size(); ++i) fixed[c.w.shape()[i].x()] = c.w.values()[i];
      for (int s = 0; s < samples; ++s) {
        RandomStream rng = RandomStream::substream(seed, "lrn:" + c.id, static_cast<std::uint64_t>(s));
        const Coord lo = window.lower().x();
        out.emplace_back(window, sample_conditioned(c.measure.chain(), lo, window.size(), fixed, rng));
      }
      break;
    }
    case EquilibriumMeasure::Kind::PointMass: {
      const Pattern u = c.measure.point().restrict(window);
      if (u.restrict(c.w.shape()) == c.w) out.push_back(u);
      break;
    }
    case EquilibriumMeasure::Kind::Product:
      break;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

bool AuditReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& ch) { return ch.pass; });
}

void AuditReport::add(std::string name, double lhs, double rhs, double tolerance, std::string prov) {
  Check ch;
  ch.name = std::move(name);
  ch.lhs = lhs;
  ch.rhs = rhs;
  ch.slack = rhs - lhs;
  ch.pass = lhs <= rhs + tolerance;
  ch.provenance = std::move(prov);
  checks.push_back(std::move(ch));
}

AuditCase make_case(std::string id, const Subshift& x, Potential phi, Pattern v, Pattern w, EquilibriumMeasure mu,
                    int max_radius) {
  ExtenderOracle oracle(x);
  ExtenderReport rep = oracle.compare(v, w, max_radius);
  return AuditCase{std::move(id), x, std::move(phi), std::move(v), std::move(w), std::move(rep), std::move(mu)};
}

AuditReport audit_theorem1(const AuditCase& c, const AuditTolerances& tol) {
  require_contained(c);
  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();
  const Bracket sup = sup_cocycle_over_cylinder(c.potential, c.subshift, c.v, c.w);
  const double lhs = cylinder_measure(c.measure, c.v);
  const double rhs = cylinder_measure(c.measure, c.w) * safe_exp(sup.upper);
  const bool exact = sup.lower == sup.upper;
  rep.add("theorem1", lhs, rhs, tol.theorem,
          provenance(c, fmt::format("sup_cocycle={}[{:.12g},{:.12g}]", exact ? "exact" : "bracket", sup.lower,
                                    sup.upper)));
  return rep;
}

AuditReport audit_corollary_lc(const AuditCase& c, const AuditTolerances& tol) {
  require_contained(c);
  const auto* lc = std::get_if<LocallyConstantPotential>(&c.potential);
  if (!lc) throw CaseRejected("corollary audit needs a locally constant potential");
  const Shape& f = c.v.shape();
  const Shape& h = lc->window();
  const Shape h_sym = set_union(h, negate(h));

  std::vector<Element> boundary;
  for (const auto& e : f) {
    bool near = std::any_of(h_sym.begin(), h_sym.end(), [&](const Element& d) { return !f.contains(e + d); });
    if (near) boundary.push_back(e);
  }
  for (const auto& e : boundary)
    if (c.v.at(e) != c.w.at(e))
      throw CaseRejected(fmt::format("case {}: v and w disagree at boundary cell {}", c.id, to_string(e)));

  const Shape interior = right_interior(f, h);
  double sum_v = 0.0, sum_w = 0.0;
  for (const auto& g : interior) {
    sum_v += lc->at(c.v, g);
    sum_w += lc->at(c.w, g);
  }
  const double exponent = sum_v - sum_w;

  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();
  const double mv = cylinder_measure(c.measure, c.v);
  const double mw = cylinder_measure(c.measure, c.w);
  rep.add("corollary_lc", mv, mw * std::exp(exponent), tol.theorem,
          provenance(c, fmt::format("interior_sum={:.12g}", exponent)));

  const Bracket sup = sup_cocycle_over_cylinder(c.potential, c.subshift, c.v, c.w);
  rep.add("corollary_matches_sup", std::abs(sup.upper - exponent), 0.0, tol.theorem,
          provenance(c, fmt::format("sup_cocycle={:.12g}", sup.upper)));

  if (c.extender.relation == ExtenderRelation::Equal) {
    const double lhs = mv / std::exp(sum_v);
    const double rhs = mw / std::exp(sum_w);
    rep.add("corollary_equality", std::abs(lhs - rhs), 0.0, tol.theorem,
            provenance(c, fmt::format("normalized v={:.12g} w={:.12g}", lhs, rhs)));
  }
  return rep;
}

AuditReport audit_mme(const AuditCase& c, const AuditTolerances& tol) {
  require_contained(c);
  const auto* lc = std::get_if<LocallyConstantPotential>(&c.potential);
  if (!lc || lc->sup_norm() != 0.0) throw CaseRejected("maximal-entropy audit needs the zero potential");
  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();
  rep.add("mme", cylinder_measure(c.measure, c.v), cylinder_measure(c.measure, c.w), tol.mme, provenance(c, "phi=0"));
  return rep;
}

std::vector<double> lrn_ratios(const AuditCase& c, const Pattern& u, int max_n) {
  const Pattern swapped = u.overlay(c.v);
  if (!in_language(c.subshift, swapped)) return {};
  std::vector<double> out;
  for (int n = 1; n <= max_n; ++n) {
    const Shape fn = lrn_window(c.v.shape(), n);
    const double den = cylinder_measure(c.measure, u.restrict(fn));
    if (den <= 0.0) return {};
    out.push_back(cylinder_measure(c.measure, swapped.restrict(fn)) / den);
  }
  return out;
}

AuditReport audit_lrn(const AuditCase& c, const LrnOptions& opts, const AuditTolerances& tol) {
  require_contained(c);
  if (opts.max_n < 3) throw DomainError("ratio audit needs max_n >= 3");
  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();

  const Shape top = lrn_window(c.v.shape(), opts.max_n);
  std::vector<Pattern> us = sample_in_cylinder(c, opts.max_n, opts.samples, opts.seed);
  for (const auto& p : opts.points) {
    if (p.restrict(c.w.shape()) != c.w) {
      ++rep.skipped;
      continue;
    }
    if (swap_map(c.subshift, c.v, c.w, p) == p) {
      ++rep.skipped;
      continue;
    }
    us.push_back(p.restrict(top));
  }

  double worst_excess = -kInf;
  double worst_cauchy = 0.0;
  int failures = 0;
  int audited = 0;
  std::map<std::pair<Pattern, Pattern>, double> bound_cache;
  for (const auto& u : us) {
    const auto r = lrn_ratios(c, u, opts.max_n);
    if (r.empty()) {
      ++rep.skipped;
      continue;
    }
    ++audited;
    const Pattern swapped = u.overlay(c.v);
    bool ok = true;
    for (int n = 1; n <= opts.max_n; ++n) {
      const Shape fn = lrn_window(c.v.shape(), n);
      const Pattern vn = swapped.restrict(fn);
      const Pattern wn = u.restrict(fn);
      auto key = std::make_pair(vn, wn);
      auto it = bound_cache.find(key);
      if (it == bound_cache.end()) it = bound_cache.emplace(key, safe_exp(exponent_upper(c, vn, wn))).first;
      const double excess = r[static_cast<std::size_t>(n - 1)] - it->second;
      worst_excess = std::max(worst_excess, excess);
      if (excess > tol.theorem) ok = false;
    }
    const auto m = r.size();
    const double gap = std::max(std::abs(r[m - 1] - r[m - 2]), std::abs(r[m - 2] - r[m - 3]));
    worst_cauchy = std::max(worst_cauchy, gap);
    if (gap > tol.stabilization) ok = false;
    if (!ok) ++failures;
  }
  const std::string prov = provenance(c, fmt::format("points={};skipped={};statistical", audited, rep.skipped));
  if (audited > 0) {
    rep.add("lrn_bound", worst_excess, 0.0, tol.theorem, prov);
    rep.add("lrn_stabilization", worst_cauchy, tol.stabilization, 0.0, prov);
  }
  rep.add("lrn_failures", failures, 0.0, 0.0, prov);
  return rep;
}

AuditReport audit_conformal_equality(const AuditCase& c, const LrnOptions& opts, const AuditTolerances& tol) {
  if (c.extender.relation != ExtenderRelation::Equal)
    throw CaseRejected(fmt::format("case {}: equality of extender sets is not certified ({})", c.id,
                                   c.extender.stamp()));
  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();
  const View view = view_of(c.potential);
  const Shape& f = c.v.shape();
  const Shape terms = minkowski_sum(f, negate(view.lc->window()));
  const Shape fn = lrn_window(f, opts.max_n);
  if (!minkowski_sum(terms, view.lc->window()).is_subset_of(fn))
    throw DomainError("window too small for the potential; increase max_n");

  double worst = -kInf;
  int audited = 0;
  for (const auto& u : sample_in_cylinder(c, opts.max_n, opts.samples, opts.seed)) {
    const Pattern swapped = u.overlay(c.v);
    if (!in_language(c.subshift, swapped)) {
      ++rep.skipped;
      continue;
    }
    ++audited;
    const double r = cylinder_measure(c.measure, swapped) / cylinder_measure(c.measure, u);
    const double upper = safe_exp(sup_cocycle_over_cylinder(c.potential, c.subshift, swapped, u).upper);
    const double lower = safe_exp(-sup_cocycle_over_cylinder(c.potential, c.subshift, u, swapped).upper);
    const double psi = pattern_sum_difference(*view.lc, terms, swapped, u);
    const double width = upper - lower;
    worst = std::max({worst, lower - r, r - upper, std::abs(r - std::exp(psi)) - width});
  }
  const std::string prov = provenance(c, fmt::format("points={};n={}", audited, opts.max_n));
  if (audited > 0) rep.add("conformal_equality", worst, 0.0, tol.theorem, prov);
  return rep;
}

AuditReport audit_obs_thm3(const AuditCase& c, int margin, const AuditTolerances& tol) {
  require_contained(c);
  AuditReport rep;
  rep.case_id = c.id;
  rep.extender_stamp = c.extender.stamp();
  const View view = view_of(c.potential);
  const Shape& f = c.v.shape();
  const Shape terms = minkowski_sum(f, negate(view.lc->window()));
  const Shape reach = set_union(f, minkowski_sum(terms, view.lc->window()));
  int radius = std::max(margin, 1);
  while (!reach.is_subset_of(minkowski_sum(f, symmetric_box(radius, f.dim())))) ++radius;
  const Shape fn = minkowski_sum(f, symmetric_box(radius, f.dim()));

  double mass_v = 0.0;
  double quad = 0.0;
  const double err = static_cast<double>(f.size()) * view.cell_error;
  for (const auto& up : cylinder_patterns(c.subshift, c.v, fn)) {
    const Pattern u = up.overlay(c.w);
    mass_v += cylinder_measure(c.measure, up);
    if (!in_language(c.subshift, u)) {
      ++rep.skipped;
      continue;
    }
    quad += cylinder_measure(c.measure, u) * std::exp(pattern_sum_difference(*view.lc, terms, up, u) + err);
  }
  const double mv = cylinder_measure(c.measure, c.v);
  const double mw = cylinder_measure(c.measure, c.w);
  const Bracket sup = sup_cocycle_over_cylinder(c.potential, c.subshift, c.v, c.w);
  const std::string prov = provenance(c, fmt::format("window={}", to_string(fn)));
  rep.add("obs_mass", std::abs(mass_v - mv), 0.0, tol.quadrature, prov);
  rep.add("obs_quadrature", mv, quad, tol.theorem, prov);
  rep.add("obs_vs_theorem1", quad, mw * safe_exp(sup.upper), tol.quadrature, prov);
  return rep;
}

// ---------------------------------------------------------------------------

double stirling_gap(double a, double b, double c) {
  if (!(c > 0.0 && c < std::min(a, b))) throw DomainError(fmt::format("stirling gap needs 0 < c < min(a, b), c={}", c));
  return -a * std::log1p(-c / a) + b * std::log1p(-c / b) + c * std::log((a - c) / (b - c));
}

double stirling_gap(const Rational& a, const Rational& b, const Rational& c) {
  if (!(c > Rational(0) && c < std::min(a, b)))
    throw DomainError("stirling gap needs 0 < c < min(a, b), c=" + c.str());
  return stirling_gap(a.value(), b.value(), c.value());
}

namespace {

double log_binomial(std::uint64_t n, std::uint64_t k) {
  mpz_t r;
  mpz_init(r);
  mpz_bin_uiui(r, n, k);
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, r);
  mpz_clear(r);
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

std::uint64_t scaled_integer(const Rational& r, std::int64_t n) {
  const Rational s = r * Rational(n);
  if (s.den() != 1 || s.num() < 0)
    throw DomainError(fmt::format("{} * {} is not a nonnegative integer", r.str(), n));
  return static_cast<std::uint64_t>(s.num());
}

}  // namespace

double binomial_gap(const Rational& a, const Rational& b, const Rational& c, std::int64_t n) {
  if (n < 1) throw DomainError("binomial gap needs n >= 1");
  const auto an = scaled_integer(a, n), bn = scaled_integer(b, n), cn = scaled_integer(c, n);
  if (cn > an || cn > bn) throw DomainError("binomial gap needs c <= min(a, b)");
  return (log_binomial(an, cn) - log_binomial(bn, cn)) / static_cast<double>(n);
}

double stirling_threshold(const Rational& a, const Rational& b, const Rational& d, int grid) {
  if (grid < 2) throw DomainError("grid must have at least 2 intervals");
  const Rational step = std::min(a, b) / Rational(grid);
  double best = 0.0;
  for (int k = 1; k < grid; ++k) {
    const Rational c = step * Rational(k);
    if (!(stirling_gap(a, b, c) > c.value() * d.value())) break;
    best = c.value();
  }
  return best;
}

AuditReport audit_stirling(const Rational& a, const Rational& b, const Rational& d, const StirlingOptions& opts) {
  if (!(a > Rational(0) && b > Rational(0))) throw DomainError("stirling audit needs positive a and b");
  const double slope0 = std::log(a.value() / b.value());
  if (!(slope0 > d.value()))
    throw DomainError(fmt::format("hypothesis log(a/b) > D fails: log(a/b)={:.12g}, D={}", slope0, d.str()));

  AuditReport rep;
  rep.case_id = fmt::format("stirling(a={},b={},D={})", a.str(), b.str(), d.str());
  rep.extender_stamp = "n/a";
  const Rational step = std::min(a, b) / Rational(opts.grid);
  const double c_star = stirling_threshold(a, b, d, opts.grid);
  const double strict = -std::numeric_limits<double>::denorm_min();

  const Rational c1 = step;
  rep.add(fmt::format("gap_exceeds_cD@c={}", c1.str()), c1.value() * d.value(), stirling_gap(a, b, c1), strict,
          "closed_form");
  if (c_star > 0.0) {
    const Rational cs = step * Rational(static_cast<std::int64_t>(std::llround(c_star / step.value())));
    rep.add(fmt::format("gap_exceeds_cD@c*={}", cs.str()), cs.value() * d.value(), stirling_gap(a, b, cs), strict,
            fmt::format("closed_form;grid={}", opts.grid));
  }

  std::vector<Rational> cs;
  for (int k = 1; k < opts.grid; ++k) cs.push_back(step * Rational(k));
  for (const auto& extra : opts.extra_c)
    if (extra > Rational(0) && extra < std::min(a, b)) cs.push_back(extra);
  for (auto n : opts.binomial_n) {
    for (const auto& c : cs) {
      const Rational cn = c * Rational(n);
      if (cn.den() != 1 || (a * Rational(n)).den() != 1 || (b * Rational(n)).den() != 1) continue;
      const double f = stirling_gap(a, b, c);
      const double g = binomial_gap(a, b, c, n);
      rep.add(fmt::format("binomial@n={},c={}", n, c.str()), std::abs(g - f), opts.binomial_tolerance, 0.0,
              fmt::format("gmp_binomial;value={:.10g}", g));
    }
  }

  const double h = opts.slope_step;
  const double slope = stirling_gap(a.value(), b.value(), h) / h;
  rep.add("slope_at_zero", std::abs(slope - slope0), opts.slope_tolerance, 0.0,
          fmt::format("finite_difference;h={:g};slope={:.10g}", h, slope));
  return rep;
}

}  // namespace thermo
