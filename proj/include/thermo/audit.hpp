#pragma once

// Numerical certification of cylinder-measure inequalities for equilibrium
// measures: replaceable-pattern bounds, their locally constant and
// maximal-entropy forms, Radon-Nikodym ratio bounds along growing windows,
// conformal equality, and the binomial-entropy gap function.

#include <cstdint>
#include <string>
#include <vector>

#include "thermo/equilibrium.hpp"
#include "thermo/potential.hpp"
#include "thermo/subshift.hpp"

namespace thermo {

struct AuditCase {
  std::string id;
  Subshift subshift;
  Potential potential;
  Pattern v;
  Pattern w;
  ExtenderReport extender;
  EquilibriumMeasure measure;
};

/// Builds a case and attaches the extender verdict for (v, w).
AuditCase make_case(std::string id, const Subshift& x, Potential phi, Pattern v, Pattern w, EquilibriumMeasure mu,
                    int max_radius = 6);

struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool pass = false;
  std::string provenance;
};

struct AuditReport {
  std::string case_id;
  std::vector<Check> checks;
  std::string extender_stamp;
  int skipped = 0;

  bool passed() const;
  /// Adds a check "lhs <= rhs + tolerance".
  void add(std::string name, double lhs, double rhs, double tolerance, std::string provenance);
};

struct AuditTolerances {
  double theorem = 1e-9;
  double mme = 1e-12;
  double stabilization = 1e-6;
  double quadrature = 1e-6;
};

/// mu[v] <= mu[w] * exp(C), C the sup over [v] of the swap cocycle.
AuditReport audit_theorem1(const AuditCase& c, const AuditTolerances& tol = {});

/// Locally constant form: the exponent is the sum over the right H-interior
/// of F, computed from v and w alone. H is the potential's window.
AuditReport audit_corollary_lc(const AuditCase& c, const AuditTolerances& tol = {});

/// phi = 0: mu[v] <= mu[w].
AuditReport audit_mme(const AuditCase& c, const AuditTolerances& tol = {});

struct LrnOptions {
  int max_n = 12;
  int samples = 100;
  std::uint64_t seed = 1;
  /// Extra points audited besides the sampled ones.
  std::vector<PointApprox> points;
};

/// Ratios mu[v_n] / mu[w_n] for x in [w] along F_n = [a - n, b + n].
AuditReport audit_lrn(const AuditCase& c, const LrnOptions& opts = {}, const AuditTolerances& tol = {});

/// Two-sided check at F_{max_n} when the extender sets are equal.
AuditReport audit_conformal_equality(const AuditCase& c, const LrnOptions& opts = {}, const AuditTolerances& tol = {});

/// r_n = mu[xi(u)|F_n] / mu[u|F_n] for n = 1..max_n, where u is a sample on
/// F_{max_n} lying in [w]. Empty when the swap leaves the language.
std::vector<double> lrn_ratios(const AuditCase& c, const Pattern& u, int max_n);

/// Integrates the ratio bound over the swapped cylinders on a window.
AuditReport audit_obs_thm3(const AuditCase& c, int margin = 0, const AuditTolerances& tol = {});

/// f(c) = a log(a/(a-c)) + b log((b-c)/b) + c log((a-c)/(b-c)).
double stirling_gap(const Rational& a, const Rational& b, const Rational& c);
double stirling_gap(double a, double b, double c);

/// n^{-1} (log C(an, cn) - log C(bn, cn)) with exact binomials.
double binomial_gap(const Rational& a, const Rational& b, const Rational& c, std::int64_t n);

struct StirlingOptions {
  int grid = 10;
  std::vector<std::int64_t> binomial_n{120, 720};
  /// Points checked against the binomial form besides the grid.
  std::vector<Rational> extra_c{Rational(1, 6)};
  double binomial_tolerance = 0.01;
  double slope_step = 1e-7;
  double slope_tolerance = 1e-3;
};

/// Grid scan for f(c) > cD on (0, c*], binomial cross-checks and the slope at 0.
AuditReport audit_stirling(const Rational& a, const Rational& b, const Rational& d, const StirlingOptions& opts = {});

/// Largest grid point c* such that f(c) > cD on every grid point of (0, c*].
double stirling_threshold(const Rational& a, const Rational& b, const Rational& d, int grid);

}  // namespace thermo
