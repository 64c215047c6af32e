#pragma once

// Potentials on subshifts: locally constant tables, summable-variation
// potentials given by approximant sequences, Birkhoff sums and the homoclinic
// cocycle with explicit truncation error.

#include <functional>
#include <variant>
#include <vector>

#include "thermo/subshift.hpp"

namespace thermo {

/// A potential depending only on the coordinates in a finite window H.
/// Table index is the big-endian code of the values on sorted H.
class LocallyConstantPotential {
 public:
  LocallyConstantPotential(Shape window, int alphabet_size, std::vector<double> table);

  static LocallyConstantPotential zero(int dim, int alphabet_size);
  /// phi(x) = values[x_0].
  static LocallyConstantPotential single_site(int dim, std::vector<double> values);
  static LocallyConstantPotential from_function(Shape window, int alphabet_size,
                                                const std::function<double(const Pattern&)>& f);

  const Shape& window() const { return window_; }
  int dim() const { return window_.dim(); }
  int alphabet_size() const { return q_; }
  const std::vector<double>& table() const { return table_; }

  double eval(const Pattern& local) const;
  double eval_code(std::uint64_t code) const { return table_.at(code); }
  /// phi(sigma_g x): reads x at g + H.
  double at(const PointApprox& x, const Element& g) const;
  /// Same, reading from a finite pattern that covers g + H.
  double at(const Pattern& u, const Element& g) const;
  double at(const std::function<Symbol(const Element&)>& read, const Element& g) const;

  double max_value() const;
  double min_value() const;
  double sup_norm() const;

  LocallyConstantPotential plus_constant(double c) const;
  /// phi composed with the shift by g: window moves to g + H.
  LocallyConstantPotential shifted_by(const Element& g) const;

  friend bool operator==(const LocallyConstantPotential&, const LocallyConstantPotential&) = default;

 private:
  Shape window_;
  int q_ = 2;
  std::vector<double> table_;
};

/// A potential on the full shift known through its cylinder-supremum
/// approximants on E_n = [-(r0 + n - 1), r0 + n - 1]^d, n = 1..depth, with
/// Var_{E_n}(phi) <= var_bound(n). Beyond the stored depth the variation
/// bounds continue geometrically with ratio tail_ratio.
class SVPotential {
 public:
  SVPotential(int dim, int alphabet_size, int start_radius, std::vector<LocallyConstantPotential> approximants,
              std::vector<double> var_bounds, double tail_ratio);

  /// Binary Z potential beta*x_0 + sum_{k>=1} 3*4^{-k} x_k, whose
  /// variation on [-n, n] is exactly 4^{-n}.
  static SVPotential geometric(double beta, int depth);
  /// Wraps a locally constant potential with E_1 = [-r0, r0]^d.
  static SVPotential from_locally_constant(const LocallyConstantPotential& phi, int start_radius, int depth);

  int dim() const { return dim_; }
  int alphabet_size() const { return q_; }
  int depth() const { return static_cast<int>(approximants_.size()); }
  int start_radius() const { return start_radius_; }
  double tail_ratio() const { return tail_ratio_; }

  /// E_n, n >= 1.
  Shape exhaustive(int n) const;
  /// |E_{n+1} minus E_n|.
  double shell_size(int n) const;
  const LocallyConstantPotential& approximant(int n) const;
  double var_bound(int n) const;
  /// Upper bound on sum_{k >= n} |E_{k+1} minus E_k| * Var_{E_k}(phi).
  double tail_norm(int n) const;
  /// Upper bound on ||phi_n - phi||_SV.
  double approximant_error(int n) const;
  /// max |phi_1| + Var_{E_1} bound.
  double sup_norm_upper() const;

 private:
  int dim_;
  int q_;
  int start_radius_;
  std::vector<LocallyConstantPotential> approximants_;
  std::vector<double> var_bounds_;
  double tail_ratio_;
};

using Potential = std::variant<LocallyConstantPotential, SVPotential>;

int potential_dim(const Potential& phi);

/// A real number known to lie in [value - error_bound, value + error_bound].
struct CocycleValue {
  double value = 0.0;
  double error_bound = 0.0;

  double lower() const { return value - error_bound; }
  double upper() const { return value + error_bound; }
};

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

/// Var_F(phi) over X: max over legal patterns on F + H agreeing on F.
double variation(const LocallyConstantPotential& phi, const Shape& f, const Subshift& x);

/// Bracket on ||phi||_SV using approximant `up_to` and the tail bound.
Bracket sv_norm(const SVPotential& phi, int up_to);
/// Exact SV norm 2|E_1| * ||phi||_inf of a locally constant potential whose
/// window lies inside E_1 = [-r0, r0]^d.
Bracket sv_norm(const LocallyConstantPotential& phi, int start_radius);

const LocallyConstantPotential& approximant(const SVPotential& phi, int n);

/// sum_{g in F} phi(sigma_g x). SV potentials use approximant `level`
/// (0 means the deepest) and return the bracket midpoint.
CocycleValue birkhoff_sum(const Potential& phi, const Shape& f, const PointApprox& x, int level = 0);

/// psi(x, y) = sum_g phi(sigma_g y) - phi(sigma_g x) for homoclinic legal points.
CocycleValue cocycle(const Potential& phi, const Subshift& x_space, const PointApprox& x, const PointApprox& y,
                     int level = 0);

/// Bracket on sup_{x in [v]} sum_g phi(sigma_g x) - phi(sigma_g xi_{v,w}(x)),
/// by enumerating legal patterns on F + H - H around v.
Bracket sup_cocycle_over_cylinder(const Potential& phi, const Subshift& x_space, const Pattern& v, const Pattern& w,
                                  int level = 0);

/// The finite sum over g in `cells` of phi(sigma_g a) - phi(sigma_g b) where
/// both patterns cover cells + H.
double pattern_sum_difference(const LocallyConstantPotential& phi, const Shape& cells, const Pattern& a,
                              const Pattern& b);

}  // namespace thermo
