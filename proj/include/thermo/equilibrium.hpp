#pragma once

// Pressure and equilibrium measures: the transfer-operator pipeline for 1D
// SFTs, finite-window partition sums, a randomized variational lower bound,
// Shannon-McMillan-Breiman sampling and exact conditioned sampling.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/potential.hpp"
#include "thermo/subshift.hpp"

namespace thermo {

/// Deterministic random stream. Substreams are derived from a root seed, a
/// name and an index, so results do not depend on evaluation order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  static RandomStream substream(std::uint64_t seed, std::string_view name, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Index drawn with probability proportional to weights.
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
};

/// Stationary Markov chain on words of length `order`. Transition i -> j
/// appends one symbol; transition[i][j] is nonzero only for such pairs.
struct MarkovChain {
  int alphabet_size = 2;
  int order = 1;
  std::vector<std::uint64_t> states;  // sorted word codes
  std::vector<double> stationary;
  std::vector<std::vector<double>> transition;

  std::optional<std::size_t> index_of(std::uint64_t code) const;
  /// Index of the state reached from state i by appending a, if present.
  std::optional<std::size_t> next(std::size_t i, Symbol a) const;
  double step(std::size_t i, Symbol a) const;
  std::string state_word(std::size_t i) const;

  friend bool operator==(const MarkovChain&, const MarkovChain&) = default;
};

class EquilibriumMeasure {
 public:
  enum class Kind { Markov, PointMass, Product };

  static EquilibriumMeasure markov(MarkovChain chain, double pressure, double entropy, double integral);
  static EquilibriumMeasure point_mass(PointApprox point, double integral = 0.0);
  /// Product over the product alphabet; a symbol is the mixed-radix number
  /// of its factor symbols, first factor most significant.
  static EquilibriumMeasure product(std::vector<EquilibriumMeasure> factors);

  Kind kind() const { return kind_; }
  double pressure() const { return pressure_; }
  double entropy() const { return entropy_; }
  double integral() const { return integral_; }
  int alphabet_size() const;

  const MarkovChain& chain() const;
  const PointApprox& point() const;
  const std::vector<EquilibriumMeasure>& factors() const { return factors_; }

 private:
  Kind kind_ = Kind::PointMass;
  double pressure_ = 0.0;
  double entropy_ = 0.0;
  double integral_ = 0.0;
  std::optional<MarkovChain> chain_;
  std::optional<PointApprox> point_;
  std::vector<EquilibriumMeasure> factors_;
};

std::string to_string(EquilibriumMeasure::Kind k);

enum class PressureMethod { TransferExact, PartitionSum, VariationalLowerBound, SMBEstimate };
std::string to_string(PressureMethod m);

struct PressureEstimate {
  double value = 0.0;
  double error = 0.0;  // half-width of the bracket (SV truncation)
  Shape window;
  PressureMethod method = PressureMethod::TransferExact;
};

/// Perron data of one strongly connected class of the transfer graph.
struct ClassReport {
  std::vector<std::uint64_t> states;
  double log_lambda = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct TransferResult {
  PressureEstimate pressure;
  EquilibriumMeasure measure;
  std::vector<ClassReport> classes;
  std::vector<std::size_t> maximizing;  // indices into classes
};

/// Power iteration settings for the Perron eigenproblem.
struct PerronOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
};

TransferResult transfer_pressure(const Subshift& x, const LocallyConstantPotential& phi,
                                 const PerronOptions& opts = {});

double cylinder_measure(const EquilibriumMeasure& mu, const Pattern& w);

PressureEstimate partition_sum_pressure(const Subshift& x, const Potential& phi, const Shape& fn, int level = 0);

struct ScanResult {
  PressureEstimate best;
  std::vector<double> scores;  // one per candidate, in generation order
};

/// Scores h + integral for seeded random Markov measures on the maximizing
/// class, starting from the equilibrium transition matrix.
ScanResult variational_scan(const Subshift& x, const LocallyConstantPotential& phi, int candidates,
                            std::uint64_t seed);

/// Monte-Carlo average of (phi_{[0,n)}(x) - log mu[x_{[0,n)}]) / n.
double smb_estimate(const EquilibriumMeasure& mu, const Potential& phi, int n, int samples, std::uint64_t seed);

/// Samples the chain on [lo, lo + len) conditioned on the fixed cells.
/// Throws DomainError when the conditioning event has probability zero.
std::vector<Symbol> sample_conditioned(const MarkovChain& chain, Coord lo, std::size_t len,
                                       const std::map<Coord, Symbol>& fixed, RandomStream& rng);

/// Largest |mu(w | eta) - Gibbs prediction| over legal w on F and legal eta
/// on the margin of radius `margin`.
double gibbs_conditional_deviation(const Subshift& x, const LocallyConstantPotential& phi,
                                   const EquilibriumMeasure& mu, const Shape& f, int margin);

/// Stationary distribution of an irreducible row-stochastic matrix.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& p);

}  // namespace thermo
