#pragma once

// Spec files: JSON documents with a "schema" field describing a subshift, a
// potential, audit cases and run settings. Also JSON round trips for shapes,
// patterns and measures.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "thermo/audit.hpp"
#include "thermo/equilibrium.hpp"
#include "thermo/error.hpp"
#include "thermo/potential.hpp"
#include "thermo/subshift.hpp"

namespace thermo {

inline constexpr int kSpecSchema = 1;

/// Parse or validation failure. `where` is "line:col" or a field path.
class SpecError : public Error {
 public:
  SpecError(const std::string& where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct CaseSpec {
  std::string id;
  Pattern v;
  Pattern w;
};

struct TilingSpec {
  Shape window;
  Coord block = 1;
  std::optional<Shape> sparse_against;
  Rational epsilon{1, 4};
};

struct StirlingSpec {
  Rational a{2};
  Rational b{1};
  Rational d{3, 5};
  StirlingOptions options;
};

struct ToolSpec {
  std::string name;
  Subshift subshift = Subshift::golden_mean();
  Potential potential = LocallyConstantPotential::zero(1, 2);
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> scale_cap;
  int max_radius = 6;

  std::vector<Shape> shapes;
  std::vector<CaseSpec> cases;
  /// When positive, every pair of words of equal length <= this is added.
  int pair_scan = 0;

  std::vector<Coord> pressure_windows{8};
  int variational_candidates = 0;
  int smb_length = 0;
  int smb_samples = 0;

  int lrn_max_n = 0;
  int lrn_samples = 0;
  AuditTolerances tolerances;

  std::optional<TilingSpec> tiling;
  std::optional<StirlingSpec> stirling;
  std::optional<EquilibriumMeasure> measure;
};

ToolSpec parse_spec(const std::string& text);
ToolSpec load_spec(const std::filesystem::path& path);

/// Cells as plain integers on Z and [x, y] pairs on Z^2.
nlohmann::json shape_to_json(const Shape& s);
Shape shape_from_json(const nlohmann::json& j, int dim);

/// {"cells": ..., "symbols": "..."}, symbols as alphabet tokens.
nlohmann::json pattern_to_json(const Pattern& p, const Alphabet& alphabet);
/// {"cells": ..., "values": [...]}, raw symbol indices.
nlohmann::json pattern_to_json(const Pattern& p);
/// Accepts either form.
Pattern pattern_from_json(const nlohmann::json& j, const Alphabet& alphabet, int dim);

nlohmann::json potential_to_json(const Potential& phi);
Potential potential_from_json(const nlohmann::json& j, int dim, int alphabet_size);

nlohmann::json measure_to_json(const EquilibriumMeasure& mu);
EquilibriumMeasure measure_from_json(const nlohmann::json& j);

bool operator==(const EquilibriumMeasure& a, const EquilibriumMeasure& b);

/// The measure audits run against: the supplied one, else the transfer
/// equilibrium (deepest approximant for SV potentials), else the family's
/// point mass. nullopt when none applies.
std::optional<EquilibriumMeasure> default_measure(const ToolSpec& spec);

}  // namespace thermo
