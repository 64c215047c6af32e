#pragma once

// Subshift descriptions, finite patterns, languages, occurrences and
// replacements, extender-set comparison and the swap maps that exchange two
// patterns at a fixed window whenever the result stays in the subshift.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/group_window.hpp"

namespace thermo {

using Symbol = std::uint8_t;

/// Ordered list of single-character tokens.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> tokens);
  /// "0", "1", ..., up to n - 1 (n <= 10).
  static Alphabet digits(int n);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(Symbol s) const { return tokens_.at(s); }
  Symbol index_of(char token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<std::string> tokens_;
};

/// A map from a finite shape to symbol indices. Values follow the sorted order
/// of the shape's elements.
class Pattern {
 public:
  Pattern() = default;
  Pattern(Shape shape, std::vector<Symbol> values);

  /// A word of digit symbols on [start, start + len).
  static Pattern word(std::string_view digits, Coord start = 0);
  /// Symbols given as alphabet tokens in the shape's sorted order.
  static Pattern parse(const Alphabet& alphabet, const Shape& shape, std::string_view symbols);

  const Shape& shape() const { return shape_; }
  const std::vector<Symbol>& values() const { return values_; }
  int dim() const { return shape_.dim(); }
  std::size_t size() const { return values_.size(); }

  Symbol at(const Element& e) const;
  std::optional<Symbol> find(const Element& e) const;

  Pattern restrict(const Shape& sub) const;
  Pattern translated(const Element& g) const;
  /// Union of the two patterns; on overlapping cells `over` wins.
  Pattern overlay(const Pattern& over) const;

  std::string str(const Alphabet& alphabet) const;
  /// Digit rendering, valid for alphabets of size <= 10.
  std::string str() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;
  friend std::strong_ordering operator<=>(const Pattern& a, const Pattern& b);

 private:
  Shape shape_;
  std::vector<Symbol> values_;
};

/// Mixed-radix codes for patterns on a fixed shape. The first shape element is
/// the most significant digit, so numeric order is lexicographic order.
class PatternCodec {
 public:
  PatternCodec(Shape shape, int alphabet_size);

  const Shape& shape() const { return shape_; }
  std::uint64_t count() const { return count_; }
  std::uint64_t encode(const Pattern& p) const;
  std::uint64_t encode(const std::vector<Symbol>& values) const;
  Pattern decode(std::uint64_t code) const;
  void decode_into(std::uint64_t code, std::vector<Symbol>& values) const;

 private:
  Shape shape_;
  int q_;
  std::uint64_t count_;
};

class PointApprox;

/// A subshift given by its alphabet, a point predicate and language
/// membership. Only a single named generator (sunny-side-up) is shipped.
struct ExplicitFamily {
  std::string name;
  std::function<bool(const Pattern&)> legal_pattern;
  std::function<bool(const PointApprox&)> legal_point;
  /// Exact extender-set comparison: returns -1, 0, 1 for proper containment
  /// of E(v) in E(w), equality, reverse proper containment, or nullopt when
  /// the sets are incomparable.
  std::function<std::optional<int>(const Pattern& v, const Pattern& w)> compare_extenders;
  /// The ergodic invariant measures, each a point mass on a fixed point.
  std::vector<std::function<PointApprox()>> point_masses;
};

struct TransitionGraph;

enum class SubshiftKind { Full, SFT, Explicit };

class Subshift {
 public:
  static Subshift full(int dim, Alphabet alphabet);
  static Subshift sft(int dim, Alphabet alphabet, std::vector<Pattern> forbidden);
  static Subshift explicit_family(int dim, Alphabet alphabet, std::shared_ptr<const ExplicitFamily> family);

  /// Binary SFT forbidding "11".
  static Subshift golden_mean();
  /// Binary Z^2 SFT forbidding horizontally or vertically adjacent 1s.
  static Subshift hard_square();
  /// Orbit closure of the point with a single 1 in a sea of 0s.
  static Subshift sunny_side_up();

  SubshiftKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Alphabet& alphabet() const { return alphabet_; }
  int alphabet_size() const { return alphabet_.size(); }
  const std::vector<Pattern>& forbidden() const { return forbidden_; }
  const ExplicitFamily* family() const { return family_.get(); }
  std::string name() const;

  bool has_forbidden() const { return !forbidden_.empty(); }
  bool is_1d_sft() const { return dim_ == 1 && kind_ != SubshiftKind::Explicit; }
  /// Present for 1D SFTs and full shifts.
  const TransitionGraph* graph() const { return graph_.get(); }

  /// True iff some forbidden pattern occurs inside p.
  bool contains_forbidden(const Pattern& p) const;

 private:
  Subshift() = default;
  void build_graph();

  SubshiftKind kind_ = SubshiftKind::Full;
  int dim_ = 1;
  Alphabet alphabet_;
  std::vector<Pattern> forbidden_;
  std::shared_ptr<const ExplicitFamily> family_;
  std::shared_ptr<const TransitionGraph> graph_;
};

/// De Bruijn-style graph on locally allowed words of length `memory`; an edge
/// is a locally allowed word of length memory + 1. States are PatternCodec
/// codes on [0, memory).
struct TransitionGraph {
  int memory = 1;
  int q = 2;
  std::uint64_t states = 0;
  std::vector<bool> allowed;       // locally allowed states
  std::vector<bool> edge_allowed;  // indexed by (memory + 1)-word code
  std::vector<bool> essential;     // on some bi-infinite path
  std::vector<bool> infinite_past;
  std::vector<bool> infinite_future;

  std::uint64_t successor(std::uint64_t state, Symbol s) const;
  /// Code of the (memory + 1)-word state.s.
  std::uint64_t edge_code(std::uint64_t state, Symbol s) const { return state * static_cast<std::uint64_t>(q) + s; }
  bool has_edge(std::uint64_t from, Symbol s) const { return edge_allowed[edge_code(from, s)]; }
};

// ---------------------------------------------------------------------------
// Languages

/// How far a language verdict can be trusted.
enum class Admissibility {
  Exact,         // 1D SFT graph, explicit predicate, or full shift
  MarginStable,  // 2D: unchanged between the last two margin radii
  MarginCap      // 2D: margin radius hit the cap while still shrinking
};

struct LanguageOptions {
  int max_margin = 3;  // 2D margin radius cap
};

struct Language {
  Shape shape;
  std::vector<Pattern> patterns;  // lexicographic
  Admissibility admissibility = Admissibility::Exact;
  int margin = 0;
};

/// Current scale cap on enumerations (env THERMO_SCALE_CAP, default 2^22).
std::uint64_t scale_cap();
void set_scale_cap(std::uint64_t cap);

Language language(const Subshift& x, const Shape& f, const LanguageOptions& opts = {});
/// Codes (PatternCodec on f) of the language, sorted.
std::vector<std::uint64_t> language_codes(const Subshift& x, const Shape& f, const LanguageOptions& opts = {},
                                          Admissibility* admissibility = nullptr, int* margin = nullptr);
bool in_language(const Subshift& x, const Pattern& p, const LanguageOptions& opts = {});

/// All u in L_{F_n}(X) with u restricted to shape(w) equal to w.
std::vector<Pattern> cylinder_patterns(const Subshift& x, const Pattern& w, const Shape& fn,
                                       const LanguageOptions& opts = {});

// ---------------------------------------------------------------------------
// Occurrences and replacements

/// Offsets g with g + shape(v) inside shape(u) and u matching v there. Sorted.
std::vector<Element> occurrences(const Pattern& v, const Pattern& u);

/// Writes w over every s + shape(v), s in S. S must be a left shape(v)-sparse
/// subset of occurrences(v, u).
Pattern replace(const Pattern& u, const Pattern& v, const Pattern& w, std::span<const Element> s);

// ---------------------------------------------------------------------------
// Extender sets

enum class ExtenderMethod { Exact1D, FamilyExact, RadiusBounded };
enum class ExtenderRelation { ContainedUpTo, ProperContainment, Equal, NotContained };

std::string to_string(ExtenderMethod m);
std::string to_string(ExtenderRelation r);

struct ExtenderReport {
  ExtenderRelation relation = ExtenderRelation::ContainedUpTo;
  ExtenderMethod method = ExtenderMethod::RadiusBounded;
  /// Containment radius for ContainedUpTo, witness radius for NotContained.
  int radius = 0;
  /// For NotContained: eta on the annulus with v.eta legal and w.eta illegal.
  std::optional<Pattern> witness;

  bool contained() const { return relation != ExtenderRelation::NotContained; }
  bool exact() const { return method != ExtenderMethod::RadiusBounded; }
  std::string stamp() const;
};

/// Extender comparison with per-shape caches. Not thread-safe; use one per thread.
class ExtenderOracle {
 public:
  explicit ExtenderOracle(const Subshift& x);
  ~ExtenderOracle();
  ExtenderOracle(ExtenderOracle&&) noexcept;
  ExtenderOracle& operator=(ExtenderOracle&&) noexcept;

  /// Exact when the subshift admits it, radius-bounded otherwise.
  ExtenderReport compare(const Pattern& v, const Pattern& w, int max_radius);
  /// Exact verdict; throws DomainError when no exact method applies.
  ExtenderReport compare_exact(const Pattern& v, const Pattern& w);
  ExtenderReport compare_bounded(const Pattern& v, const Pattern& w, int max_radius);

  bool has_exact_method() const;

 private:
  struct Annulus;
  const Annulus& annulus(const Shape& f, int radius);
  std::vector<std::uint64_t> exact_contexts(const Pattern& p);

  Subshift x_;
  std::vector<std::unique_ptr<Annulus>> annuli_;
};

ExtenderReport extender_compare(const Subshift& x, const Pattern& v, const Pattern& w, int max_radius);

/// Every cell of the annulus (F + [-r, r]^d) minus F, with a witness order in
/// which the smallest cell is the least significant digit.
Shape extender_annulus(const Shape& f, int radius);

// ---------------------------------------------------------------------------
// Points

/// A periodic configuration: value at g is tile[g mod period].
struct Background {
  Element period;
  Pattern tile;  // on [0, period)

  static Background constant(int dim, Symbol s);
  Symbol at(const Element& g) const;
  friend bool operator==(const Background&, const Background&) = default;
};

/// A core pattern over a periodic background.
class PointApprox {
 public:
  PointApprox(Pattern core, Background background);
  static PointApprox constant(int dim, Symbol s);

  const Pattern& core() const { return core_; }
  const Background& background() const { return background_; }
  int dim() const { return core_.dim(); }

  Symbol at(const Element& g) const;
  Pattern restrict(const Shape& f) const;
  /// Writes p over the point.
  PointApprox overwritten(const Pattern& p) const;
  /// Drops core cells that equal the background.
  PointApprox normalized() const;
  /// Cells where the two points differ (points must share a background).
  Shape difference_set(const PointApprox& other) const;
  bool agrees_on(const PointApprox& other, const Shape& window) const;

  friend bool operator==(const PointApprox& a, const PointApprox& b);

 private:
  Pattern core_;
  Background background_;
};

bool is_legal_point(const Subshift& x, const PointApprox& p);

/// Exchanges v and w on their common shape when the result is a point of X.
PointApprox swap_map(const Subshift& x, const Pattern& v, const Pattern& w, const PointApprox& p);

}  // namespace thermo
