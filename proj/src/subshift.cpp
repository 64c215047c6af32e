#include "thermo/subshift.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

constexpr std::uint64_t kCodeSpaceLimit = std::uint64_t{1} << 62;

Coord floor_mod(Coord a, Coord m) {
  Coord r = a % m;
  return r < 0 ? r + m : r;
}

std::uint64_t checked_power(std::uint64_t base, std::size_t exp, const char* what) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > kCodeSpaceLimit / base)
      throw ScaleCapError(fmt::format("{}: {}^{} exceeds the code space", what, base, exp),
                          static_cast<double>(base) * static_cast<double>(exp), static_cast<double>(kCodeSpaceLimit));
    out *= base;
  }
  return out;
}

std::uint64_t initial_scale_cap() {
  if (const char* env = std::getenv("THERMO_SCALE_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::uint64_t{1} << 22;
}

std::atomic<std::uint64_t>& cap_storage() {
  static std::atomic<std::uint64_t> cap{initial_scale_cap()};
  return cap;
}

void check_cap(std::uint64_t count, const std::string& what) {
  const auto cap = scale_cap();
  if (count > cap)
    throw ScaleCapError(fmt::format("{}: {} patterns exceed scale cap {}", what, count, cap), static_cast<double>(count),
                        static_cast<double>(cap));
}

// A forbidden placement that touches a given cell of a finite region.
struct Placement {
  std::vector<std::uint32_t> cells;
  std::vector<Symbol> values;
};

// Finite region with every forbidden placement fully inside it, indexed by the
// cells it touches.
class Region {
 public:
  Region(const Subshift& x, Shape shape) : shape_(std::move(shape)), touching_(shape_.size()) {
    for (const auto& f : x.forbidden()) {
      for (std::size_t i = 0; i < shape_.size(); ++i) {
        for (const auto& e : f.shape()) {
          const Element g = shape_[i] - e;
          Placement pl;
          bool inside = true;
          for (std::size_t j = 0; j < f.size() && inside; ++j) {
            auto idx = shape_.index_of(g + f.shape()[j]);
            if (!idx) inside = false;
            else pl.cells.push_back(static_cast<std::uint32_t>(*idx));
          }
          if (inside) {
            pl.values = f.values();
            touching_[i].push_back(std::move(pl));
          }
        }
      }
    }
  }

  const Shape& shape() const { return shape_; }

  // True iff assigning cell i completes some forbidden placement.
  bool violates(std::size_t i, const std::vector<int>& values) const {
    for (const auto& pl : touching_[i]) {
      bool match = true;
      for (std::size_t j = 0; j < pl.cells.size() && match; ++j) {
        match = values[pl.cells[j]] == static_cast<int>(pl.values[j]);
      }
      if (match) return true;
    }
    return false;
  }

  // Depth-first fill of the free cells (value -1) in sorted order. The visitor
  // returns false to stop. Returns false iff stopped early.
  template <class Visit>
  bool fill(std::vector<int>& values, int q, Visit&& visit) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] >= 0 && violates(i, values)) return true;
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] < 0) order.push_back(i);
    return fill_from(values, q, order, 0, visit);
  }

 private:
  template <class Visit>
  bool fill_from(std::vector<int>& values, int q, const std::vector<std::size_t>& order, std::size_t k,
                 Visit& visit) const {
    if (k == order.size()) return visit(values);
    const std::size_t cell = order[k];
    for (int a = 0; a < q; ++a) {
      values[cell] = a;
      if (violates(cell, values)) continue;
      if (!fill_from(values, q, order, k + 1, visit)) {
        values[cell] = -1;
        return false;
      }
    }
    values[cell] = -1;
    return true;
  }

  Shape shape_;
  std::vector<std::vector<Placement>> touching_;
};

// Projects region values onto a sub-shape and returns its big-endian code.
std::uint64_t project_code(const std::vector<int>& values, const std::vector<std::size_t>& positions, int q) {
  std::uint64_t code = 0;
  for (auto p : positions) code = code * static_cast<std::uint64_t>(q) + static_cast<std::uint64_t>(values[p]);
  return code;
}

std::vector<std::size_t> positions_in(const Shape& sub, const Shape& region) {
  std::vector<std::size_t> out;
  out.reserve(sub.size());
  for (const auto& e : sub) out.push_back(*region.index_of(e));
  return out;
}

// Enumerates, over the region's sorted cells, all assignments extending the
// fixed values; reports codes of their restriction to `target`.
struct Enumeration {
  std::vector<std::uint64_t> codes;
  Admissibility admissibility = Admissibility::Exact;
  int margin = 0;
};

// 1D SFT: words over the hull of F that label paths in the essential graph.
Enumeration enumerate_1d(const Subshift& x, const Shape& f, const std::vector<int>& fixed_on_f) {
  const TransitionGraph& g = *x.graph();
  const int q = g.q;
  const int m = g.memory;
  const Coord lo = f.lower().x();
  const auto hull_len = static_cast<std::size_t>(f.upper().x() - lo + 1);
  const std::size_t len = std::max<std::size_t>(hull_len, static_cast<std::size_t>(m));

  std::vector<int> fixed(len, -1);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto pos = static_cast<std::size_t>(f[i].x() - lo);
    positions.push_back(pos);
    fixed[pos] = fixed_on_f[i];
  }

  const std::uint64_t states = g.states;
  const auto mu = static_cast<std::size_t>(m);
  auto state_ok_at = [&](std::uint64_t s, std::size_t end) {
    // State s occupies positions [end - m + 1, end].
    std::uint64_t c = s;
    for (std::size_t k = 0; k < mu; ++k) {
      const std::size_t pos = end - k;
      const int sym = static_cast<int>(c % static_cast<std::uint64_t>(q));
      c /= static_cast<std::uint64_t>(q);
      if (fixed[pos] >= 0 && fixed[pos] != sym) return false;
    }
    return true;
  };

  // feasible[pos - (m - 1)][s]: a valid continuation exists from state s ending at pos.
  const std::size_t steps = len - mu + 1;
  std::vector<std::vector<char>> feasible(steps, std::vector<char>(states, 0));
  for (std::uint64_t s = 0; s < states; ++s)
    feasible[steps - 1][s] = g.essential[s] && (fixed[len - 1] < 0 || static_cast<int>(s % q) == fixed[len - 1]);
  for (std::size_t k = steps - 1; k-- > 0;) {
    const std::size_t pos = k + mu - 1;
    for (std::uint64_t s = 0; s < states; ++s) {
      if (!g.essential[s]) continue;
      for (int a = 0; a < q; ++a) {
        if (fixed[pos + 1] >= 0 && fixed[pos + 1] != a) continue;
        if (!g.has_edge(s, static_cast<Symbol>(a))) continue;
        const auto t = g.successor(s, static_cast<Symbol>(a));
        if (feasible[k + 1][t]) {
          feasible[k][s] = 1;
          break;
        }
      }
    }
  }

  Enumeration out;
  std::vector<int> word(len, 0);
  std::uint64_t leaves = 0;
  const std::string what = "language at F=" + to_string(f);

  auto emit = [&]() {
    ++leaves;
    if ((leaves & 0xfff) == 0) check_cap(leaves, what);
    out.codes.push_back(project_code(word, positions, q));
  };

  auto dfs = [&](auto& self, std::uint64_t s, std::size_t k) -> void {
    if (k + 1 == steps) {
      emit();
      return;
    }
    const std::size_t pos = k + mu;
    for (int a = 0; a < q; ++a) {
      if (fixed[pos] >= 0 && fixed[pos] != a) continue;
      if (!g.has_edge(s, static_cast<Symbol>(a))) continue;
      const auto t = g.successor(s, static_cast<Symbol>(a));
      if (!feasible[k + 1][t]) continue;
      word[pos] = a;
      self(self, t, k + 1);
    }
  };

  for (std::uint64_t s = 0; s < states; ++s) {
    if (!feasible[0][s] || !state_ok_at(s, mu - 1)) continue;
    std::uint64_t c = s;
    for (std::size_t k = mu; k-- > 0;) {
      word[k] = static_cast<int>(c % static_cast<std::uint64_t>(q));
      c /= static_cast<std::uint64_t>(q);
    }
    dfs(dfs, s, 0);
  }
  check_cap(leaves, what);
  std::sort(out.codes.begin(), out.codes.end());
  out.codes.erase(std::unique(out.codes.begin(), out.codes.end()), out.codes.end());
  return out;
}

// Explicit family: brute force over the free cells, filtered by the predicate.
Enumeration enumerate_explicit(const Subshift& x, const Shape& f, const std::vector<int>& fixed) {
  const int q = x.alphabet_size();
  std::size_t free_cells = 0;
  for (int v : fixed) free_cells += v < 0 ? 1 : 0;
  const auto total = checked_power(static_cast<std::uint64_t>(q), free_cells, "explicit language");
  check_cap(total, "language at F=" + to_string(f));

  Enumeration out;
  std::vector<Symbol> values(f.size());
  std::vector<std::size_t> free_pos;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (fixed[i] < 0) free_pos.push_back(i);
    else values[i] = static_cast<Symbol>(fixed[i]);
  }
  const PatternCodec codec(f, q);
  for (std::uint64_t c = 0; c < total; ++c) {
    std::uint64_t r = c;
    for (std::size_t k = free_pos.size(); k-- > 0;) {
      values[free_pos[k]] = static_cast<Symbol>(r % static_cast<std::uint64_t>(q));
      r /= static_cast<std::uint64_t>(q);
    }
    if (x.family()->legal_pattern(Pattern(f, values))) out.codes.push_back(codec.encode(values));
  }
  std::sort(out.codes.begin(), out.codes.end());
  return out;
}

bool extends_to(const Subshift& x, const Region& region, const Shape& f, const std::vector<int>& values_on_f) {
  std::vector<int> values(region.shape().size(), -1);
  for (std::size_t i = 0; i < f.size(); ++i) values[*region.shape().index_of(f[i])] = values_on_f[i];
  bool found = false;
  region.fill(values, x.alphabet_size(), [&](const std::vector<int>&) {
    found = true;
    return false;
  });
  return found;
}

// Z^2 SFTs and full shifts: locally admissible patterns, then margin escalation.
Enumeration enumerate_local(const Subshift& x, const Shape& f, const std::vector<int>& fixed,
                            const LanguageOptions& opts) {
  const int q = x.alphabet_size();
  const Region region(x, f);
  std::vector<std::vector<int>> found;
  std::vector<int> values = fixed;
  const std::string what = "language at F=" + to_string(f);
  region.fill(values, q, [&](const std::vector<int>& v) {
    found.push_back(v);
    if ((found.size() & 0xfff) == 0) check_cap(found.size(), what);
    return true;
  });
  check_cap(found.size(), what);

  Enumeration out;
  if (x.has_forbidden()) {
    out.admissibility = Admissibility::MarginCap;
    for (int r = 1; r <= opts.max_margin; ++r) {
      const Region wide(x, minkowski_sum(f, symmetric_box(r, f.dim())));
      std::vector<std::vector<int>> kept;
      for (auto& v : found)
        if (extends_to(x, wide, f, v)) kept.push_back(std::move(v));
      const bool stable = kept.size() == found.size();
      found = std::move(kept);
      out.margin = r;
      if (stable) {
        out.admissibility = Admissibility::MarginStable;
        break;
      }
    }
  }
  std::vector<std::size_t> all(f.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (const auto& v : found) out.codes.push_back(project_code(v, all, q));
  std::sort(out.codes.begin(), out.codes.end());
  return out;
}

Enumeration enumerate(const Subshift& x, const Shape& f, const std::vector<int>& fixed, const LanguageOptions& opts) {
  if (f.empty()) throw DomainError("language of an empty shape");
  if (f.dim() != x.dim())
    throw DimensionError(fmt::format("shape dimension {} vs subshift dimension {}", f.dim(), x.dim()));
  checked_power(static_cast<std::uint64_t>(x.alphabet_size()), f.size(), "pattern codes");
  if (x.kind() == SubshiftKind::Explicit) return enumerate_explicit(x, f, fixed);
  if (x.is_1d_sft()) return enumerate_1d(x, f, fixed);
  return enumerate_local(x, f, fixed, opts);
}

int ones_in(const Pattern& p) {
  return static_cast<int>(std::count(p.values().begin(), p.values().end(), Symbol{1}));
}

std::shared_ptr<const ExplicitFamily> sunny_side_up_family() {
  auto fam = std::make_shared<ExplicitFamily>();
  fam->name = "sunny_side_up";
  fam->legal_pattern = [](const Pattern& p) {
    for (auto s : p.values())
      if (s > 1) return false;
    return ones_in(p) <= 1;
  };
  fam->legal_point = [](const PointApprox& x) {
    const auto& tile = x.background().tile.values();
    if (std::any_of(tile.begin(), tile.end(), [](Symbol s) { return s != 0; })) return false;
    const auto& core = x.core().values();
    if (std::any_of(core.begin(), core.end(), [](Symbol s) { return s > 1; })) return false;
    return ones_in(x.core()) <= 1;
  };
  // Extender sets are nested: illegal -> empty, one 1 -> {all zeros},
  // no 1 -> {at most one 1}.
  fam->compare_extenders = [](const Pattern& v, const Pattern& w) -> std::optional<int> {
    auto rank = [](const Pattern& p) {
      const int k = ones_in(p);
      for (auto s : p.values())
        if (s > 1) return 0;
      return k == 0 ? 2 : (k == 1 ? 1 : 0);
    };
    const int a = rank(v);
    const int b = rank(w);
    return a < b ? -1 : (a == b ? 0 : 1);
  };
  fam->point_masses.push_back([] { return PointApprox::constant(1, 0); });
  return fam;
}

}  // namespace

// ---------------------------------------------------------------------------

Alphabet::Alphabet(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw DomainError("alphabet must be nonempty");
  if (tokens_.size() > 255) throw DomainError("alphabet too large");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].size() != 1) throw DomainError("alphabet tokens must be single characters: '" + tokens_[i] + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (tokens_[i] == tokens_[j]) throw DomainError("duplicate alphabet token '" + tokens_[i] + "'");
  }
}

Alphabet Alphabet::digits(int n) {
  if (n < 1 || n > 10) throw DomainError("digit alphabets have 1 to 10 symbols");
  std::vector<std::string> t;
  for (int i = 0; i < n; ++i) t.push_back(std::string(1, static_cast<char>('0' + i)));
  return Alphabet(std::move(t));
}

Symbol Alphabet::index_of(char token) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (tokens_[i][0] == token) return static_cast<Symbol>(i);
  throw DomainError(fmt::format("unknown symbol '{}'", token));
}

// ---------------------------------------------------------------------------

Pattern::Pattern(Shape shape, std::vector<Symbol> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() != values_.size())
    throw DomainError(fmt::format("pattern has {} cells but {} values", shape_.size(), values_.size()));
}

Pattern Pattern::word(std::string_view digits, Coord start) {
  std::vector<Symbol> v;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') throw DomainError(fmt::format("non-digit symbol '{}'", ch));
    v.push_back(static_cast<Symbol>(ch - '0'));
  }
  return Pattern(Shape::interval(start, start + static_cast<Coord>(digits.size())), std::move(v));
}

Pattern Pattern::parse(const Alphabet& alphabet, const Shape& shape, std::string_view symbols) {
  if (symbols.size() != shape.size())
    throw DomainError(fmt::format("symbol string '{}' has length {}, shape has {} cells", symbols, symbols.size(),
                                  shape.size()));
  std::vector<Symbol> v;
  for (char ch : symbols) v.push_back(alphabet.index_of(ch));
  return Pattern(shape, std::move(v));
}

Symbol Pattern::at(const Element& e) const {
  auto idx = shape_.index_of(e);
  if (!idx) throw DomainError("pattern undefined at " + to_string(e));
  return values_[*idx];
}

std::optional<Symbol> Pattern::find(const Element& e) const {
  auto idx = shape_.index_of(e);
  if (!idx) return std::nullopt;
  return values_[*idx];
}

Pattern Pattern::restrict(const Shape& sub) const {
  std::vector<Symbol> v;
  v.reserve(sub.size());
  for (const auto& e : sub) v.push_back(at(e));
  return Pattern(sub, std::move(v));
}

Pattern Pattern::translated(const Element& g) const { return Pattern(translate_left(shape_, g), values_); }

Pattern Pattern::overlay(const Pattern& over) const {
  const Shape u = set_union(shape_, over.shape_);
  std::vector<Symbol> v;
  v.reserve(u.size());
  for (const auto& e : u) {
    if (auto s = over.find(e)) v.push_back(*s);
    else v.push_back(at(e));
  }
  return Pattern(u, std::move(v));
}

std::string Pattern::str(const Alphabet& alphabet) const {
  std::string out;
  for (auto s : values_) out += alphabet.token(s);
  return out;
}

std::string Pattern::str() const {
  std::string out;
  for (auto s : values_) out += static_cast<char>('0' + s);
  return out;
}

std::strong_ordering operator<=>(const Pattern& a, const Pattern& b) {
  if (auto c = a.shape_ <=> b.shape_; c != 0) return c;
  return std::lexicographical_compare_three_way(a.values_.begin(), a.values_.end(), b.values_.begin(),
                                                b.values_.end());
}

// ---------------------------------------------------------------------------

PatternCodec::PatternCodec(Shape shape, int alphabet_size)
    : shape_(std::move(shape)),
      q_(alphabet_size),
      count_(checked_power(static_cast<std::uint64_t>(alphabet_size), shape_.size(), "pattern codes")) {}

std::uint64_t PatternCodec::encode(const std::vector<Symbol>& values) const {
  std::uint64_t code = 0;
  for (auto s : values) code = code * static_cast<std::uint64_t>(q_) + s;
  return code;
}

std::uint64_t PatternCodec::encode(const Pattern& p) const {
  if (p.shape() != shape_) throw DomainError("pattern shape does not match codec shape");
  return encode(p.values());
}

void PatternCodec::decode_into(std::uint64_t code, std::vector<Symbol>& values) const {
  values.resize(shape_.size());
  for (std::size_t k = values.size(); k-- > 0;) {
    values[k] = static_cast<Symbol>(code % static_cast<std::uint64_t>(q_));
    code /= static_cast<std::uint64_t>(q_);
  }
}

Pattern PatternCodec::decode(std::uint64_t code) const {
  std::vector<Symbol> v;
  decode_into(code, v);
  return Pattern(shape_, std::move(v));
}

// ---------------------------------------------------------------------------

std::uint64_t TransitionGraph::successor(std::uint64_t state, Symbol s) const {
  return (state * static_cast<std::uint64_t>(q) + s) % states;
}

Subshift Subshift::full(int dim, Alphabet alphabet) {
  Subshift x;
  x.kind_ = SubshiftKind::Full;
  x.dim_ = dim;
  x.alphabet_ = std::move(alphabet);
  if (dim != 1 && dim != 2) throw DimensionError(fmt::format("unsupported dimension {}", dim));
  if (dim == 1) x.build_graph();
  return x;
}

Subshift Subshift::sft(int dim, Alphabet alphabet, std::vector<Pattern> forbidden) {
  Subshift x;
  x.kind_ = SubshiftKind::SFT;
  x.dim_ = dim;
  x.alphabet_ = std::move(alphabet);
  if (dim != 1 && dim != 2) throw DimensionError(fmt::format("unsupported dimension {}", dim));
  for (const auto& p : forbidden) {
    if (p.shape().empty()) throw DomainError("forbidden patterns must have nonempty shapes");
    if (p.dim() != dim) throw DimensionError("forbidden pattern dimension does not match the subshift");
    for (auto s : p.values())
      if (s >= x.alphabet_.size()) throw DomainError("forbidden pattern uses a symbol outside the alphabet");
    // Re-base so the lower corner sits at the origin.
    x.forbidden_.push_back(p.translated(-p.shape().lower()));
  }
  std::sort(x.forbidden_.begin(), x.forbidden_.end());
  x.forbidden_.erase(std::unique(x.forbidden_.begin(), x.forbidden_.end()), x.forbidden_.end());
  if (dim == 1) x.build_graph();
  return x;
}

Subshift Subshift::explicit_family(int dim, Alphabet alphabet, std::shared_ptr<const ExplicitFamily> family) {
  if (!family || !family->legal_pattern || !family->legal_point)
    throw DomainError("explicit families need pattern and point predicates");
  Subshift x;
  x.kind_ = SubshiftKind::Explicit;
  x.dim_ = dim;
  x.alphabet_ = std::move(alphabet);
  x.family_ = std::move(family);
  return x;
}

Subshift Subshift::golden_mean() { return sft(1, Alphabet::digits(2), {Pattern::word("11")}); }

Subshift Subshift::hard_square() {
  return sft(2, Alphabet::digits(2),
             {Pattern(Shape(2, {Element::z2(0, 0), Element::z2(1, 0)}), {1, 1}),
              Pattern(Shape(2, {Element::z2(0, 0), Element::z2(0, 1)}), {1, 1})});
}

Subshift Subshift::sunny_side_up() { return explicit_family(1, Alphabet::digits(2), sunny_side_up_family()); }

std::string Subshift::name() const {
  switch (kind_) {
    case SubshiftKind::Full:
      return "full";
    case SubshiftKind::SFT:
      return "sft";
    case SubshiftKind::Explicit:
      return family_->name;
  }
  return "unknown";
}

bool Subshift::contains_forbidden(const Pattern& p) const {
  for (const auto& f : forbidden_) {
    const Element anchor = f.shape()[0];
    for (const auto& cell : p.shape()) {
      const Element g = cell - anchor;
      bool match = true;
      for (std::size_t j = 0; j < f.size() && match; ++j) {
        auto s = p.find(g + f.shape()[j]);
        match = s && *s == f.values()[j];
      }
      if (match) return true;
    }
  }
  return false;
}

void Subshift::build_graph() {
  auto g = std::make_shared<TransitionGraph>();
  int m = 1;
  for (const auto& f : forbidden_) m = std::max<int>(m, static_cast<int>(f.shape().extent().x()));
  g->memory = m;
  g->q = alphabet_size();
  const auto q = static_cast<std::uint64_t>(g->q);
  const std::uint64_t edges = checked_power(q, static_cast<std::size_t>(m) + 1, "transition graph");
  check_cap(edges, "transition graph");
  g->states = edges / q;

  const PatternCodec state_codec(Shape::interval(0, m), g->q);
  const PatternCodec edge_codec(Shape::interval(0, m + 1), g->q);
  g->allowed.assign(g->states, false);
  g->edge_allowed.assign(edges, false);
  for (std::uint64_t s = 0; s < g->states; ++s) g->allowed[s] = !contains_forbidden(state_codec.decode(s));
  for (std::uint64_t e = 0; e < edges; ++e) g->edge_allowed[e] = !contains_forbidden(edge_codec.decode(e));

  auto prune = [&](bool need_in, bool need_out) {
    std::vector<bool> alive = g->allowed;
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<char> has_in(g->states, 0), has_out(g->states, 0);
      for (std::uint64_t s = 0; s < g->states; ++s) {
        if (!alive[s]) continue;
        for (std::uint64_t a = 0; a < q; ++a) {
          if (!g->edge_allowed[s * q + a]) continue;
          const auto t = (s * q + a) % g->states;
          if (!alive[t]) continue;
          has_out[s] = 1;
          has_in[t] = 1;
        }
      }
      for (std::uint64_t s = 0; s < g->states; ++s) {
        if (alive[s] && ((need_in && !has_in[s]) || (need_out && !has_out[s]))) {
          alive[s] = false;
          changed = true;
        }
      }
    }
    return alive;
  };
  g->essential = prune(true, true);
  g->infinite_past = prune(true, false);
  g->infinite_future = prune(false, true);
  graph_ = std::move(g);
}

// ---------------------------------------------------------------------------

std::uint64_t scale_cap() { return cap_storage().load(); }

void set_scale_cap(std::uint64_t cap) {
  if (cap == 0) throw DomainError("scale cap must be positive");
  cap_storage().store(cap);
}

std::vector<std::uint64_t> language_codes(const Subshift& x, const Shape& f, const LanguageOptions& opts,
                                          Admissibility* admissibility, int* margin) {
  auto e = enumerate(x, f, std::vector<int>(f.size(), -1), opts);
  if (admissibility) *admissibility = e.admissibility;
  if (margin) *margin = e.margin;
  return std::move(e.codes);
}

Language language(const Subshift& x, const Shape& f, const LanguageOptions& opts) {
  Language out;
  out.shape = f;
  auto codes = language_codes(x, f, opts, &out.admissibility, &out.margin);
  const PatternCodec codec(f, x.alphabet_size());
  out.patterns.reserve(codes.size());
  for (auto c : codes) out.patterns.push_back(codec.decode(c));
  return out;
}

bool in_language(const Subshift& x, const Pattern& p, const LanguageOptions& opts) {
  for (auto s : p.values())
    if (s >= x.alphabet_size()) return false;
  std::vector<int> fixed(p.values().begin(), p.values().end());
  return !enumerate(x, p.shape(), fixed, opts).codes.empty();
}

std::vector<Pattern> cylinder_patterns(const Subshift& x, const Pattern& w, const Shape& fn,
                                       const LanguageOptions& opts) {
  if (!w.shape().is_subset_of(fn)) throw DomainError("cylinder window must contain the pattern's shape");
  std::vector<int> fixed(fn.size(), -1);
  for (std::size_t i = 0; i < w.size(); ++i) fixed[*fn.index_of(w.shape()[i])] = w.values()[i];
  const auto e = enumerate(x, fn, fixed, opts);
  const PatternCodec codec(fn, x.alphabet_size());
  std::vector<Pattern> out;
  out.reserve(e.codes.size());
  for (auto c : e.codes) out.push_back(codec.decode(c));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Element> occurrences(const Pattern& v, const Pattern& u) {
  std::vector<Element> out;
  if (v.shape().empty() || u.shape().empty()) return out;
  if (v.dim() != u.dim()) throw DimensionError("occurrences: dimension mismatch");
  const Element anchor = v.shape()[0];
  for (const auto& cell : u.shape()) {
    const Element g = cell - anchor;
    bool match = true;
    for (std::size_t j = 0; j < v.size() && match; ++j) {
      auto s = u.find(g + v.shape()[j]);
      match = s && *s == v.values()[j];
    }
    if (match) out.push_back(g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Pattern replace(const Pattern& u, const Pattern& v, const Pattern& w, std::span<const Element> s) {
  if (v.shape() != w.shape()) throw DomainError("replace: v and w must share a shape");
  if (!is_left_sparse(s, v.shape())) throw DomainError("replace: offsets are not sparse for the pattern shape");
  const auto occ = occurrences(v, u);
  for (const auto& g : s)
    if (!std::binary_search(occ.begin(), occ.end(), g))
      throw DomainError("replace: offset " + to_string(g) + " is not an occurrence");
  Pattern out = u;
  for (const auto& g : s) out = out.overlay(w.translated(g));
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(ExtenderMethod m) {
  switch (m) {
    case ExtenderMethod::Exact1D:
      return "Exact1D";
    case ExtenderMethod::FamilyExact:
      return "FamilyExact";
    case ExtenderMethod::RadiusBounded:
      return "RadiusBounded";
  }
  return "?";
}

std::string to_string(ExtenderRelation r) {
  switch (r) {
    case ExtenderRelation::ContainedUpTo:
      return "ContainedUpTo";
    case ExtenderRelation::ProperContainment:
      return "ProperContainmentCertified";
    case ExtenderRelation::Equal:
      return "EqualCertified";
    case ExtenderRelation::NotContained:
      return "NotContained";
  }
  return "?";
}

std::string ExtenderReport::stamp() const {
  std::string out = to_string(method) + ":" + to_string(relation);
  if (relation == ExtenderRelation::ContainedUpTo || relation == ExtenderRelation::NotContained)
    out += "@r=" + std::to_string(radius);
  return out;
}

Shape extender_annulus(const Shape& f, int radius) {
  return set_difference(minkowski_sum(f, symmetric_box(radius, f.dim())), f);
}

struct ExtenderOracle::Annulus {
  Shape f;
  int radius = 0;
  Shape ring;
  // pattern code on f -> sorted context codes on the ring, smallest cell least significant
  std::map<std::uint64_t, std::vector<std::uint64_t>> contexts;

  Pattern context_pattern(std::uint64_t code, int q) const {
    std::vector<Symbol> v(ring.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<Symbol>(code % static_cast<std::uint64_t>(q));
      code /= static_cast<std::uint64_t>(q);
    }
    return Pattern(ring, std::move(v));
  }
};

ExtenderOracle::ExtenderOracle(const Subshift& x) : x_(x) {}
ExtenderOracle::~ExtenderOracle() = default;
ExtenderOracle::ExtenderOracle(ExtenderOracle&&) noexcept = default;
ExtenderOracle& ExtenderOracle::operator=(ExtenderOracle&&) noexcept = default;

bool ExtenderOracle::has_exact_method() const {
  if (x_.kind() == SubshiftKind::Explicit) return x_.family()->compare_extenders != nullptr;
  return x_.is_1d_sft();
}

const ExtenderOracle::Annulus& ExtenderOracle::annulus(const Shape& f, int radius) {
  for (const auto& a : annuli_)
    if (a->radius == radius && a->f == f) return *a;
  auto a = std::make_unique<Annulus>();
  a->f = f;
  a->radius = radius;
  a->ring = extender_annulus(f, radius);
  const Shape region = set_union(f, a->ring);
  const int q = x_.alphabet_size();
  const auto codes = language_codes(x_, region);
  const auto f_pos = positions_in(f, region);
  const auto ring_pos = positions_in(a->ring, region);
  const PatternCodec codec(region, q);
  std::vector<Symbol> values;
  for (auto c : codes) {
    codec.decode_into(c, values);
    std::uint64_t pc = 0;
    for (auto p : f_pos) pc = pc * static_cast<std::uint64_t>(q) + values[p];
    std::uint64_t eta = 0;
    for (std::size_t k = ring_pos.size(); k-- > 0;) eta = eta * static_cast<std::uint64_t>(q) + values[ring_pos[k]];
    a->contexts[pc].push_back(eta);
  }
  for (auto& [_, v] : a->contexts) std::sort(v.begin(), v.end());
  annuli_.push_back(std::move(a));
  return *annuli_.back();
}

namespace {

void require_same_shape(const Pattern& v, const Pattern& w) {
  if (v.shape() != w.shape()) throw DomainError("extender comparison needs patterns on the same shape");
}

}  // namespace

ExtenderReport ExtenderOracle::compare_bounded(const Pattern& v, const Pattern& w, int max_radius) {
  require_same_shape(v, w);
  if (max_radius < 1) throw DomainError("max_radius must be positive");
  const PatternCodec codec(v.shape(), x_.alphabet_size());
  const auto vc = codec.encode(v);
  const auto wc = codec.encode(w);
  static const std::vector<std::uint64_t> none;
  for (int r = 1; r <= max_radius; ++r) {
    const auto& a = annulus(v.shape(), r);
    auto iv = a.contexts.find(vc);
    auto iw = a.contexts.find(wc);
    const auto& ev = iv == a.contexts.end() ? none : iv->second;
    const auto& ew = iw == a.contexts.end() ? none : iw->second;
    for (auto eta : ev) {
      if (!std::binary_search(ew.begin(), ew.end(), eta)) {
        ExtenderReport rep;
        rep.relation = ExtenderRelation::NotContained;
        rep.method = ExtenderMethod::RadiusBounded;
        rep.radius = r;
        rep.witness = a.context_pattern(eta, x_.alphabet_size());
        return rep;
      }
    }
  }
  ExtenderReport rep;
  rep.relation = ExtenderRelation::ContainedUpTo;
  rep.method = ExtenderMethod::RadiusBounded;
  rep.radius = max_radius;
  return rep;
}

ExtenderReport ExtenderOracle::compare_exact(const Pattern& v, const Pattern& w) {
  require_same_shape(v, w);
  if (x_.kind() == SubshiftKind::Explicit) {
    const auto* fam = x_.family();
    if (!fam->compare_extenders) throw DomainError("no exact extender method for family " + fam->name);
    auto rel = fam->compare_extenders(v, w);
    ExtenderReport rep;
    rep.method = ExtenderMethod::FamilyExact;
    if (rel && *rel <= 0) {
      rep.relation = *rel < 0 ? ExtenderRelation::ProperContainment : ExtenderRelation::Equal;
      return rep;
    }
    // Locate a concrete witness by radius search.
    auto bounded = compare_bounded(v, w, 4);
    if (bounded.relation != ExtenderRelation::NotContained)
      throw DomainError("family reports non-containment but no witness was found up to radius 4");
    rep.relation = ExtenderRelation::NotContained;
    rep.radius = bounded.radius;
    rep.witness = std::move(bounded.witness);
    return rep;
  }
  if (!x_.is_1d_sft()) throw DomainError("exact extender comparison needs a 1D SFT or an explicit family");

  // With memory m, a background extends p iff its m cells next to the hull,
  // together with the gap cells, form a legal context whose outer words have
  // infinite past and future. That is exactly the radius-m annulus language.
  const int m = x_.graph()->memory;
  const auto& a = annulus(v.shape(), m);
  const PatternCodec codec(v.shape(), x_.alphabet_size());
  static const std::vector<std::uint64_t> none;
  auto iv = a.contexts.find(codec.encode(v));
  auto iw = a.contexts.find(codec.encode(w));
  const auto& ev = iv == a.contexts.end() ? none : iv->second;
  const auto& ew = iw == a.contexts.end() ? none : iw->second;

  ExtenderReport rep;
  rep.method = ExtenderMethod::Exact1D;
  for (auto eta : ev) {
    if (!std::binary_search(ew.begin(), ew.end(), eta)) {
      rep.relation = ExtenderRelation::NotContained;
      rep.radius = m;
      rep.witness = a.context_pattern(eta, x_.alphabet_size());
      return rep;
    }
  }
  rep.relation = ev.size() == ew.size() ? ExtenderRelation::Equal : ExtenderRelation::ProperContainment;
  return rep;
}

ExtenderReport ExtenderOracle::compare(const Pattern& v, const Pattern& w, int max_radius) {
  if (has_exact_method()) return compare_exact(v, w);
  return compare_bounded(v, w, max_radius);
}

ExtenderReport extender_compare(const Subshift& x, const Pattern& v, const Pattern& w, int max_radius) {
  ExtenderOracle oracle(x);
  return oracle.compare(v, w, max_radius);
}

// ---------------------------------------------------------------------------

Background Background::constant(int dim, Symbol s) {
  const Element one = dim == 1 ? Element::z1(1) : Element::z2(1, 1);
  return Background{one, Pattern(Shape::box(Element::zero(dim), one), {s})};
}

Symbol Background::at(const Element& g) const {
  Element r = g;
  r.c[0] = floor_mod(g.x(), period.x());
  if (g.dim == 2) r.c[1] = floor_mod(g.y(), period.y());
  return tile.at(r);
}

PointApprox::PointApprox(Pattern core, Background background)
    : core_(std::move(core)), background_(std::move(background)) {
  const int d = background_.tile.dim();
  if (core_.shape().empty()) core_ = Pattern(Shape(d), {});
  if (core_.dim() != d) throw DimensionError("point core and background differ in dimension");
  if (background_.period.dim != d || background_.period.x() < 1 || (d == 2 && background_.period.y() < 1))
    throw DomainError("background period must be positive");
  if (background_.tile.shape() != Shape::box(Element::zero(d), background_.period))
    throw DomainError("background tile must cover [0, period)");
}

PointApprox PointApprox::constant(int dim, Symbol s) { return PointApprox(Pattern(Shape(dim), {}), Background::constant(dim, s)); }

Symbol PointApprox::at(const Element& g) const {
  if (auto s = core_.find(g)) return *s;
  return background_.at(g);
}

Pattern PointApprox::restrict(const Shape& f) const {
  std::vector<Symbol> v;
  v.reserve(f.size());
  for (const auto& e : f) v.push_back(at(e));
  return Pattern(f, std::move(v));
}

PointApprox PointApprox::overwritten(const Pattern& p) const { return PointApprox(core_.overlay(p), background_); }

PointApprox PointApprox::normalized() const {
  std::vector<Element> cells;
  std::vector<Symbol> vals;
  for (std::size_t i = 0; i < core_.size(); ++i) {
    const auto& e = core_.shape()[i];
    if (core_.values()[i] != background_.at(e)) {
      cells.push_back(e);
      vals.push_back(core_.values()[i]);
    }
  }
  return PointApprox(Pattern(Shape(dim(), std::move(cells)), std::move(vals)), background_);
}

Shape PointApprox::difference_set(const PointApprox& other) const {
  if (!(background_ == other.background_)) throw DomainError("points are not homoclinic: backgrounds differ");
  const Shape cells = set_union(core_.shape(), other.core_.shape());
  std::vector<Element> out;
  for (const auto& e : cells)
    if (at(e) != other.at(e)) out.push_back(e);
  return Shape(dim(), std::move(out));
}

bool PointApprox::agrees_on(const PointApprox& other, const Shape& window) const {
  return std::all_of(window.begin(), window.end(), [&](const Element& e) { return at(e) == other.at(e); });
}

bool operator==(const PointApprox& a, const PointApprox& b) {
  if (!(a.background_ == b.background_)) return false;
  return a.normalized().core_ == b.normalized().core_;
}

bool is_legal_point(const Subshift& x, const PointApprox& p) {
  if (p.dim() != x.dim()) throw DimensionError("point dimension does not match the subshift");
  const int q = x.alphabet_size();
  for (auto s : p.core().values())
    if (s >= q) return false;
  for (auto s : p.background().tile.values())
    if (s >= q) return false;
  if (x.kind() == SubshiftKind::Explicit) return x.family()->legal_point(p);

  auto placement_matches = [&](const Pattern& f, const Element& g) {
    for (std::size_t j = 0; j < f.size(); ++j)
      if (p.at(g + f.shape()[j]) != f.values()[j]) return false;
    return true;
  };
  const Shape period_box = p.background().tile.shape();
  for (const auto& f : x.forbidden()) {
    for (const auto& g : period_box) {
      bool match = true;
      for (std::size_t j = 0; j < f.size() && match; ++j)
        match = p.background().at(g + f.shape()[j]) == f.values()[j];
      if (match) return false;
    }
    for (const auto& c : p.core().shape())
      for (const auto& e : f.shape())
        if (placement_matches(f, c - e)) return false;
  }
  return true;
}

PointApprox swap_map(const Subshift& x, const Pattern& v, const Pattern& w, const PointApprox& p) {
  if (v.shape() != w.shape()) throw DomainError("swap map needs v and w on the same shape");
  if (!is_legal_point(x, p)) throw DomainError("swap map: input point is not in the subshift");
  if (v == w) return p;
  const Pattern here = p.restrict(v.shape());
  const Pattern* target = nullptr;
  if (here == v) target = &w;
  else if (here == w) target = &v;
  if (!target) return p;
  PointApprox swapped = p.overwritten(*target).normalized();
  if (!is_legal_point(x, swapped)) return p;
  return swapped;
}

}  // namespace thermo
