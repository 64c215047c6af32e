#include "thermo/spec_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "thermo/error.hpp"

namespace thermo {

using nlohmann::json;

namespace {

// A JSON node together with its path from the document root.
struct Node {
  const json& j;
  std::string path;

  bool has(const char* key) const { return j.is_object() && j.contains(key); }

  Node at(const char* key) const {
    if (!j.is_object()) throw SpecError(path, "expected an object");
    if (!j.contains(key)) throw SpecError(child_path(key), "missing field");
    return {j.at(key), child_path(key)};
  }
  Node at(std::size_t i) const { return {j.at(i), fmt::format("{}[{}]", path, i)}; }

  std::string child_path(const char* key) const { return path.empty() ? key : path + "." + key; }

  template <typename T>
  T as() const {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      throw SpecError(path, fmt::format("unexpected value {}", j.dump()));
    }
  }
  template <typename T>
  T get(const char* key, T fallback) const {
    return has(key) ? at(key).as<T>() : fallback;
  }
  const json& array() const {
    if (!j.is_array()) throw SpecError(path, "expected an array");
    return j;
  }
};

int positive(const Node& n) {
  const auto v = n.as<std::int64_t>();
  if (v <= 0) throw SpecError(n.path, fmt::format("must be positive, got {}", v));
  return static_cast<int>(v);
}

Rational rational_of(const Node& n) {
  if (n.j.is_number_integer()) return Rational(n.j.get<std::int64_t>());
  if (!n.j.is_string()) throw SpecError(n.path, "expected a rational as \"p/q\" or an integer");
  try {
    return Rational::parse(n.j.get<std::string>());
  } catch (const Error& e) {
    throw SpecError(n.path, e.what());
  }
}

Element element_of(const json& c, int dim) {
  if (dim == 1) {
    if (c.is_number_integer()) return Element::z1(c.get<Coord>());
    if (c.is_array() && c.size() == 1) return Element::z1(c[0].get<Coord>());
  } else if (c.is_array() && c.size() == 2) {
    return Element::z2(c[0].get<Coord>(), c[1].get<Coord>());
  }
  throw DimensionError(fmt::format("cell {} is not a point of Z^{}", c.dump(), dim));
}

Shape shape_of(const Node& n, int dim) {
  try {
    return shape_from_json(n.j, dim);
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(n.path, e.what());
  }
}

Pattern pattern_of(const Node& n, const Alphabet& alphabet, int dim) {
  try {
    return pattern_from_json(n.j, alphabet, dim);
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(n.path, e.what());
  }
}

Alphabet alphabet_of(const Node& n) {
  if (n.j.is_number_integer()) {
    const int q = positive(n);
    if (q > 10) throw SpecError(n.path, "numeric alphabets go up to 10 symbols");
    return Alphabet::digits(q);
  }
  const auto s = n.as<std::string>();
  if (s.empty()) throw SpecError(n.path, "empty alphabet");
  std::vector<std::string> tokens;
  for (char ch : s) tokens.emplace_back(1, ch);
  try {
    return Alphabet(std::move(tokens));
  } catch (const Error& e) {
    throw SpecError(n.path, e.what());
  }
}

Subshift subshift_of(const Node& n) {
  const auto kind = n.at("kind").as<std::string>();
  if (kind == "golden_mean") return Subshift::golden_mean();
  if (kind == "hard_square") return Subshift::hard_square();
  if (kind == "sunny_side_up") return Subshift::sunny_side_up();
  const int dim = n.get<int>("dim", 1);
  if (dim != 1 && dim != 2) throw SpecError(n.child_path("dim"), "dimension must be 1 or 2");
  const Alphabet alphabet = alphabet_of(n.at("alphabet"));
  if (kind == "full") return Subshift::full(dim, alphabet);
  if (kind == "sft") {
    const Node list = n.at("forbidden");
    std::vector<Pattern> forbidden;
    for (std::size_t i = 0; i < list.array().size(); ++i) forbidden.push_back(pattern_of(list.at(i), alphabet, dim));
    try {
      return Subshift::sft(dim, alphabet, std::move(forbidden));
    } catch (const Error& e) {
      throw SpecError(list.path, e.what());
    }
  }
  throw SpecError(n.child_path("kind"), fmt::format("unknown subshift kind '{}'", kind));
}

LocallyConstantPotential lc_of(const Node& n, int dim, int q) {
  const Shape window = shape_of(n.at("window"), dim);
  const PatternCodec codec(window, q);
  std::vector<double> table(codec.count(), 0.0);
  if (n.has("table")) {
    table = n.at("table").as<std::vector<double>>();
    if (table.size() != codec.count())
      throw SpecError(n.child_path("table"), fmt::format("expected {} entries, got {}", codec.count(), table.size()));
  } else {
    const Node entries = n.at("entries");
    if (!entries.j.is_object()) throw SpecError(entries.path, "expected an object of symbol strings");
    const Alphabet digits = Alphabet::digits(q);
    for (const auto& [key, value] : entries.j.items()) {
      const std::string where = entries.path + "." + key;
      try {
        table.at(codec.encode(Pattern::parse(digits, window, key))) = value.get<double>();
      } catch (const std::exception& e) {
        throw SpecError(where, e.what());
      }
    }
  }
  return LocallyConstantPotential(window, q, std::move(table));
}

void check_rational_pair(const Node& n, const Rational& value, const Rational& lo) {
  if (!(value > lo)) throw SpecError(n.path, fmt::format("must exceed {}", lo.str()));
}

}  // namespace

// ---------------------------------------------------------------------------

json shape_to_json(const Shape& s) {
  json out = json::array();
  for (const auto& e : s) {
    if (s.dim() == 1)
      out.push_back(e.x());
    else
      out.push_back(json::array({e.x(), e.y()}));
  }
  return out;
}

Shape shape_from_json(const json& j, int dim) {
  if (j.is_object()) {
    if (j.contains("interval")) {
      const auto& iv = j.at("interval");
      if (dim != 1 || !iv.is_array() || iv.size() != 2) throw DomainError("interval needs [lo, hi) on Z");
      return Shape::interval(iv[0].get<Coord>(), iv[1].get<Coord>());
    }
    if (j.contains("box")) {
      const auto& b = j.at("box");
      return Shape::box(element_of(b.at("lo"), dim), element_of(b.at("hi"), dim));
    }
    throw DomainError("shape object needs 'interval' or 'box'");
  }
  if (!j.is_array()) throw DomainError("shape must be a list of cells");
  std::vector<Element> cells;
  for (const auto& c : j) cells.push_back(element_of(c, dim));
  Shape s(dim, cells);
  if (s.size() != cells.size()) throw DomainError("shape lists a cell twice");
  return s;
}

json pattern_to_json(const Pattern& p, const Alphabet& alphabet) {
  std::string symbols;
  for (auto v : p.values()) symbols += alphabet.token(v);
  return json{{"cells", shape_to_json(p.shape())}, {"symbols", symbols}};
}

json pattern_to_json(const Pattern& p) {
  std::vector<int> values(p.values().begin(), p.values().end());
  return json{{"cells", shape_to_json(p.shape())}, {"values", values}};
}

Pattern pattern_from_json(const json& j, const Alphabet& alphabet, int dim) {
  if (j.is_string()) {
    if (dim != 1) throw DimensionError("word shorthand is only valid on Z");
    const auto s = j.get<std::string>();
    return Pattern::parse(alphabet, Shape::interval(0, static_cast<Coord>(s.size())), s);
  }
  const Shape shape = shape_from_json(j.at("cells"), dim);
  if (j.contains("values")) {
    std::vector<Symbol> values;
    for (const auto& v : j.at("values")) {
      const int s = v.get<int>();
      if (s < 0 || s >= alphabet.size()) throw DomainError(fmt::format("symbol {} outside the alphabet", s));
      values.push_back(static_cast<Symbol>(s));
    }
    return Pattern(shape, std::move(values));
  }
  return Pattern::parse(alphabet, shape, j.at("symbols").get<std::string>());
}

json potential_to_json(const Potential& phi) {
  auto lc_json = [](const LocallyConstantPotential& lc) {
    return json{{"kind", "locally_constant"},
                {"dim", lc.dim()},
                {"alphabet_size", lc.alphabet_size()},
                {"window", shape_to_json(lc.window())},
                {"table", lc.table()}};
  };
  if (const auto* lc = std::get_if<LocallyConstantPotential>(&phi)) return lc_json(*lc);
  const auto& sv = std::get<SVPotential>(phi);
  json approximants = json::array();
  std::vector<double> bounds;
  for (int n = 1; n <= sv.depth(); ++n) {
    approximants.push_back(lc_json(sv.approximant(n)));
    bounds.push_back(sv.var_bound(n));
  }
  return json{{"kind", "sv"},
              {"dim", sv.dim()},
              {"alphabet_size", sv.alphabet_size()},
              {"start_radius", sv.start_radius()},
              {"tail_ratio", sv.tail_ratio()},
              {"var_bounds", bounds},
              {"approximants", approximants}};
}

Potential potential_from_json(const json& j, int dim, int alphabet_size) {
  const Node n{j, "potential"};
  const auto kind = n.at("kind").as<std::string>();
  if (kind == "zero") return LocallyConstantPotential::zero(dim, alphabet_size);
  if (kind == "single_site") {
    auto values = n.at("values").as<std::vector<double>>();
    if (static_cast<int>(values.size()) != alphabet_size)
      throw SpecError(n.child_path("values"), fmt::format("expected {} values", alphabet_size));
    return LocallyConstantPotential::single_site(dim, std::move(values));
  }
  if (kind == "locally_constant") return lc_of(n, dim, alphabet_size);
  try {
    if (kind == "geometric") {
      if (dim != 1 || alphabet_size != 2) throw SpecError(n.path, "geometric potential lives on the binary full shift");
      return SVPotential::geometric(n.at("beta").as<double>(), positive(n.at("depth")));
    }
    if (kind == "sv") {
      const Node list = n.at("approximants");
      std::vector<LocallyConstantPotential> approximants;
      for (std::size_t i = 0; i < list.array().size(); ++i) approximants.push_back(lc_of(list.at(i), dim, alphabet_size));
      return SVPotential(dim, alphabet_size, n.at("start_radius").as<int>(), std::move(approximants),
                         n.at("var_bounds").as<std::vector<double>>(), n.at("tail_ratio").as<double>());
    }
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(n.path, e.what());
  }
  throw SpecError(n.child_path("kind"), fmt::format("unknown potential kind '{}'", kind));
}

// ---------------------------------------------------------------------------

json measure_to_json(const EquilibriumMeasure& mu) {
  json out{{"kind", to_string(mu.kind())},
           {"pressure", mu.pressure()},
           {"entropy", mu.entropy()},
           {"integral", mu.integral()}};
  switch (mu.kind()) {
    case EquilibriumMeasure::Kind::Markov: {
      const auto& ch = mu.chain();
      std::vector<std::string> words;
      for (std::size_t i = 0; i < ch.states.size(); ++i) words.push_back(ch.state_word(i));
      out["alphabet_size"] = ch.alphabet_size;
      out["order"] = ch.order;
      out["states"] = words;
      out["stationary"] = ch.stationary;
      out["transition"] = ch.transition;
      break;
    }
    case EquilibriumMeasure::Kind::PointMass: {
      const auto& p = mu.point();
      std::vector<Coord> period(p.background().period.c.begin(), p.background().period.c.begin() + p.dim());
      out["core"] = pattern_to_json(p.core());
      out["period"] = period;
      out["tile"] = pattern_to_json(p.background().tile);
      break;
    }
    case EquilibriumMeasure::Kind::Product: {
      json factors = json::array();
      for (const auto& f : mu.factors()) factors.push_back(measure_to_json(f));
      out["factors"] = factors;
      break;
    }
  }
  return out;
}

EquilibriumMeasure measure_from_json(const json& j) {
  const Node n{j, "measure"};
  const auto kind = n.at("kind").as<std::string>();
  try {
    if (kind == to_string(EquilibriumMeasure::Kind::Markov)) {
      MarkovChain ch;
      ch.alphabet_size = positive(n.at("alphabet_size"));
      ch.order = n.at("order").as<int>();
      const Alphabet digits = Alphabet::digits(std::min(ch.alphabet_size, 10));
      const PatternCodec codec(Shape::interval(0, ch.order), ch.alphabet_size);
      for (const auto& w : n.at("states").as<std::vector<std::string>>())
        ch.states.push_back(codec.encode(Pattern::parse(digits, Shape::interval(0, ch.order), w)));
      ch.stationary = n.at("stationary").as<std::vector<double>>();
      ch.transition = n.at("transition").as<std::vector<std::vector<double>>>();
      const auto k = ch.states.size();
      if (ch.stationary.size() != k || ch.transition.size() != k)
        throw SpecError(n.path, "state list, stationary vector and transition matrix disagree in size");
      for (const auto& row : ch.transition)
        if (row.size() != k) throw SpecError(n.child_path("transition"), "transition matrix is not square");
      return EquilibriumMeasure::markov(std::move(ch), n.at("pressure").as<double>(), n.at("entropy").as<double>(),
                                        n.at("integral").as<double>());
    }
    if (kind == to_string(EquilibriumMeasure::Kind::PointMass)) {
      const Node core = n.at("core");
      const int dim = core.j.at("cells").empty() ? static_cast<int>(n.at("period").j.size())
                                                  : (core.j.at("cells")[0].is_array() ? 2 : 1);
      const Alphabet digits = Alphabet::digits(10);
      const auto period = n.at("period").as<std::vector<Coord>>();
      if (static_cast<int>(period.size()) != dim) throw SpecError(n.child_path("period"), "dimension mismatch");
      Background bg{dim == 1 ? Element::z1(period[0]) : Element::z2(period[0], period[1]),
                    pattern_from_json(n.at("tile").j, digits, dim)};
      return EquilibriumMeasure::point_mass(PointApprox(pattern_from_json(core.j, digits, dim), std::move(bg)),
                                            n.at("integral").as<double>());
    }
    if (kind == to_string(EquilibriumMeasure::Kind::Product)) {
      std::vector<EquilibriumMeasure> factors;
      for (const auto& f : n.at("factors").array()) factors.push_back(measure_from_json(f));
      return EquilibriumMeasure::product(std::move(factors));
    }
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(n.path, e.what());
  }
  throw SpecError(n.child_path("kind"), fmt::format("unknown measure kind '{}'", kind));
}

bool operator==(const EquilibriumMeasure& a, const EquilibriumMeasure& b) {
  if (a.kind() != b.kind() || a.pressure() != b.pressure() || a.entropy() != b.entropy() ||
      a.integral() != b.integral())
    return false;
  switch (a.kind()) {
    case EquilibriumMeasure::Kind::Markov:
      return a.chain() == b.chain();
    case EquilibriumMeasure::Kind::PointMass:
      return a.point() == b.point();
    case EquilibriumMeasure::Kind::Product:
      return a.factors() == b.factors();
  }
  return false;
}

// ---------------------------------------------------------------------------

ToolSpec parse_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SpecError(fmt::format("{}:{}", line, col), "malformed JSON");
  }
  const Node root{doc, ""};
  if (!doc.is_object()) throw SpecError("", "spec must be a JSON object");
  const int schema = root.at("schema").as<int>();
  if (schema != kSpecSchema)
    throw SpecError("schema", fmt::format("unsupported schema {}, expected {}", schema, kSpecSchema));

  ToolSpec spec;
  spec.name = root.get<std::string>("name", "spec");
  spec.subshift = subshift_of(root.at("subshift"));
  const Subshift& x = spec.subshift;
  const int dim = x.dim();

  const Shape origin(dim, {Element::zero(dim)});
  if (language_codes(x, origin).empty())
    throw SpecError("subshift", fmt::format("empty language at F={}", to_string(origin)));

  if (root.has("potential"))
    spec.potential = potential_from_json(root.at("potential").j, dim, x.alphabet_size());
  else
    spec.potential = LocallyConstantPotential::zero(dim, x.alphabet_size());
  if (root.has("seed")) spec.seed = root.at("seed").as<std::uint64_t>();
  if (root.has("scale_cap")) spec.scale_cap = static_cast<std::uint64_t>(positive(root.at("scale_cap")));
  if (root.has("max_radius")) spec.max_radius = positive(root.at("max_radius"));

  if (root.has("shapes")) {
    const Node list = root.at("shapes");
    for (std::size_t i = 0; i < list.array().size(); ++i) spec.shapes.push_back(shape_of(list.at(i), dim));
  }

  if (root.has("cases")) {
    const Node list = root.at("cases");
    for (std::size_t i = 0; i < list.array().size(); ++i) {
      const Node c = list.at(i);
      CaseSpec cs{c.get<std::string>("id", fmt::format("case{}", i)), pattern_of(c.at("v"), x.alphabet(), dim),
                  pattern_of(c.at("w"), x.alphabet(), dim)};
      if (cs.v.shape() != cs.w.shape()) throw SpecError(c.path, "v and w must share a shape");
      if (!in_language(x, cs.v)) throw SpecError(c.child_path("v"), "pattern is not in the language");
      if (!in_language(x, cs.w)) throw SpecError(c.child_path("w"), "pattern is not in the language");
      spec.cases.push_back(std::move(cs));
    }
  }
  if (root.has("pair_scan")) {
    spec.pair_scan = positive(root.at("pair_scan"));
    if (dim != 1) throw SpecError("pair_scan", "pair scans run on Z");
  }

  if (root.has("pressure")) {
    const Node p = root.at("pressure");
    if (p.has("windows")) {
      spec.pressure_windows.clear();
      const Node list = p.at("windows");
      for (std::size_t i = 0; i < list.array().size(); ++i) spec.pressure_windows.push_back(positive(list.at(i)));
    }
    spec.variational_candidates = p.get<int>("variational_candidates", 0);
    spec.smb_length = p.get<int>("smb_length", 0);
    spec.smb_samples = p.get<int>("smb_samples", 0);
  }
  if (root.has("lrn")) {
    const Node l = root.at("lrn");
    spec.lrn_max_n = positive(l.at("max_n"));
    spec.lrn_samples = positive(l.at("samples"));
  }
  if (root.has("tolerances")) {
    const Node t = root.at("tolerances");
    spec.tolerances.theorem = t.get<double>("theorem", spec.tolerances.theorem);
    spec.tolerances.mme = t.get<double>("mme", spec.tolerances.mme);
    spec.tolerances.stabilization = t.get<double>("stabilization", spec.tolerances.stabilization);
    spec.tolerances.quadrature = t.get<double>("quadrature", spec.tolerances.quadrature);
  }
  if (root.has("tiling")) {
    const Node t = root.at("tiling");
    TilingSpec ts;
    ts.window = shape_of(t.at("window"), dim);
    ts.block = positive(t.at("block"));
    if (t.has("sparse_against")) ts.sparse_against = shape_of(t.at("sparse_against"), dim);
    if (t.has("epsilon")) {
      ts.epsilon = rational_of(t.at("epsilon"));
      check_rational_pair(t.at("epsilon"), ts.epsilon, Rational(0));
    }
    spec.tiling = std::move(ts);
  }
  if (root.has("stirling")) {
    const Node s = root.at("stirling");
    StirlingSpec ss;
    if (s.has("a")) ss.a = rational_of(s.at("a"));
    if (s.has("b")) ss.b = rational_of(s.at("b"));
    if (s.has("D")) ss.d = rational_of(s.at("D"));
    check_rational_pair(s.has("a") ? s.at("a") : s, ss.a, Rational(0));
    check_rational_pair(s.has("b") ? s.at("b") : s, ss.b, Rational(0));
    if (s.has("grid")) ss.options.grid = positive(s.at("grid"));
    if (s.has("binomial_n")) ss.options.binomial_n = s.at("binomial_n").as<std::vector<std::int64_t>>();
    if (s.has("extra_c")) {
      ss.options.extra_c.clear();
      const Node list = s.at("extra_c");
      for (std::size_t i = 0; i < list.array().size(); ++i) ss.options.extra_c.push_back(rational_of(list.at(i)));
    }
    spec.stirling = std::move(ss);
  }
  if (root.has("measure")) spec.measure = measure_from_json(root.at("measure").j);
  return spec;
}

ToolSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path.string(), "cannot open spec file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_spec(buf.str());
  } catch (const SpecError& e) {
    throw SpecError(path.string() + ":" + e.where(), std::string(e.what()).substr(e.where().empty() ? 0 : e.where().size() + 2));
  }
}

std::optional<EquilibriumMeasure> default_measure(const ToolSpec& spec) {
  if (spec.measure) return spec.measure;
  const Subshift& x = spec.subshift;
  if (x.is_1d_sft()) {
    if (const auto* lc = std::get_if<LocallyConstantPotential>(&spec.potential))
      return transfer_pressure(x, *lc).measure;
    const auto& sv = std::get<SVPotential>(spec.potential);
    return transfer_pressure(x, sv.approximant(sv.depth())).measure;
  }
  if (const auto* fam = x.family(); fam && !fam->point_masses.empty()) {
    auto point = fam->point_masses.front()();
    double integral = 0.0;
    if (const auto* lc = std::get_if<LocallyConstantPotential>(&spec.potential))
      integral = lc->at(point, Element::zero(x.dim()));
    return EquilibriumMeasure::point_mass(std::move(point), integral);
  }
  return std::nullopt;
}

}  // namespace thermo
