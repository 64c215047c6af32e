#include "thermo/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t out = 1;
  for (int i = 0; i < e; ++i) out *= b;
  return out;
}

// The weighted de Bruijn graph of K-words of the language, K >= memory + 1 and
// K >= span of the potential window. States are (K-1)-words.
struct TransferGraph {
  int q = 2;
  int order = 1;
  std::vector<std::uint64_t> states;
  struct Edge {
    std::size_t from;
    std::size_t to;
    double log_weight;
  };
  std::vector<Edge> edges;
};

TransferGraph build_transfer_graph(const Subshift& x, const LocallyConstantPotential& phi) {
  if (!x.is_1d_sft()) throw DomainError("transfer operator needs a 1D SFT");
  if (phi.dim() != 1 || phi.alphabet_size() != x.alphabet_size())
    throw DomainError("potential does not match the subshift");
  const Coord hmin = phi.window().lower().x();
  const Coord hmax = phi.window().upper().x();
  const int span = static_cast<int>(hmax - hmin + 1);
  const int big_k = std::max(x.graph()->memory + 1, span);

  TransferGraph tg;
  tg.q = x.alphabet_size();
  tg.order = big_k - 1;
  tg.states = language_codes(x, Shape::interval(0, tg.order));
  const auto words = language_codes(x, Shape::interval(0, big_k));
  const auto q = static_cast<std::uint64_t>(tg.q);
  const std::uint64_t mod = ipow(q, tg.order);
  const PatternCodec codec(Shape::interval(0, big_k), tg.q);
  const Element offset = Element::z1(big_k - 1 - hmax);
  auto find = [&](std::uint64_t c) {
    auto it = std::lower_bound(tg.states.begin(), tg.states.end(), c);
    return static_cast<std::size_t>(it - tg.states.begin());
  };
  for (auto c : words) {
    const Pattern word = codec.decode(c);
    tg.edges.push_back({find(c / q), find(c % mod), phi.at(word, offset)});
  }
  return tg;
}

// Tarjan's algorithm; returns component id per vertex.
std::vector<int> strongly_connected(std::size_t n, const std::vector<std::vector<std::size_t>>& adj, int& count) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  int counter = 0;
  count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (auto w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      while (true) {
        auto w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp[w] = count;
        if (w == v) break;
      }
      ++count;
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return comp;
}

struct Perron {
  double lambda = 0.0;
  std::vector<double> right;
  std::vector<double> left;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on M + I (primitive whenever M is irreducible, with the same
// Perron vectors), stopped by the Collatz-Wielandt bracket.
std::pair<double, std::vector<double>> power_iterate(std::size_t n, const std::vector<TransferGraph::Edge>& edges,
                                                     bool transpose, const PerronOptions& opts, int& iterations,
                                                     bool& converged) {
  std::vector<double> v(n, 1.0), y(n);
  double lo = 0.0, hi = 0.0;
  converged = false;
  for (iterations = 1; iterations <= opts.max_iterations; ++iterations) {
    y = v;
    for (const auto& e : edges) {
      const double w = std::exp(e.log_weight);
      if (transpose) y[e.to] += w * v[e.from];
      else y[e.from] += w * v[e.to];
    }
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] / v[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double top = *std::max_element(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / top;
    if (hi - lo <= opts.tolerance * hi) {
      converged = true;
      break;
    }
  }
  iterations = std::min(iterations, opts.max_iterations);
  return {0.5 * (lo + hi) - 1.0, v};
}

double entropy_of(const std::vector<double>& pi, const std::vector<std::vector<double>>& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (double pij : p[i])
      if (pij > 0.0) h -= pi[i] * pij * std::log(pij);
  return h;
}

double log_cylinder_word(const MarkovChain& chain, const std::vector<Symbol>& word) {
  const auto k = static_cast<std::size_t>(chain.order);
  if (word.size() < k) {
    // Marginal over states with this prefix.
    double s = 0.0;
    const auto q = static_cast<std::uint64_t>(chain.alphabet_size);
    const std::uint64_t scale = ipow(q, static_cast<int>(k - word.size()));
    std::uint64_t prefix = 0;
    for (auto a : word) prefix = prefix * q + a;
    for (std::size_t i = 0; i < chain.states.size(); ++i)
      if (chain.states[i] / scale == prefix) s += chain.stationary[i];
    return std::log(s);
  }
  std::uint64_t code = 0;
  for (std::size_t t = 0; t < k; ++t) code = code * static_cast<std::uint64_t>(chain.alphabet_size) + word[t];
  auto idx = chain.index_of(code);
  if (!idx) return -std::numeric_limits<double>::infinity();
  double lp = std::log(chain.stationary[*idx]);
  std::size_t i = *idx;
  for (std::size_t t = k; t < word.size(); ++t) {
    auto j = chain.next(i, word[t]);
    if (!j) return -std::numeric_limits<double>::infinity();
    const double p = chain.transition[i][*j];
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    lp += std::log(p);
    i = *j;
  }
  return lp;
}

double markov_cylinder(const MarkovChain& chain, const Pattern& w) {
  if (w.dim() != 1) throw DomainError("Markov measures evaluate cylinders on Z only");
  if (w.shape().empty()) return 1.0;
  const Shape hull = w.shape().hull();
  if (hull.size() == w.size()) return std::exp(log_cylinder_word(chain, w.values()));
  // Sum over fillings of the gaps.
  const Shape gaps = set_difference(hull, w.shape());
  const PatternCodec codec(gaps, chain.alphabet_size);
  if (codec.count() > scale_cap())
    throw ScaleCapError("gap fillings exceed the scale cap", static_cast<double>(codec.count()),
                        static_cast<double>(scale_cap()));
  double s = 0.0;
  for (std::uint64_t c = 0; c < codec.count(); ++c) {
    const Pattern full = w.overlay(codec.decode(c));
    s += std::exp(log_cylinder_word(chain, full.values()));
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

RandomStream::RandomStream(std::uint64_t seed) {
  std::uint64_t s = seed;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
  engine_.seed(seq);
}

RandomStream RandomStream::substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t s = seed ^ fnv1a(name);
  std::uint64_t mixed = splitmix64(s);
  mixed ^= index * 0xd1b54a32d192ed03ULL;
  return RandomStream(splitmix64(mixed));
}

std::size_t RandomStream::categorical(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("categorical draw with zero total weight");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> MarkovChain::index_of(std::uint64_t code) const {
  auto it = std::lower_bound(states.begin(), states.end(), code);
  if (it == states.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

std::optional<std::size_t> MarkovChain::next(std::size_t i, Symbol a) const {
  const auto q = static_cast<std::uint64_t>(alphabet_size);
  const std::uint64_t mod = ipow(q, order);
  return index_of((states[i] * q + a) % mod);
}

double MarkovChain::step(std::size_t i, Symbol a) const {
  auto j = next(i, a);
  return j ? transition[i][*j] : 0.0;
}

std::string MarkovChain::state_word(std::size_t i) const {
  const PatternCodec codec(Shape::interval(0, order), alphabet_size);
  return codec.decode(states[i]).str();
}

EquilibriumMeasure EquilibriumMeasure::markov(MarkovChain chain, double pressure, double entropy, double integral) {
  const std::size_t n = chain.states.size();
  if (n == 0) throw DomainError("Markov measure needs at least one state");
  if (chain.stationary.size() != n || chain.transition.size() != n)
    throw DomainError("Markov measure tables have inconsistent sizes");
  for (const auto& row : chain.transition)
    if (row.size() != n) throw DomainError("transition matrix must be square");
  EquilibriumMeasure mu;
  mu.kind_ = Kind::Markov;
  mu.pressure_ = pressure;
  mu.entropy_ = entropy;
  mu.integral_ = integral;
  mu.chain_ = std::move(chain);
  return mu;
}

EquilibriumMeasure EquilibriumMeasure::point_mass(PointApprox point, double integral) {
  EquilibriumMeasure mu;
  mu.kind_ = Kind::PointMass;
  mu.integral_ = integral;
  mu.pressure_ = integral;
  mu.point_ = std::move(point);
  return mu;
}

EquilibriumMeasure EquilibriumMeasure::product(std::vector<EquilibriumMeasure> factors) {
  if (factors.empty()) throw DomainError("product measure needs factors");
  EquilibriumMeasure mu;
  mu.kind_ = Kind::Product;
  for (const auto& f : factors) {
    mu.pressure_ += f.pressure_;
    mu.entropy_ += f.entropy_;
    mu.integral_ += f.integral_;
  }
  mu.factors_ = std::move(factors);
  return mu;
}

int EquilibriumMeasure::alphabet_size() const {
  switch (kind_) {
    case Kind::Markov:
      return chain_->alphabet_size;
    case Kind::PointMass: {
      const auto& t = point_->background().tile.values();
      const auto& c = point_->core().values();
      int m = 0;
      for (auto s : t) m = std::max<int>(m, s);
      for (auto s : c) m = std::max<int>(m, s);
      return m + 1;
    }
    case Kind::Product: {
      int q = 1;
      for (const auto& f : factors_) q *= f.alphabet_size();
      return q;
    }
  }
  return 0;
}

const MarkovChain& EquilibriumMeasure::chain() const {
  if (!chain_) throw DomainError("measure is not a Markov measure");
  return *chain_;
}

const PointApprox& EquilibriumMeasure::point() const {
  if (!point_) throw DomainError("measure is not a point mass");
  return *point_;
}

std::string to_string(EquilibriumMeasure::Kind k) {
  switch (k) {
    case EquilibriumMeasure::Kind::Markov:
      return "Markov";
    case EquilibriumMeasure::Kind::PointMass:
      return "PointMass";
    case EquilibriumMeasure::Kind::Product:
      return "Product";
  }
  return "?";
}

std::string to_string(PressureMethod m) {
  switch (m) {
    case PressureMethod::TransferExact:
      return "TransferExact";
    case PressureMethod::PartitionSum:
      return "PartitionSum";
    case PressureMethod::VariationalLowerBound:
      return "VariationalLowerBound";
    case PressureMethod::SMBEstimate:
      return "SMBEstimate";
  }
  return "?";
}

// ---------------------------------------------------------------------------

TransferResult transfer_pressure(const Subshift& x, const LocallyConstantPotential& phi, const PerronOptions& opts) {
  const TransferGraph tg = build_transfer_graph(x, phi);
  const std::size_t n = tg.states.size();
  if (n == 0) throw DomainError("empty language: the subshift has no points");
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : tg.edges) adj[e.from].push_back(e.to);
  int ncomp = 0;
  const auto comp = strongly_connected(n, adj, ncomp);

  TransferResult out;
  std::vector<Perron> perron;
  std::vector<std::vector<std::size_t>> members;
  for (int c = 0; c < ncomp; ++c) {
    std::vector<std::size_t> mem;
    for (std::size_t v = 0; v < n; ++v)
      if (comp[v] == c) mem.push_back(v);
    std::vector<std::size_t> local(n, 0);
    for (std::size_t i = 0; i < mem.size(); ++i) local[mem[i]] = i;
    std::vector<TransferGraph::Edge> inner;
    for (const auto& e : tg.edges)
      if (comp[e.from] == c && comp[e.to] == c) inner.push_back({local[e.from], local[e.to], e.log_weight});
    if (inner.empty()) continue;  // transient single state

    Perron p;
    int it_r = 0, it_l = 0;
    bool ok_r = false, ok_l = false;
    auto [lam_r, right] = power_iterate(mem.size(), inner, false, opts, it_r, ok_r);
    auto [lam_l, left] = power_iterate(mem.size(), inner, true, opts, it_l, ok_l);
    p.lambda = lam_r;
    p.right = std::move(right);
    p.left = std::move(left);
    p.iterations = std::max(it_r, it_l);
    p.converged = ok_r && ok_l;

    ClassReport rep;
    for (auto v : mem) rep.states.push_back(tg.states[v]);
    rep.log_lambda = std::log(p.lambda);
    rep.iterations = p.iterations;
    rep.converged = p.converged;
    out.classes.push_back(std::move(rep));
    perron.push_back(std::move(p));
    members.push_back(std::move(mem));
  }
  if (out.classes.empty()) throw DomainError("transfer graph has no recurrent class");

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : out.classes) best = std::max(best, c.log_lambda);
  for (std::size_t i = 0; i < out.classes.size(); ++i)
    if (out.classes[i].log_lambda >= best - 1e-10) out.maximizing.push_back(i);

  const std::size_t top = out.maximizing.front();
  const auto& p = perron[top];
  const auto& mem = members[top];
  const std::size_t m = mem.size();
  std::vector<std::size_t> local(n, m);
  for (std::size_t i = 0; i < m; ++i) local[mem[i]] = i;

  MarkovChain chain;
  chain.alphabet_size = tg.q;
  chain.order = tg.order;
  for (auto v : mem) chain.states.push_back(tg.states[v]);
  chain.transition.assign(m, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> logw(m, std::vector<double>(m, 0.0));
  for (const auto& e : tg.edges) {
    if (local[e.from] == m || local[e.to] == m) continue;
    const auto i = local[e.from], j = local[e.to];
    chain.transition[i][j] = std::exp(e.log_weight) * p.right[j] / (p.lambda * p.right[i]);
    logw[i][j] = e.log_weight;
  }
  for (auto& row : chain.transition) {
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& v : row) v /= s;
  }
  chain.stationary.resize(m);
  for (std::size_t i = 0; i < m; ++i) chain.stationary[i] = p.left[i] * p.right[i];
  const double z = std::accumulate(chain.stationary.begin(), chain.stationary.end(), 0.0);
  for (auto& v : chain.stationary) v /= z;

  const double h = entropy_of(chain.stationary, chain.transition);
  double integral = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (chain.transition[i][j] > 0.0) integral += chain.stationary[i] * chain.transition[i][j] * logw[i][j];

  out.pressure.value = out.classes[top].log_lambda;
  out.pressure.method = PressureMethod::TransferExact;
  out.pressure.window = Shape::interval(0, tg.order + 1);
  out.measure = EquilibriumMeasure::markov(std::move(chain), out.pressure.value, h, integral);
  return out;
}

double cylinder_measure(const EquilibriumMeasure& mu, const Pattern& w) {
  switch (mu.kind()) {
    case EquilibriumMeasure::Kind::Markov:
      return markov_cylinder(mu.chain(), w);
    case EquilibriumMeasure::Kind::PointMass:
      return mu.point().restrict(w.shape()) == w ? 1.0 : 0.0;
    case EquilibriumMeasure::Kind::Product: {
      const auto& fs = mu.factors();
      std::vector<int> sizes;
      for (const auto& f : fs) sizes.push_back(f.alphabet_size());
      std::vector<std::vector<Symbol>> parts(fs.size(), std::vector<Symbol>(w.size()));
      for (std::size_t c = 0; c < w.size(); ++c) {
        int s = w.values()[c];
        for (std::size_t k = fs.size(); k-- > 0;) {
          parts[k][c] = static_cast<Symbol>(s % sizes[k]);
          s /= sizes[k];
        }
        if (s != 0) return 0.0;
      }
      double prob = 1.0;
      for (std::size_t k = 0; k < fs.size(); ++k) prob *= cylinder_measure(fs[k], Pattern(w.shape(), parts[k]));
      return prob;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

PressureEstimate partition_sum_pressure(const Subshift& x, const Potential& phi, const Shape& fn, int level) {
  if (fn.empty()) throw DomainError("partition sum over an empty window");
  const LocallyConstantPotential* lc = std::get_if<LocallyConstantPotential>(&phi);
  double gap = 0.0;
  if (!lc) {
    const auto& sv = std::get<SVPotential>(phi);
    const int n = level == 0 ? sv.depth() : level;
    lc = &sv.approximant(n);
    gap = sv.var_bound(n);
  }
  const Shape region = set_union(fn, minkowski_sum(fn, lc->window()));
  const auto codes = language_codes(x, region);
  if (codes.empty()) throw DomainError("empty language at F=" + to_string(fn));
  const PatternCodec codec(region, x.alphabet_size());
  const auto q = static_cast<std::uint64_t>(x.alphabet_size());
  std::vector<std::size_t> f_pos;
  for (const auto& e : fn) f_pos.push_back(*region.index_of(e));
  std::vector<std::vector<std::size_t>> reads;
  for (const auto& g : fn) {
    std::vector<std::size_t> r;
    for (const auto& h : lc->window()) r.push_back(*region.index_of(g + h));
    reads.push_back(std::move(r));
  }

  std::map<std::uint64_t, double> best;
  std::vector<Symbol> vals;
  for (auto c : codes) {
    codec.decode_into(c, vals);
    std::uint64_t key = 0;
    for (auto p : f_pos) key = key * q + vals[p];
    double s = 0.0;
    for (const auto& r : reads) {
      std::uint64_t hc = 0;
      for (auto p : r) hc = hc * q + vals[p];
      s += lc->eval_code(hc);
    }
    auto [it, fresh] = best.try_emplace(key, s);
    if (!fresh) it->second = std::max(it->second, s);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& [_, s] : best) top = std::max(top, s);
  double acc = 0.0;
  for (const auto& [_, s] : best) acc += std::exp(s - top);
  const double value = (top + std::log(acc)) / static_cast<double>(fn.size());

  PressureEstimate out;
  out.method = PressureMethod::PartitionSum;
  out.window = fn;
  out.value = value - 0.5 * gap;
  out.error = 0.5 * gap;
  return out;
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(j, i) = p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - (i == j ? 1.0 : 0.0);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(b);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::max(0.0, pi(i));
  const double z = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= z;
  return out;
}

ScanResult variational_scan(const Subshift& x, const LocallyConstantPotential& phi, int candidates,
                            std::uint64_t seed) {
  if (candidates < 1) throw DomainError("variational scan needs at least one candidate");
  const TransferResult tr = transfer_pressure(x, phi);
  const MarkovChain& base = tr.measure.chain();
  const std::size_t m = base.states.size();

  // Edge values on the maximizing class.
  const TransferGraph tg = build_transfer_graph(x, phi);
  std::vector<std::vector<double>> value(m, std::vector<double>(m, 0.0));
  std::vector<std::vector<char>> allowed(m, std::vector<char>(m, 0));
  for (const auto& e : tg.edges) {
    auto i = base.index_of(tg.states[e.from]);
    auto j = base.index_of(tg.states[e.to]);
    if (!i || !j) continue;
    value[*i][*j] = e.log_weight;
    allowed[*i][*j] = 1;
  }

  ScanResult out;
  out.best.method = PressureMethod::VariationalLowerBound;
  out.best.window = tr.pressure.window;
  out.best.value = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < candidates; ++c) {
    RandomStream rng = RandomStream::substream(seed, "variational_scan", static_cast<std::uint64_t>(c));
    const double u = rng.uniform();
    const double t = u * u * u;
    std::vector<std::vector<double>> p(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> r(m, 0.0);
      double rs = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (!allowed[i][j]) continue;
        r[j] = rng.uniform() + 1e-12;
        rs += r[j];
      }
      for (std::size_t j = 0; j < m; ++j) p[i][j] = (1.0 - t) * base.transition[i][j] + t * r[j] / rs;
    }
    const auto pi = stationary_distribution(p);
    double integral = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (p[i][j] > 0.0) integral += pi[i] * p[i][j] * value[i][j];
    const double score = entropy_of(pi, p) + integral;
    out.scores.push_back(score);
    out.best.value = std::max(out.best.value, score);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Symbol> sample_conditioned(const MarkovChain& chain, Coord lo, std::size_t len,
                                       const std::map<Coord, Symbol>& fixed, RandomStream& rng) {
  const auto k = static_cast<std::size_t>(chain.order);
  const std::size_t total = std::max(len, k);
  const std::size_t n = chain.states.size();
  const auto q = static_cast<std::size_t>(chain.alphabet_size);
  std::vector<int> want(total, -1);
  for (const auto& [pos, s] : fixed) {
    if (pos < lo || pos >= lo + static_cast<Coord>(len)) continue;
    want[static_cast<std::size_t>(pos - lo)] = s;
  }
  std::vector<std::vector<std::optional<std::size_t>>> nxt(n, std::vector<std::optional<std::size_t>>(q));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < q; ++a) nxt[i][a] = chain.next(i, static_cast<Symbol>(a));

  // beta[t][i]: relative probability of meeting the later constraints from
  // state i ending at position t.
  std::vector<std::vector<double>> beta(total, std::vector<double>(n, 0.0));
  beta[total - 1].assign(n, 1.0);
  for (std::size_t t = total - 1; t-- > k - 1;) {
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t a = 0; a < q; ++a) {
        if (want[t + 1] >= 0 && static_cast<std::size_t>(want[t + 1]) != a) continue;
        if (!nxt[i][a]) continue;
        s += chain.transition[i][*nxt[i][a]] * beta[t + 1][*nxt[i][a]];
      }
      beta[t][i] = s;
      top = std::max(top, s);
    }
    if (top > 0.0)
      for (auto& v : beta[t]) v /= top;
  }

  std::vector<double> w(n, 0.0);
  const PatternCodec codec(Shape::interval(0, static_cast<Coord>(k)), chain.alphabet_size);
  std::vector<Symbol> st;
  for (std::size_t i = 0; i < n; ++i) {
    codec.decode_into(chain.states[i], st);
    bool ok = true;
    for (std::size_t t = 0; t < k && ok; ++t) ok = want[t] < 0 || want[t] == st[t];
    if (ok) w[i] = chain.stationary[i] * beta[k - 1][i];
  }
  if (std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; }))
    throw DomainError("conditioning event has probability zero");

  std::vector<Symbol> out(total);
  std::size_t cur = rng.categorical(w);
  codec.decode_into(chain.states[cur], st);
  std::copy(st.begin(), st.end(), out.begin());
  std::vector<double> pw(q);
  for (std::size_t t = k; t < total; ++t) {
    for (std::size_t a = 0; a < q; ++a) {
      pw[a] = 0.0;
      if (want[t] >= 0 && static_cast<std::size_t>(want[t]) != a) continue;
      if (!nxt[cur][a]) continue;
      pw[a] = chain.transition[cur][*nxt[cur][a]] * beta[t][*nxt[cur][a]];
    }
    const std::size_t a = rng.categorical(pw);
    out[t] = static_cast<Symbol>(a);
    cur = *nxt[cur][a];
  }
  out.resize(len);
  return out;
}

double smb_estimate(const EquilibriumMeasure& mu, const Potential& phi, int n, int samples, std::uint64_t seed) {
  if (n < 1 || samples < 1) throw DomainError("smb_estimate needs positive n and samples");
  const MarkovChain& chain = mu.chain();
  const LocallyConstantPotential* lc = std::get_if<LocallyConstantPotential>(&phi);
  if (!lc) lc = &std::get<SVPotential>(phi).approximant(std::get<SVPotential>(phi).depth());
  const Coord hmin = lc->window().lower().x();
  const Coord hmax = lc->window().upper().x();
  const Coord lo = std::min<Coord>(0, hmin);
  const Coord hi = std::max<Coord>(n - 1, n - 1 + hmax);
  const auto len = static_cast<std::size_t>(hi - lo + 1);

  double acc = 0.0;
  for (int s = 0; s < samples; ++s) {
    RandomStream rng = RandomStream::substream(seed, "smb", static_cast<std::uint64_t>(s));
    const auto x = sample_conditioned(chain, lo, len, {}, rng);
    auto read = [&](const Element& e) { return x[static_cast<std::size_t>(e.x() - lo)]; };
    double birkhoff = 0.0;
    for (Coord g = 0; g < n; ++g) birkhoff += lc->at(read, Element::z1(g));
    const std::vector<Symbol> word(x.begin() + (0 - lo), x.begin() + (n - lo));
    acc += (birkhoff - log_cylinder_word(chain, word)) / n;
  }
  return acc / samples;
}

double gibbs_conditional_deviation(const Subshift& x, const LocallyConstantPotential& phi,
                                   const EquilibriumMeasure& mu, const Shape& f, int margin) {
  const Shape region = minkowski_sum(f, symmetric_box(margin, f.dim()));
  const Shape ring = set_difference(region, f);
  const Shape terms = minkowski_sum(f, negate(phi.window()));
  if (!minkowski_sum(terms, phi.window()).is_subset_of(region))
    throw DomainError("margin too small for the potential window");
  const auto codes = language_codes(x, region);
  const PatternCodec codec(region, x.alphabet_size());
  const auto q = static_cast<std::uint64_t>(x.alphabet_size());
  std::vector<std::size_t> ring_pos;
  for (const auto& e : ring) ring_pos.push_back(*region.index_of(e));

  struct Entry {
    double measure;
    double log_weight;
  };
  std::map<std::uint64_t, std::vector<Entry>> groups;
  for (auto c : codes) {
    const Pattern u = codec.decode(c);
    std::uint64_t key = 0;
    for (auto p : ring_pos) key = key * q + u.values()[p];
    double s = 0.0;
    for (const auto& g : terms) s += phi.at(u, g);
    groups[key].push_back({cylinder_measure(mu, u), s});
  }
  double worst = 0.0;
  for (const auto& [_, entries] : groups) {
    double mass = 0.0;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
      mass += e.measure;
      top = std::max(top, e.log_weight);
    }
    if (mass <= 0.0) continue;
    double z = 0.0;
    for (const auto& e : entries) z += std::exp(e.log_weight - top);
    for (const auto& e : entries) worst = std::max(worst, std::abs(e.measure / mass - std::exp(e.log_weight - top) / z));
  }
  return worst;
}

}  // namespace thermo
