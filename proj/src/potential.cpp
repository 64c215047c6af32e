#include "thermo/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "thermo/error.hpp"

namespace thermo {

namespace {

// Max over groups (same restriction to `keep`) of max - min, over all table entries.
double table_variation(const LocallyConstantPotential& phi, const Shape& keep) {
  const Shape& h = phi.window();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (keep.contains(h[i])) kept.push_back(i);
  if (kept.size() == h.size()) return 0.0;
  const PatternCodec codec(h, phi.alphabet_size());
  std::map<std::uint64_t, std::pair<double, double>> range;
  std::vector<Symbol> vals;
  const auto q = static_cast<std::uint64_t>(phi.alphabet_size());
  for (std::uint64_t c = 0; c < codec.count(); ++c) {
    codec.decode_into(c, vals);
    std::uint64_t key = 0;
    for (auto i : kept) key = key * q + vals[i];
    const double v = phi.eval_code(c);
    auto [it, fresh] = range.try_emplace(key, v, v);
    if (!fresh) {
      it->second.first = std::min(it->second.first, v);
      it->second.second = std::max(it->second.second, v);
    }
  }
  double out = 0.0;
  for (const auto& [_, r] : range) out = std::max(out, r.second - r.first);
  return out;
}

double round_up(double x) { return x == 0.0 ? x : std::nextafter(x, std::numeric_limits<double>::infinity()); }
double round_down(double x) { return x == 0.0 ? x : std::nextafter(x, -std::numeric_limits<double>::infinity()); }

}  // namespace

// ---------------------------------------------------------------------------

LocallyConstantPotential::LocallyConstantPotential(Shape window, int alphabet_size, std::vector<double> table)
    : window_(std::move(window)), q_(alphabet_size), table_(std::move(table)) {
  if (window_.empty()) throw DomainError("potential window must be nonempty");
  const PatternCodec codec(window_, q_);
  if (table_.size() != codec.count())
    throw DomainError(fmt::format("potential table has {} entries, expected {}", table_.size(), codec.count()));
  for (double v : table_)
    if (!std::isfinite(v)) throw DomainError("potential table values must be finite");
}

LocallyConstantPotential LocallyConstantPotential::zero(int dim, int alphabet_size) {
  return LocallyConstantPotential(Shape(dim, {Element::zero(dim)}), alphabet_size,
                                  std::vector<double>(static_cast<std::size_t>(alphabet_size), 0.0));
}

LocallyConstantPotential LocallyConstantPotential::single_site(int dim, std::vector<double> values) {
  const int q = static_cast<int>(values.size());
  return LocallyConstantPotential(Shape(dim, {Element::zero(dim)}), q, std::move(values));
}

LocallyConstantPotential LocallyConstantPotential::from_function(Shape window, int alphabet_size,
                                                                 const std::function<double(const Pattern&)>& f) {
  const PatternCodec codec(window, alphabet_size);
  std::vector<double> table(codec.count());
  for (std::uint64_t c = 0; c < codec.count(); ++c) table[c] = f(codec.decode(c));
  return LocallyConstantPotential(std::move(window), alphabet_size, std::move(table));
}

double LocallyConstantPotential::eval(const Pattern& local) const {
  if (local.shape() != window_) throw DomainError("potential evaluated on a pattern outside its window");
  std::uint64_t code = 0;
  for (auto s : local.values()) code = code * static_cast<std::uint64_t>(q_) + s;
  return table_[code];
}

double LocallyConstantPotential::at(const std::function<Symbol(const Element&)>& read, const Element& g) const {
  std::uint64_t code = 0;
  for (const auto& h : window_) {
    const Symbol s = read(g + h);
    if (s >= q_) throw DomainError("symbol outside the potential's alphabet");
    code = code * static_cast<std::uint64_t>(q_) + s;
  }
  return table_[code];
}

double LocallyConstantPotential::at(const PointApprox& x, const Element& g) const {
  return at([&](const Element& e) { return x.at(e); }, g);
}

double LocallyConstantPotential::at(const Pattern& u, const Element& g) const {
  return at([&](const Element& e) { return u.at(e); }, g);
}

double LocallyConstantPotential::max_value() const { return *std::max_element(table_.begin(), table_.end()); }
double LocallyConstantPotential::min_value() const { return *std::min_element(table_.begin(), table_.end()); }
double LocallyConstantPotential::sup_norm() const { return std::max(std::abs(max_value()), std::abs(min_value())); }

LocallyConstantPotential LocallyConstantPotential::plus_constant(double c) const {
  auto t = table_;
  for (auto& v : t) v += c;
  return LocallyConstantPotential(window_, q_, std::move(t));
}

LocallyConstantPotential LocallyConstantPotential::shifted_by(const Element& g) const {
  return LocallyConstantPotential(translate_left(window_, g), q_, table_);
}

// ---------------------------------------------------------------------------

SVPotential::SVPotential(int dim, int alphabet_size, int start_radius, std::vector<LocallyConstantPotential> approximants,
                         std::vector<double> var_bounds, double tail_ratio)
    : dim_(dim),
      q_(alphabet_size),
      start_radius_(start_radius),
      approximants_(std::move(approximants)),
      var_bounds_(std::move(var_bounds)),
      tail_ratio_(tail_ratio) {
  if (start_radius_ < 0) throw DomainError("start radius must be nonnegative");
  if (approximants_.empty()) throw DomainError("SV potential needs at least one approximant");
  if (approximants_.size() != var_bounds_.size()) throw DomainError("one variation bound per approximant");
  if (!(tail_ratio_ >= 0.0 && tail_ratio_ < 1.0)) throw DomainError("tail ratio must lie in [0, 1)");
  for (std::size_t n = 0; n < approximants_.size(); ++n) {
    const auto& a = approximants_[n];
    if (a.dim() != dim_ || a.alphabet_size() != q_) throw DomainError("approximant does not match the potential");
    if (!a.window().is_subset_of(exhaustive(static_cast<int>(n) + 1)))
      throw DomainError(fmt::format("approximant {} depends on cells outside E_{}", n + 1, n + 1));
    if (!(var_bounds_[n] >= 0.0)) throw DomainError("variation bounds must be nonnegative");
  }
}

SVPotential SVPotential::geometric(double beta, int depth) {
  if (depth < 1) throw DomainError("depth must be positive");
  std::vector<LocallyConstantPotential> approx;
  std::vector<double> bounds;
  for (int n = 1; n <= depth; ++n) {
    const double tail = std::pow(4.0, -n);
    approx.push_back(LocallyConstantPotential::from_function(Shape::interval(0, n + 1), 2, [&](const Pattern& u) {
      double v = beta * u.values()[0];
      for (int k = 1; k <= n; ++k) v += 3.0 * std::pow(4.0, -k) * u.values()[static_cast<std::size_t>(k)];
      return v + tail;
    }));
    bounds.push_back(tail);
  }
  return SVPotential(1, 2, 1, std::move(approx), std::move(bounds), 0.25);
}

SVPotential SVPotential::from_locally_constant(const LocallyConstantPotential& phi, int start_radius, int depth) {
  if (depth < 1) throw DomainError("depth must be positive");
  const int d = phi.dim();
  const Subshift full = Subshift::full(d, Alphabet::digits(phi.alphabet_size()));
  std::vector<LocallyConstantPotential> approx;
  std::vector<double> bounds;
  for (int n = 1; n <= depth; ++n) {
    const Shape en = symmetric_box(start_radius + n - 1, d);
    const Shape inner = set_intersection(phi.window(), en);
    if (inner == phi.window()) {
      approx.push_back(phi);
      bounds.push_back(0.0);
      continue;
    }
    const Shape w = inner.empty() ? Shape(d, {Element::zero(d)}) : inner;
    std::vector<std::size_t> pos;
    for (const auto& e : inner) pos.push_back(*phi.window().index_of(e));
    const PatternCodec outer(phi.window(), phi.alphabet_size());
    const PatternCodec small(w, phi.alphabet_size());
    std::vector<double> table(small.count(), -std::numeric_limits<double>::infinity());
    std::vector<Symbol> vals;
    for (std::uint64_t c = 0; c < outer.count(); ++c) {
      outer.decode_into(c, vals);
      std::uint64_t key = 0;
      for (auto p : pos) key = key * static_cast<std::uint64_t>(phi.alphabet_size()) + vals[p];
      if (inner.empty()) {
        for (auto& t : table) t = std::max(t, phi.eval_code(c));
      } else {
        table[key] = std::max(table[key], phi.eval_code(c));
      }
    }
    approx.emplace_back(w, phi.alphabet_size(), std::move(table));
    bounds.push_back(variation(phi, en, full));
  }
  if (bounds.back() != 0.0) throw DomainError("the deepest exhaustive box must contain the potential's window");
  return SVPotential(d, phi.alphabet_size(), start_radius, std::move(approx), std::move(bounds), 0.0);
}

Shape SVPotential::exhaustive(int n) const {
  if (n < 1) throw DomainError("exhaustive sequence is indexed from 1");
  return symmetric_box(start_radius_ + n - 1, dim_);
}

double SVPotential::shell_size(int n) const {
  const double rho = start_radius_ + n - 1;
  return dim_ == 1 ? 2.0 : 8.0 * rho + 8.0;
}

const LocallyConstantPotential& SVPotential::approximant(int n) const {
  if (n < 1 || n > depth()) throw DomainError(fmt::format("approximant {} requested, depth is {}", n, depth()));
  return approximants_[static_cast<std::size_t>(n - 1)];
}

double SVPotential::var_bound(int n) const {
  if (n < 1) throw DomainError("exhaustive sequence is indexed from 1");
  if (n <= depth()) return var_bounds_[static_cast<std::size_t>(n - 1)];
  return var_bounds_.back() * std::pow(tail_ratio_, n - depth());
}

double SVPotential::tail_norm(int n) const {
  if (n < 1) throw DomainError("exhaustive sequence is indexed from 1");
  double sum = 0.0;
  for (int k = n; k <= depth(); ++k) sum += shell_size(k) * var_bound(k);
  const double vd = var_bounds_.back();
  if (vd == 0.0) return sum;
  // Geometric continuation: var_bound(D + j) = vd * r^j for j >= J.
  const double r = tail_ratio_;
  const int big_d = depth();
  const int j0 = std::max(1, n - big_d);
  const double rj = std::pow(r, j0);
  const double geo = rj / (1.0 - r);
  if (dim_ == 1) return round_up(sum + 2.0 * vd * geo);
  const double rho_d = start_radius_ + big_d - 1;
  const double linear = rj * (j0 / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
  return round_up(sum + vd * ((8.0 * rho_d + 8.0) * geo + 8.0 * linear));
}

double SVPotential::approximant_error(int n) const {
  const double e1 = static_cast<double>(exhaustive(1).size());
  const double en = static_cast<double>(exhaustive(n).size());
  return round_up(var_bound(n) * (e1 + en) + tail_norm(n));
}

double SVPotential::sup_norm_upper() const {
  return round_up(approximants_.front().sup_norm() + var_bounds_.front());
}

int potential_dim(const Potential& phi) {
  return std::visit([](const auto& p) { return p.dim(); }, phi);
}

// ---------------------------------------------------------------------------

double variation(const LocallyConstantPotential& phi, const Shape& f, const Subshift& x) {
  if (phi.window().is_subset_of(f)) return 0.0;
  const Shape region = set_union(f, phi.window());
  const auto codes = language_codes(x, region);
  const PatternCodec codec(region, x.alphabet_size());
  const auto q = static_cast<std::uint64_t>(x.alphabet_size());
  std::vector<std::size_t> f_pos, h_pos;
  for (const auto& e : f) f_pos.push_back(*region.index_of(e));
  for (const auto& e : phi.window()) h_pos.push_back(*region.index_of(e));
  std::map<std::uint64_t, std::pair<double, double>> range;
  std::vector<Symbol> vals;
  for (auto c : codes) {
    codec.decode_into(c, vals);
    std::uint64_t key = 0, hc = 0;
    for (auto p : f_pos) key = key * q + vals[p];
    for (auto p : h_pos) hc = hc * q + vals[p];
    const double v = phi.eval_code(hc);
    auto [it, fresh] = range.try_emplace(key, v, v);
    if (!fresh) {
      it->second.first = std::min(it->second.first, v);
      it->second.second = std::max(it->second.second, v);
    }
  }
  double out = 0.0;
  for (const auto& [_, r] : range) out = std::max(out, r.second - r.first);
  return out;
}

Bracket sv_norm(const SVPotential& phi, int up_to) {
  const auto& top = phi.approximant(up_to);
  const double vn = phi.var_bound(up_to);
  const double hi = top.max_value();
  const double lo = top.min_value();
  const double inf_lower = std::max({0.0, hi - vn, -lo});
  const double inf_upper = std::max({std::abs(hi), std::abs(lo), std::abs(hi - vn), std::abs(lo - vn)});
  const double e1 = static_cast<double>(phi.exhaustive(1).size());

  double sum_lower = 0.0;
  double sum_upper = 0.0;
  for (int n = 1; n < up_to; ++n) {
    const double var_n = table_variation(top, phi.exhaustive(n));
    sum_lower += phi.shell_size(n) * std::max(0.0, var_n - vn);
    sum_upper += phi.shell_size(n) * phi.var_bound(n);
  }
  sum_upper += phi.tail_norm(up_to);
  return Bracket{round_down(2.0 * e1 * inf_lower + sum_lower), round_up(2.0 * e1 * inf_upper + sum_upper)};
}

Bracket sv_norm(const LocallyConstantPotential& phi, int start_radius) {
  const Shape e1 = symmetric_box(start_radius, phi.dim());
  if (!phi.window().is_subset_of(e1)) throw DomainError("potential window is not inside E_1");
  const double v = 2.0 * static_cast<double>(e1.size()) * phi.sup_norm();
  return Bracket{v, v};
}

const LocallyConstantPotential& approximant(const SVPotential& phi, int n) { return phi.approximant(n); }

namespace {

struct LevelView {
  const LocallyConstantPotential* lc;
  double pointwise_gap;  // 0 <= phi_n - phi <= gap
  double sv_error;       // ||phi_n - phi||_SV upper bound
};

LevelView level_view(const Potential& phi, int level) {
  if (const auto* lc = std::get_if<LocallyConstantPotential>(&phi)) return {lc, 0.0, 0.0};
  const auto& sv = std::get<SVPotential>(phi);
  const int n = level == 0 ? sv.depth() : level;
  return {&sv.approximant(n), sv.var_bound(n), sv.approximant_error(n)};
}

}  // namespace

CocycleValue birkhoff_sum(const Potential& phi, const Shape& f, const PointApprox& x, int level) {
  const auto view = level_view(phi, level);
  double s = 0.0;
  for (const auto& g : f) s += view.lc->at(x, g);
  if (view.pointwise_gap == 0.0) return {s, 0.0};
  const double half = 0.5 * static_cast<double>(f.size()) * view.pointwise_gap;
  return {s - half, round_up(half)};
}

double pattern_sum_difference(const LocallyConstantPotential& phi, const Shape& cells, const Pattern& a,
                              const Pattern& b) {
  double s = 0.0;
  for (const auto& g : cells) s += phi.at(a, g) - phi.at(b, g);
  return s;
}

CocycleValue cocycle(const Potential& phi, const Subshift& x_space, const PointApprox& x, const PointApprox& y,
                     int level) {
  if (!(x.background() == y.background())) throw DomainError("non-homoclinic pair: backgrounds differ");
  if (!is_legal_point(x_space, x) || !is_legal_point(x_space, y))
    throw DomainError("cocycle needs points of the subshift");
  const Shape diff = x.difference_set(y);
  if (diff.empty()) return {0.0, 0.0};
  const auto view = level_view(phi, level);
  const Shape terms = minkowski_sum(diff, negate(view.lc->window()));
  double s = 0.0;
  for (const auto& g : terms) s += view.lc->at(y, g) - view.lc->at(x, g);
  return {s, view.sv_error == 0.0 ? 0.0 : round_up(static_cast<double>(diff.size()) * view.sv_error)};
}

Bracket sup_cocycle_over_cylinder(const Potential& phi, const Subshift& x_space, const Pattern& v, const Pattern& w,
                                  int level) {
  if (v.shape() != w.shape()) throw DomainError("sup cocycle needs v and w on the same shape");
  const auto view = level_view(phi, level);
  const Shape& f = v.shape();
  const Shape terms = minkowski_sum(f, negate(view.lc->window()));
  const Shape region = set_union(f, minkowski_sum(terms, view.lc->window()));
  const auto patterns = cylinder_patterns(x_space, v, region);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& u : patterns) {
    const Pattern uw = u.overlay(w);
    // Where the swap leaves the subshift the map is the identity.
    const double s = in_language(x_space, uw) ? pattern_sum_difference(*view.lc, terms, u, uw) : 0.0;
    best = std::max(best, s);
  }
  if (patterns.empty() || view.sv_error == 0.0) return {best, best};
  const double err = static_cast<double>(f.size()) * view.sv_error;
  return {round_down(best - err), round_up(best + err)};
}

}  // namespace thermo
