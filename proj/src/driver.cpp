#include "thermo/driver.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "thermo/error.hpp"
#include "thermo/group_window.hpp"

namespace thermo {

namespace {

std::string num(double v) { return fmt::format("{:.15g}", v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Shape pressure_window(int dim, Coord n) {
  return dim == 1 ? Shape::interval(0, n) : Shape::box2(0, n, 0, n);
}

std::vector<Shape> default_shapes(int dim) {
  if (dim == 1) return {Shape::interval(0, 1), Shape::interval(0, 2), Shape::interval(0, 3), Shape::interval(0, 4)};
  return {Shape::box2(0, 1, 0, 1), Shape::box2(0, 2, 0, 2)};
}

Table audit_table() { return Table{{"case", "check", "lhs", "rhs", "slack", "pass", "provenance"}, {}}; }

void append(Table& t, const AuditReport& rep, bool& failed) {
  for (const auto& ch : rep.checks) {
    t.rows.push_back({rep.case_id, ch.name, num(ch.lhs), num(ch.rhs), num(ch.slack), ch.pass ? "pass" : "FAIL",
                      ch.provenance});
    if (!ch.pass) failed = true;
  }
}

void rejected(Table& t, const std::string& id, const std::string& audit, const std::string& why) {
  t.rows.push_back({id, audit, "", "", "", "rejected", why});
}

bool is_zero_potential(const Potential& phi) {
  const auto* lc = std::get_if<LocallyConstantPotential>(&phi);
  return lc && lc->sup_norm() == 0.0;
}

// ---------------------------------------------------------------------------

CommandOutput cmd_lang(const ToolSpec& spec) {
  Table t{{"shape", "admissibility", "margin", "count", "index", "pattern"}, {}};
  const auto shapes = spec.shapes.empty() ? default_shapes(spec.subshift.dim()) : spec.shapes;
  for (const auto& f : shapes) {
    const Language lang = language(spec.subshift, f);
    const char* adm = lang.admissibility == Admissibility::Exact          ? "Exact"
                      : lang.admissibility == Admissibility::MarginStable ? "MarginStable"
                                                                          : "MarginCap";
    for (std::size_t i = 0; i < lang.patterns.size(); ++i)
      t.rows.push_back({to_string(f), adm, std::to_string(lang.margin), std::to_string(lang.patterns.size()),
                        std::to_string(i), lang.patterns[i].str(spec.subshift.alphabet())});
  }
  CommandOutput out;
  out.tables.emplace_back("lang", std::move(t));
  return out;
}

CommandOutput cmd_extender(const ToolSpec& spec, const RunFlags& flags) {
  Table t{{"case", "v", "w", "relation", "method", "radius", "witness"}, {}};
  const int radius = flags.max_radius.value_or(spec.max_radius);
  ExtenderOracle oracle(spec.subshift);
  const Alphabet& a = spec.subshift.alphabet();
  for (const auto& c : selected_cases(spec, flags)) {
    const ExtenderReport rep = oracle.compare(c.v, c.w, radius);
    std::string witness;
    if (rep.witness) witness = to_string(rep.witness->shape()) + ":" + rep.witness->str(a);
    t.rows.push_back({c.id, c.v.str(a), c.w.str(a), to_string(rep.relation), to_string(rep.method),
                      std::to_string(rep.radius), witness});
  }
  CommandOutput out;
  out.tables.emplace_back("extender", std::move(t));
  return out;
}

CommandOutput cmd_pressure(const ToolSpec& spec, const RunFlags& flags) {
  Table t{{"method", "window", "value", "error"}, {}};
  const Subshift& x = spec.subshift;
  const std::uint64_t seed = flags.seed.value_or(spec.seed);
  const LocallyConstantPotential* lc = std::get_if<LocallyConstantPotential>(&spec.potential);
  const LocallyConstantPotential* transfer_phi = lc;
  if (!lc) {
    const auto& sv = std::get<SVPotential>(spec.potential);
    transfer_phi = &sv.approximant(sv.depth());
  }
  if (x.is_1d_sft()) {
    const TransferResult tr = transfer_pressure(x, *transfer_phi);
    const double err = lc ? 0.0 : std::get<SVPotential>(spec.potential).approximant_error(
                                      std::get<SVPotential>(spec.potential).depth());
    t.rows.push_back({to_string(PressureMethod::TransferExact), "transfer", num(tr.pressure.value), num(err)});
  }
  for (auto n : spec.pressure_windows) {
    const auto est = partition_sum_pressure(x, spec.potential, pressure_window(x.dim(), n));
    t.rows.push_back({to_string(est.method), fmt::format("n={}", n), num(est.value), num(est.error)});
  }
  if (x.is_1d_sft() && spec.variational_candidates > 0) {
    const auto scan = variational_scan(x, *transfer_phi, spec.variational_candidates, seed);
    t.rows.push_back({to_string(scan.best.method), fmt::format("candidates={}", spec.variational_candidates),
                      num(scan.best.value), num(scan.best.error)});
  }
  if (spec.smb_length > 0 && spec.smb_samples > 0) {
    if (auto mu = default_measure(spec); mu && mu->kind() == EquilibriumMeasure::Kind::Markov) {
      const double v = smb_estimate(*mu, spec.potential, spec.smb_length, spec.smb_samples, seed);
      t.rows.push_back({to_string(PressureMethod::SMBEstimate),
                        fmt::format("n={};samples={}", spec.smb_length, spec.smb_samples), num(v), ""});
    }
  }
  CommandOutput out;
  out.tables.emplace_back("pressure", std::move(t));
  return out;
}

CommandOutput cmd_equilibrium(const ToolSpec& spec) {
  const auto mu = default_measure(spec);
  if (!mu) throw DomainError(fmt::format("no equilibrium measure is available for {}", spec.subshift.name()));
  CommandOutput out;
  Table summary{{"kind", "pressure", "entropy", "integral"},
                {{to_string(mu->kind()), num(mu->pressure()), num(mu->entropy()), num(mu->integral())}}};
  out.tables.emplace_back("measure", std::move(summary));
  if (mu->kind() == EquilibriumMeasure::Kind::Markov) {
    const auto& ch = mu->chain();
    Table states{{"state", "stationary"}, {}};
    Table trans{{"from", "to", "probability"}, {}};
    for (std::size_t i = 0; i < ch.states.size(); ++i) {
      states.rows.push_back({ch.state_word(i), num(ch.stationary[i])});
      for (std::size_t j = 0; j < ch.states.size(); ++j)
        if (ch.transition[i][j] > 0.0)
          trans.rows.push_back({ch.state_word(i), ch.state_word(j), num(ch.transition[i][j])});
    }
    out.tables.emplace_back("states", std::move(states));
    out.tables.emplace_back("transition", std::move(trans));
  }
  out.files.emplace_back("measure.json", measure_to_json(*mu).dump(2) + "\n");
  return out;
}

CommandOutput cmd_audit(const ToolSpec& spec, const RunFlags& flags) {
  Table t = audit_table();
  bool failed = false;
  const int radius = flags.max_radius.value_or(spec.max_radius);
  const std::uint64_t seed = flags.seed.value_or(spec.seed);
  const auto mu = default_measure(spec);
  const auto cases = selected_cases(spec, flags);
  for (const auto& cs : cases) {
    if (!mu) {
      rejected(t, cs.id, "all", "no equilibrium measure is available for this subshift");
      continue;
    }
    const AuditCase c = make_case(cs.id, spec.subshift, spec.potential, cs.v, cs.w, *mu, radius);
    auto run = [&](const std::string& name, auto&& fn) {
      try {
        append(t, fn(), failed);
      } catch (const CaseRejected& e) {
        rejected(t, cs.id, name, e.what());
      }
    };
    run("theorem1", [&] { return audit_theorem1(c, spec.tolerances); });
    if (std::holds_alternative<LocallyConstantPotential>(spec.potential))
      run("corollary_lc", [&] { return audit_corollary_lc(c, spec.tolerances); });
    if (is_zero_potential(spec.potential)) run("mme", [&] { return audit_mme(c, spec.tolerances); });
    run("obs_thm3", [&] { return audit_obs_thm3(c, 0, spec.tolerances); });
    if (spec.lrn_max_n > 0 && spec.subshift.dim() == 1) {
      LrnOptions lo;
      lo.max_n = spec.lrn_max_n;
      lo.samples = spec.lrn_samples;
      lo.seed = seed;
      run("lrn", [&] { return audit_lrn(c, lo, spec.tolerances); });
      if (c.extender.relation == ExtenderRelation::Equal)
        run("conformal_equality", [&] { return audit_conformal_equality(c, lo, spec.tolerances); });
    }
  }
  if (spec.stirling)
    append(t, audit_stirling(spec.stirling->a, spec.stirling->b, spec.stirling->d, spec.stirling->options), failed);

  CommandOutput out;
  Table summary{{"checks", "failed", "rejected"}, {}};
  std::size_t checks = 0, fails = 0, rej = 0;
  for (const auto& row : t.rows) {
    if (row[5] == "rejected")
      ++rej;
    else
      ++checks;
    if (row[5] == "FAIL") ++fails;
  }
  summary.rows.push_back({std::to_string(checks), std::to_string(fails), std::to_string(rej)});
  out.tables.emplace_back("audit", std::move(t));
  out.tables.emplace_back("summary", std::move(summary));
  out.exit_code = failed ? 1 : 0;
  return out;
}

std::string cell_cols(const Element& e, std::string& y) {
  y = e.dim == 2 ? std::to_string(e.y()) : "";
  return std::to_string(e.x());
}

CommandOutput cmd_tile(const ToolSpec& spec) {
  if (!spec.tiling) throw DomainError("spec has no 'tiling' section");
  const TilingSpec& ts = *spec.tiling;
  Table t{{"kind", "index", "x", "y", "info"}, {}};
  std::string y;
  const BoxTiling bt = box_tiling(ts.window, ts.block);
  for (std::size_t i = 0; i < bt.centers.size(); ++i) {
    const std::string x = cell_cols(bt.centers[i], y);
    t.rows.push_back({"tile_center", std::to_string(i), x, y, fmt::format("block={}", ts.block)});
  }
  if (ts.sparse_against) {
    const AlmostPartition ap = almost_partition(*ts.sparse_against, ts.epsilon, ts.window);
    for (std::size_t i = 0; i < ap.parts.size(); ++i) {
      const auto& part = ap.parts[i];
      for (const auto& e : part.elements) {
        const std::string x = cell_cols(e, y);
        t.rows.push_back({"part", std::to_string(i), x, y, fmt::format("residue={}", to_string(part.residue))});
      }
    }
    t.rows.push_back({"coverage", "", "", "", ap.coverage.str()});
  }
  CommandOutput out;
  out.tables.emplace_back("tile", std::move(t));
  return out;
}

CommandOutput cmd_stirling(const ToolSpec& spec) {
  const StirlingSpec ss = spec.stirling.value_or(StirlingSpec{});
  Table t = audit_table();
  bool failed = false;
  append(t, audit_stirling(ss.a, ss.b, ss.d, ss.options), failed);
  const double cstar = stirling_threshold(ss.a, ss.b, ss.d, ss.options.grid);
  t.rows.push_back({"stirling", "threshold", num(cstar), "", "", "info", fmt::format("grid={}", ss.options.grid)});
  CommandOutput out;
  out.tables.emplace_back("stirling", std::move(t));
  out.exit_code = failed ? 1 : 0;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out;
}

std::string Table::to_jsonl() const {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < columns.size(); ++i) obj[columns[i]] = i < r.size() ? r[i] : "";
    out += obj.dump() + "\n";
  }
  return out;
}

std::vector<CaseSpec> selected_cases(const ToolSpec& spec, const RunFlags& flags) {
  std::vector<CaseSpec> all = spec.cases;
  if (spec.pair_scan > 0) {
    const Alphabet& a = spec.subshift.alphabet();
    for (Coord k = 1; k <= spec.pair_scan; ++k) {
      const Language lang = language(spec.subshift, Shape::interval(0, k));
      for (const auto& v : lang.patterns)
        for (const auto& w : lang.patterns)
          if (v != w) all.push_back({fmt::format("scan:{}>{}", v.str(a), w.str(a)), v, w});
    }
  }
  if (!flags.cases.empty()) {
    const std::set<std::string> keep(flags.cases.begin(), flags.cases.end());
    std::erase_if(all, [&](const CaseSpec& c) { return !keep.contains(c.id); });
  }
  std::stable_sort(all.begin(), all.end(), [](const CaseSpec& l, const CaseSpec& r) { return l.id < r.id; });
  return all;
}

CommandOutput run_command(const std::string& command, const ToolSpec& spec, const RunFlags& flags) {
  if (command == "lang") return cmd_lang(spec);
  if (command == "extender") return cmd_extender(spec, flags);
  if (command == "pressure") return cmd_pressure(spec, flags);
  if (command == "equilibrium") return cmd_equilibrium(spec);
  if (command == "audit") return cmd_audit(spec, flags);
  if (command == "tile") return cmd_tile(spec);
  if (command == "stirling") return cmd_stirling(spec);
  throw DomainError(fmt::format("unknown command '{}'", command));
}

}  // namespace thermo
