#pragma once

// Orchestration of generate / solve / verify / diagnose runs: parses the
// textual domain and data descriptions, drives the modules, and emits the
// report artifacts. All output is deterministic for a fixed config.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "capacity.hpp"
#include "diagnostics.hpp"
#include "domains.hpp"
#include "io.hpp"
#include "solver.hpp"

namespace nplap {

struct RunConfig {
  enum class Command { generate, solve, verify, diagnose, full };
  Command command = Command::full;
  std::string domain = "grid:8";  // kind:n[:h] or a file path
  double p = 2.0;
  std::string data = "dipole";    // data kind or an inline JSON object
  std::uint64_t seed = 0;
  double tol = 1e-10;
  long max_iter = 100000;
  bool project_compat = false;
  std::string out = ".";
  bool format_json = true;
  bool format_csv = true;
  int threads = 1;
  double c_budget = 1e3;
};

inline RunConfig::Command parse_command(const std::string& s) {
  if (s == "generate") return RunConfig::Command::generate;
  if (s == "solve") return RunConfig::Command::solve;
  if (s == "verify") return RunConfig::Command::verify;
  if (s == "diagnose") return RunConfig::Command::diagnose;
  if (s == "full") return RunConfig::Command::full;
  throw UsageError("unknown command '" + s + "'");
}

/// kind:n[:h] for generated families (the number is the level for
/// sierpinski); anything with a slash or a .json suffix is a file.
inline DomainSpec parse_domain_spec(const std::string& s) {
  DomainSpec spec;
  const bool looks_like_file =
      s.find('/') != std::string::npos ||
      (s.size() > 5 && s.substr(s.size() - 5) == ".json");
  if (looks_like_file) {
    spec.kind = DomainSpec::Kind::file;
    spec.path = s;
    return spec;
  }
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t colon = s.find(':', start);
    parts.push_back(s.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  const std::string& kind = parts[0];
  if (kind == "path")
    spec.kind = DomainSpec::Kind::path;
  else if (kind == "grid")
    spec.kind = DomainSpec::Kind::grid;
  else if (kind == "lshape")
    spec.kind = DomainSpec::Kind::lshape;
  else if (kind == "annulus_grid")
    spec.kind = DomainSpec::Kind::annulus_grid;
  else if (kind == "sierpinski")
    spec.kind = DomainSpec::Kind::sierpinski;
  else
    throw UsageError("unknown domain kind '" + kind + "'");
  if (parts.size() < 2 || parts.size() > 3)
    throw UsageError("domain '" + s + "': expected kind:n[:h]");
  try {
    int size = std::stoi(parts[1]);
    if (spec.kind == DomainSpec::Kind::sierpinski)
      spec.level = size;
    else
      spec.n = size;
    if (parts.size() == 3) spec.h = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("domain '" + s + "': size and spacing must be numeric");
  }
  return spec;
}

/// Named data kind, or an inline JSON object keyed by boundary node id.
inline NodeField parse_boundary_data(const Domain& dom, const std::string& s,
                                     std::uint64_t seed) {
  if (s == "dipole") return make_boundary_data(dom, DataKind::dipole, seed);
  if (s == "constant_sign_patch")
    return make_boundary_data(dom, DataKind::constant_sign_patch, seed);
  if (s == "random_compatible")
    return make_boundary_data(dom, DataKind::random_compatible, seed);
  if (!s.empty() && s[0] == '{') {
    json j;
    try {
      j = json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(std::string("boundary data: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("boundary data must be an object");
    NodeField f = NodeField::zeros(dom);
    for (auto it = j.begin(); it != j.end(); ++it) {
      NodeId i = dom.graph().require(it.key());
      if (!dom.is_boundary(i))
        throw UsageError("boundary data for non-boundary node '" + it.key() +
                         "'");
      if (!it.value().is_number())
        throw UsageError("boundary data for '" + it.key() +
                         "' must be a number");
      f[i] = it.value().get<double>();
    }
    return f;
  }
  throw UsageError("unknown boundary data '" + s +
                   "' (expected dipole, constant_sign_patch, "
                   "random_compatible, or a JSON object)");
}

namespace detail {

inline std::string node_name(const Domain& dom, NodeId i) {
  return dom.graph().node(i).name;
}

inline json field_to_json(const Domain& dom, const NodeField& u,
                          bool boundary_only = false) {
  json out;
  for (NodeId i = 0; i < dom.node_count(); ++i) {
    if (dom.is_exterior(i)) continue;
    if (boundary_only && !dom.is_boundary(i)) continue;
    out[node_name(dom, i)] = u[i];
  }
  return out;
}

inline json solution_to_json(const RunConfig& cfg, const Domain& dom,
                             const NeumannProblem& prob, const Solution& sol) {
  json out;
  out["domain"] = cfg.domain;
  out["p"] = prob.p;
  out["data"] = cfg.data;
  out["seed"] = cfg.seed;
  out["converged"] = sol.converged;
  out["method"] = sol.method;
  out["iterations"] = sol.iterations;
  out["residual"] = sol.residual;
  Residual el = euler_lagrange_residual(prob, sol.u);
  out["interior_residual"] = el.interior_max;
  out["boundary_residual"] = el.boundary_max;
  out["energy"] = sol.energy;
  out["dirichlet_part"] = sol.dirichlet_part;
  out["boundary_part"] = sol.boundary_part;
  out["u"] = field_to_json(dom, sol.u);
  out["f"] = field_to_json(dom, prob.f, true);
  json quot = json::array();
  const MetricGraph& g = dom.graph();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    json row;
    row["a"] = g.node(g.edge(e).a).name;
    row["b"] = g.node(g.edge(e).b).name;
    row["quotient"] = sol.gradient.edge_quotients[e];
    quot.push_back(std::move(row));
  }
  out["edge_quotients"] = std::move(quot);
  return out;
}

inline json degiorgi_to_json(const Domain& dom, const DeGiorgiReport& rep) {
  json out;
  out["p"] = rep.p;
  out["c_budget"] = rep.c_budget;
  out["max_ratio"] = rep.max_ratio;
  out["hard_failure"] = rep.hard_failure;
  out["pass"] = rep.pass;
  json rows = json::array();
  for (const DeGiorgiRow& r : rep.rows) {
    json row;
    row["x"] = node_name(dom, r.tuple.x);
    row["r"] = r.tuple.r;
    row["R"] = r.tuple.R;
    row["k"] = r.tuple.k;
    row["lhs"] = r.lhs;
    row["rhs_volume"] = r.rhs_volume;
    row["rhs_boundary"] = r.rhs_boundary;
    row["ratio"] = r.ratio;
    row["vacuous"] = r.vacuous;
    row["hard_failure"] = r.hard_failure;
    rows.push_back(std::move(row));
  }
  out["rows"] = std::move(rows);
  return out;
}

inline std::string degiorgi_to_csv(const Domain& dom,
                                   const DeGiorgiReport& rep) {
  std::string out =
      "x,r,R,k,lhs,rhs_volume,rhs_boundary,ratio,vacuous,hard_failure\n";
  for (const DeGiorgiRow& r : rep.rows) {
    out += node_name(dom, r.tuple.x);
    out += ',' + fmt_g17(r.tuple.r) + ',' + fmt_g17(r.tuple.R) + ',' +
           fmt_g17(r.tuple.k) + ',' + fmt_g17(r.lhs) + ',' +
           fmt_g17(r.rhs_volume) + ',' + fmt_g17(r.rhs_boundary) + ',' +
           fmt_g17(r.ratio) + ',' + (r.vacuous ? "1" : "0") + ',' +
           (r.hard_failure ? "1" : "0") + '\n';
  }
  return out;
}

inline json minimizer_set_to_json(const MinimizerSetReport& rep) {
  json out;
  out["pass"] = rep.pass;
  out["min_energy"] = rep.min_energy;
  out["max_grad_sup_diff"] = rep.max_grad_sup_diff;
  out["max_boundary_spread"] = rep.max_boundary_spread;
  out["max_lattice_gap"] = rep.max_lattice_gap;
  out["max_convex_gap"] = rep.max_convex_gap;
  out["tol_grad_diff"] = rep.tol_grad_diff;
  out["tol_boundary"] = rep.tol_boundary;
  out["tol_energy_gap"] = rep.tol_energy_gap;
  if (!rep.witness.empty()) out["witness"] = rep.witness;
  json rows = json::array();
  for (const MinimizerPairRow& r : rep.rows) {
    json row;
    row["i"] = r.i;
    row["j"] = r.j;
    row["grad_sup_diff"] = r.grad_sup_diff;
    row["boundary_spread"] = r.boundary_spread;
    row["lattice_gap"] = r.lattice_gap;
    row["convex_gap"] = r.convex_gap;
    rows.push_back(std::move(row));
  }
  out["rows"] = std::move(rows);
  return out;
}

inline json oscillation_to_json(const Domain& dom,
                                const std::vector<OscillationReport>& reps,
                                const std::string& note, bool pass) {
  json out;
  out["pass"] = pass;
  if (!note.empty()) out["note"] = note;
  json centers = json::array();
  for (const OscillationReport& rep : reps) {
    json c;
    c["x"] = node_name(dom, rep.x);
    c["applicable"] = rep.applicable;
    if (!rep.note.empty()) c["note"] = rep.note;
    c["vacuous"] = rep.vacuous;
    c["osc_monotone"] = rep.osc_monotone;
    c["theta_fit"] = rep.theta_fit;
    c["theta0"] = rep.theta0;
    c["pass"] = rep.pass;
    json steps = json::array();
    for (const OscillationStep& s : rep.steps) {
      json row;
      row["R"] = s.R;
      row["M"] = s.M;
      row["m"] = s.m;
      row["osc"] = s.osc;
      row["nu"] = s.nu;
      row["kappa_nu"] = s.kappa_nu;
      row["trigger_ratio"] = s.trigger_ratio;
      row["d"] = s.d;
      row["lambda1"] = s.lambda1;
      row["lambda2"] = s.lambda2;
      row["lambda"] = s.lambda;
      row["contraction"] = s.contraction;
      steps.push_back(std::move(row));
    }
    c["steps"] = std::move(steps);
    centers.push_back(std::move(c));
  }
  out["centers"] = std::move(centers);
  return out;
}

inline std::string oscillation_to_csv(
    const Domain& dom, const std::vector<OscillationReport>& reps) {
  std::string out =
      "x,R,M,m,osc,nu,kappa_nu,trigger_ratio,d,lambda1,lambda2,lambda,"
      "contraction\n";
  for (const OscillationReport& rep : reps) {
    for (const OscillationStep& s : rep.steps) {
      out += node_name(dom, rep.x);
      out += ',' + fmt_g17(s.R) + ',' + fmt_g17(s.M) + ',' + fmt_g17(s.m) +
             ',' + fmt_g17(s.osc) + ',' + std::to_string(s.nu) + ',' +
             fmt_g17(s.kappa_nu) + ',' + fmt_g17(s.trigger_ratio) + ',' +
             fmt_g17(s.d) + ',' + fmt_g17(s.lambda1) + ',' +
             fmt_g17(s.lambda2) + ',' + fmt_g17(s.lambda) + ',' +
             fmt_g17(s.contraction) + '\n';
    }
  }
  return out;
}

inline json subminimizer_to_json(const Domain& dom,
                                 const std::vector<SubminimizerReport>& reps,
                                 const std::vector<std::string>& skipped,
                                 bool pass) {
  json out;
  out["pass"] = pass;
  json centers = json::array();
  for (const SubminimizerReport& rep : reps) {
    json c;
    c["x"] = node_name(dom, rep.x);
    c["r"] = rep.r;
    c["p"] = rep.p;
    c["trials"] = rep.trials;
    c["max_deficit"] = rep.max_deficit;
    c["violations"] = static_cast<std::int64_t>(rep.violations.size());
    c["pass"] = rep.pass;
    centers.push_back(std::move(c));
  }
  out["centers"] = std::move(centers);
  json sk = json::array();
  for (const std::string& s : skipped) sk.push_back(s);
  out["skipped"] = std::move(sk);
  return out;
}

inline json natural_boundary_to_json(const Domain& dom,
                                     const NaturalBoundaryReport& rep) {
  json out;
  out["tol"] = rep.tol;
  out["tol_f"] = rep.tol_f;
  out["violations"] = rep.violations;
  out["pass"] = rep.pass;
  json entries = json::array();
  for (const NaturalBoundaryEntry& e : rep.entries) {
    json row;
    row["x"] = node_name(dom, e.x);
    row["r"] = e.r;
    row["osc"] = e.osc;
    row["f_mass_half"] = e.f_mass_half;
    row["breach"] = e.breach;
    entries.push_back(std::move(row));
  }
  out["entries"] = std::move(entries);
  return out;
}

inline json diagnostics_to_json(const Domain& dom, const RunConfig& cfg) {
  SpaceDiagnostics d = diagnose_space(dom, cfg.p, 24, cfg.seed);
  json out;
  out["mass_exponent"] = d.mass_exponent;
  out["mass_constant"] = d.mass_constant;
  out["doubling_constant"] = d.doubling_constant;
  out["poincare_constant"] = d.poincare_constant;
  out["density_constant"] = d.density_constant;
  out["perimeter_reg_constant"] = d.perimeter_reg_constant;
  out["ahlfors_scale"] = d.ahlfors_scale;

  json caps = json::array();
  const double r = dom.diameter() / 8.0;
  if (r >= dom.resolution()) {
    std::vector<NodeId> centers = sample_nodes(dom.interior(), 4);
    for (NodeId x : centers) {
      if (ball(dom, x, r).empty()) continue;
      CapacityBallBounds cb = capacity_ball_bounds(dom, x, r, cfg.p);
      json row;
      row["x"] = node_name(dom, x);
      row["r"] = r;
      row["capacity"] = cb.capacity;
      row["c_lower"] = cb.c_lower;
      row["c_upper"] = cb.c_upper;
      caps.push_back(std::move(row));
    }
  }
  out["capacity_samples"] = std::move(caps);
  return out;
}

struct ArtifactWriter {
  std::filesystem::path dir;
  std::ostream* echo = nullptr;

  void json_file(const std::string& name, const json& j, bool enabled) const {
    if (!enabled) return;
    const std::string path = (dir / name).string();
    write_text_file(path, dump_json(j));
    if (echo) *echo << "wrote " << path << "\n";
  }
  void csv_file(const std::string& name, const std::string& text,
                bool enabled) const {
    if (!enabled) return;
    const std::string path = (dir / name).string();
    write_text_file(path, text);
    if (echo) *echo << "wrote " << path << "\n";
  }
};

}  // namespace detail

/// Executes one configured run. Returns 0 when every emitted verdict passes,
/// 2 when some theory check fails on a converged solution (a breach witness),
/// and 1 for usage, input, or convergence problems.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout) {
  using Command = RunConfig::Command;
  try {
    if (!(cfg.p > 1.0)) throw UsageError("p must be > 1");
    if (cfg.threads < 1) throw UsageError("--threads must be >= 1");
    if (!(cfg.c_budget > 0.0)) throw UsageError("--c-budget must be > 0");
    std::filesystem::create_directories(cfg.out);
    detail::ArtifactWriter w{cfg.out, &out};

    DomainSpec spec = parse_domain_spec(cfg.domain);
    Domain dom = generate(spec);

    const bool full = cfg.command == Command::full;
    if (cfg.command == Command::generate || full)
      w.json_file("domain.json", domain_to_json(dom), cfg.format_json);
    if (cfg.command == Command::generate) {
      out << "verdict: pass\n";
      return 0;
    }

    if (cfg.command == Command::diagnose || full)
      w.json_file("diagnostics.json", detail::diagnostics_to_json(dom, cfg),
                  cfg.format_json);
    if (cfg.command == Command::diagnose) {
      out << "verdict: pass\n";
      return 0;
    }

    // solve / verify / full all need the minimizer
    NodeField f = parse_boundary_data(dom, cfg.data, cfg.seed);
    SolverOptions options;
    options.tol_grad = cfg.tol;
    options.max_iter = cfg.max_iter;
    options.project_compat = cfg.project_compat;
    options.seed = cfg.seed;
    NeumannProblem prob = assemble(dom, cfg.p, std::move(f), options);
    Solution sol = solve(prob);

    if (cfg.command == Command::solve || full)
      w.json_file("solution.json",
                  detail::solution_to_json(cfg, dom, prob, sol),
                  cfg.format_json);
    if (!sol.converged) {
      out << "verdict: error (solver did not converge; residual " +
                 fmt_g17(sol.residual) + ")\n";
      return 1;
    }
    if (cfg.command == Command::solve) {
      out << "verdict: pass\n";
      return 0;
    }

    // verify: the theory checks, each a potential breach witness
    bool breach = false;
    std::vector<std::string> breach_notes;

    std::vector<DeGiorgiTuple> tuples = make_degiorgi_tuples(dom, sol.u);
    DeGiorgiReport dg = check_degiorgi(dom, sol.u, prob.f, cfg.p, tuples,
                                       cfg.c_budget, cfg.threads);
    w.json_file("degiorgi.json", detail::degiorgi_to_json(dom, dg),
                cfg.format_json);
    w.csv_file("degiorgi.csv", detail::degiorgi_to_csv(dom, dg),
               cfg.format_csv);
    if (!dg.pass) {
      breach = true;
      breach_notes.push_back("degiorgi");
    }

    MinimizerSetReport ms = verify_minimizer_set(prob, 4, cfg.seed);
    w.json_file("minimizer_set.json", detail::minimizer_set_to_json(ms),
                cfg.format_json);
    if (!ms.pass) {
      breach = true;
      breach_notes.push_back("minimizer_set");
    }

    // oscillation decay needs the iteration exponents, which exist only when
    // the measured volume exponent leaves the theory applicable at this p
    std::vector<OscillationReport> oreps;
    std::string onote;
    bool opass = true;
    std::optional<DeGiorgiParams> params;
    MassExponentFit fit = estimate_mass_exponent(dom);
    try {
      ExponentConfig ec;
      ec.C = std::max(1.0, dg.max_ratio);
      params = compute_exponents(fit.s, cfg.p, ec);
    } catch (const Error& e) {
      onote = std::string("exponents unavailable: ") + e.what();
    }
    if (params && params->eligible) {
      std::vector<double> grid;
      for (double R = dom.diameter() / 2.0; R >= 2.0 * dom.resolution();
           R /= 2.0)
        grid.push_back(R);
      if (!grid.empty()) {
        for (NodeId x : dom.boundary()) {
          OscillationReport r =
              oscillation_decay(dom, sol.u, prob.f, x, grid, *params);
          opass = opass && r.pass;
          oreps.push_back(std::move(r));
        }
      } else {
        onote = "domain too coarse for a radius grid";
      }
    } else if (params && !params->eligible) {
      onote = "exponents ineligible at (s, p) = (" + fmt_g17(fit.s) + ", " +
              fmt_g17(cfg.p) + ")";
    }
    w.json_file("oscillation.json",
                detail::oscillation_to_json(dom, oreps, onote, opass),
                cfg.format_json);
    w.csv_file("oscillation.csv", detail::oscillation_to_csv(dom, oreps),
               cfg.format_csv);
    if (!opass) {
      breach = true;
      breach_notes.push_back("oscillation");
    }

    // one-sided minimality at boundary nodes where the data stays
    // nonnegative on some ball; shrink until the sign hypothesis holds
    std::vector<SubminimizerReport> sreps;
    std::vector<std::string> skipped;
    bool spass = true;
    for (NodeId x : dom.boundary()) {
      double r = dom.diameter() / 4.0;
      std::optional<SubminimizerReport> got;
      while (r >= 2.0 * dom.resolution()) {
        try {
          got = subminimizer_check(dom, sol.u, prob.f, x, r, cfg.p, 16,
                                   cfg.seed);
          break;
        } catch (const UsageError&) {
          r /= 2.0;  // data changes sign this close; try a smaller ball
        }
      }
      if (got) {
        spass = spass && got->pass;
        sreps.push_back(std::move(*got));
      } else {
        skipped.push_back(detail::node_name(dom, x));
      }
    }
    w.json_file("subminimizer.json",
                detail::subminimizer_to_json(dom, sreps, skipped, spass),
                cfg.format_json);
    if (!spass) {
      breach = true;
      breach_notes.push_back("subminimizer");
    }

    NaturalBoundaryReport nb = natural_boundary_check(dom, sol.u, prob.f);
    w.json_file("natural_boundary.json",
                detail::natural_boundary_to_json(dom, nb), cfg.format_json);
    if (!nb.pass) {
      breach = true;
      breach_notes.push_back("natural_boundary");
    }

    if (breach) {
      std::string what;
      for (const std::string& n : breach_notes)
        what += (what.empty() ? "" : ", ") + n;
      out << "verdict: theory breach (" + what + ")\n";
      return 2;
    }
    out << "verdict: pass\n";
    return 0;
  } catch (const CompatibilityError& e) {
    out << "compatibility defect " << fmt_g17(e.defect) << "\n";
    out << "verdict: error (" << e.what() << ")\n";
    return 1;
  } catch (const Error& e) {
    out << "verdict: error (" << e.what() << ")\n";
    return 1;
  }
}

}  // namespace nplap
