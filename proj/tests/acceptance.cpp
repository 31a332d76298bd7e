// Acceptance gate for the laboratory: twelve self-contained checks covering
// the solver anchors, the inequality harnesses, and the reporting pipeline.
// One line per check; exit status 0 only if every check passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nplap/run.hpp"

using namespace nplap;

namespace {

namespace fs = std::filesystem;

struct Check {
  bool ok = true;
  std::string why;

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
  void within(double got, double want, double tol, const std::string& what) {
    require(std::abs(got - want) <= tol,
            what + " = " + fmt_g17(got) + ", want " + fmt_g17(want) +
                " within " + fmt_g17(tol));
  }
};

Domain make(const std::string& spec) { return generate(parse_domain_spec(spec)); }

Solution solve_dipole(const Domain& dom, double p, NeumannProblem* keep) {
  NeumannProblem prob = assemble(dom, p, make_boundary_data(dom, DataKind::dipole, 0));
  Solution sol = solve(prob);
  if (keep) *keep = std::move(prob);
  return sol;
}

NodeField random_values(const Domain& dom, std::uint64_t seed, double lo,
                        double hi) {
  auto rng = make_rng(seed, 0x616363ull);
  std::uniform_real_distribution<double> unif(lo, hi);
  NodeField v = NodeField::zeros(dom);
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!dom.is_exterior(i)) v[i] = unif(rng);
  return v;
}

// ------------------------------------------------------------------
// 1. closed forms on the 3-node model path
// ------------------------------------------------------------------
void model_closed_forms(Check& c) {
  Domain dom = make("path:3");
  NodeId a = dom.graph().require("a"), b = dom.graph().require("b"),
         cn = dom.graph().require("c");

  NeumannProblem p2;
  Solution s2 = solve_dipole(dom, 2.0, &p2);
  c.require(s2.converged, "p=2 solve did not converge");
  c.within(s2.u[a], 1.0, 1e-8, "u(a) at p=2");
  c.within(s2.u[b], 0.0, 1e-8, "u(b) at p=2");
  c.within(s2.u[cn], -1.0, 1e-8, "u(c) at p=2");
  c.within(s2.energy, -1.0, 1e-8, "energy at p=2");

  // stationarity of t^p - 2t gives t = (2/p)^{1/(p-1)} per edge
  NeumannProblem p3;
  Solution s3 = solve_dipole(dom, 3.0, &p3);
  c.require(s3.converged, "p=3 solve did not converge");
  double t = std::sqrt(2.0 / 3.0);
  for (double q : s3.gradient.edge_quotients)
    c.within(q, t, 1e-6, "edge quotient at p=3");
  c.within(s3.energy, std::pow(2.0 / 3.0, 1.5) - 2.0 * t, 1e-6,
           "energy at p=3");
}

// ------------------------------------------------------------------
// 2. the iterative solver matches the brute-force oracle
// ------------------------------------------------------------------
void oracle_agreement(Check& c) {
  int instances = 0;
  for (int n : {3, 4, 5, 6, 7, 8}) {
    Domain dom = make("path:" + std::to_string(n));
    for (double p : {1.5, 2.0, 3.0}) {
      for (DataKind kind : {DataKind::dipole, DataKind::random_compatible}) {
        NodeField f = make_boundary_data(dom, kind, 40 + n);
        NeumannProblem prob = assemble(dom, p, std::move(f));
        Solution fast = solve(prob);
        Solution slow = oracle_minimize(prob);
        std::string tag = "path:" + std::to_string(n) + " p=" + fmt_g17(p);
        c.require(fast.converged, tag + " did not converge");
        double sup = 0.0;
        for (NodeId i = 0; i < dom.node_count(); ++i)
          sup = std::max(sup, std::abs(fast.u[i] - slow.u[i]));
        c.require(sup <= 1e-6,
                  tag + " disagrees with the oracle by " + fmt_g17(sup));
        ++instances;
      }
    }
  }
  c.require(instances >= 10,
            "only " + std::to_string(instances) + " instances exercised");
}

// ------------------------------------------------------------------
// 3. minimizer set invariants on a 16x16 grid dipole
// ------------------------------------------------------------------
void minimizer_set_invariants(Check& c) {
  Domain dom = make("grid:16");
  NeumannProblem prob =
      assemble(dom, 2.0, make_boundary_data(dom, DataKind::dipole, 0));
  MinimizerSetReport ms = verify_minimizer_set(prob, 4, 7);
  c.require(ms.tol_grad_diff == 1e-6 && ms.tol_boundary == 1e-8 &&
                ms.tol_energy_gap == 1e-8,
            "report tolerances drifted from the frozen values");
  c.require(ms.max_grad_sup_diff <= 1e-6,
            "gradient sup-difference " + fmt_g17(ms.max_grad_sup_diff));
  c.require(ms.max_boundary_spread <= 1e-8,
            "boundary part spread " + fmt_g17(ms.max_boundary_spread));
  double scale = std::max(1.0, std::abs(ms.min_energy));
  c.require(ms.max_lattice_gap <= 1e-8 * scale,
            "lattice combination gap " + fmt_g17(ms.max_lattice_gap));
  c.require(ms.max_convex_gap <= 1e-8 * scale,
            "convex combination gap " + fmt_g17(ms.max_convex_gap));
  c.require(ms.pass, "witness " + ms.witness);
  c.require(ms.rows.size() == 6, "expected all 6 pairs compared");
}

// ------------------------------------------------------------------
// 4. truncation energy vs volume + boundary terms, uniform ratio budget
// ------------------------------------------------------------------
void truncation_ratio_budget(Check& c) {
  for (int n : {8, 16}) {
    std::string tag = "grid:" + std::to_string(n) + " ";
    Domain dom = make("grid:" + std::to_string(n));
    NeumannProblem prob;
    Solution sol = solve_dipole(dom, 2.0, &prob);
    c.require(sol.converged, tag + "solve did not converge");

    std::vector<DeGiorgiTuple> tuples = make_degiorgi_tuples(dom, sol.u);
    c.require(tuples.size() >= 32,
              tag + "only " + std::to_string(tuples.size()) + " tuples");
    DeGiorgiReport rep =
        check_degiorgi(dom, sol.u, prob.f, 2.0, tuples, 1e3, 1);
    c.require(std::isfinite(rep.max_ratio) && rep.max_ratio <= 1e3,
              tag + "max ratio " + fmt_g17(rep.max_ratio));
    c.require(!rep.hard_failure, tag + "nonzero lhs against a zero rhs");
    for (const DeGiorgiRow& row : rep.rows) {
      if (row.rhs_volume + row.rhs_boundary == 0.0)
        c.require(row.lhs == 0.0, tag + "vacuous tuple with lhs " +
                                      fmt_g17(row.lhs));
      if (row.vacuous)
        c.require(row.lhs == 0.0 && row.ratio == 0.0,
                  tag + "vacuous row carries nonzero entries");
    }
    c.require(rep.pass, tag + "report verdict is fail");
  }
}

// ------------------------------------------------------------------
// 5. level-set mass bounds are exact on sampled level pairs h < k
// ------------------------------------------------------------------
void level_set_mass_bounds(Check& c) {
  Domain dom = make("grid:8");
  NeumannProblem prob;
  Solution sol = solve_dipole(dom, 2.0, &prob);
  c.require(sol.converged, "solve did not converge");
  NodeField noisy = random_values(dom, 17, -2.0, 2.0);

  const double r = 4.5, R = 4.5;
  std::vector<NodeId> centers = detail::sample_nodes(dom.boundary(), 4);
  int pairs = 0;
  for (const NodeField* u : {&sol.u, &noisy}) {
    double umin = kInf, umax = -kInf;
    for (NodeId i = 0; i < dom.node_count(); ++i) {
      umin = std::min(umin, (*u)[i]);
      umax = std::max(umax, (*u)[i]);
    }
    for (double p : {2.0, 3.0}) {
      for (NodeId x : centers) {
        for (int j = 0; j < 5; ++j) {
          double h = umin + (umax - umin) * j / 5.0;
          for (double gap : {0.2, 0.7, 1.4}) {
            double k = h + gap;
            LevelSetStats sk = level_set_stats(dom, *u, x, k, r, R, p);
            LevelSetStats sh = level_set_stats(dom, *u, x, h, r, R, p);
            double lhs_mu = std::pow(k - h, p) * sk.A_measure;
            double rhs_mu = sk.mu_ball * std::pow(sh.u_kr, p);
            c.require(lhs_mu <= rhs_mu + 1e-12 * std::max(1.0, rhs_mu),
                      "volume bound off by " + fmt_g17(lhs_mu - rhs_mu));
            double lhs_per = (k - h) * sk.A_perimeter;
            double rhs_per = sk.per_ball * sh.psi_kR;
            c.require(lhs_per <= rhs_per + 1e-12 * std::max(1.0, rhs_per),
                      "perimeter bound off by " + fmt_g17(lhs_per - rhs_per));
            ++pairs;
          }
        }
      }
    }
  }
  c.require(pairs >= 100, "too few level pairs sampled");
}

// ------------------------------------------------------------------
// 6. the boundedness ladder dominates the half-ball sup, measured constant
// ------------------------------------------------------------------
void boundedness_ladder(Check& c) {
  struct Case {
    const char* spec;
    double R;
  };
  for (Case cs : {Case{"grid:8", 3.0}, Case{"grid:16", 6.0}}) {
    std::string tag = std::string(cs.spec) + " ";
    Domain dom = make(cs.spec);
    const double p = 1.5;
    NeumannProblem prob;
    Solution sol = solve_dipole(dom, p, &prob);
    c.require(sol.converged, tag + "solve did not converge");

    DeGiorgiReport dg = check_degiorgi(dom, sol.u, prob.f, p,
                                       make_degiorgi_tuples(dom, sol.u), 1e3, 1);
    ExponentConfig ec;
    ec.C = std::max(1.0, dg.max_ratio);
    DeGiorgiParams params = compute_exponents(estimate_mass_exponent(dom).s, p, ec);

    std::vector<NodeId> centers = detail::sample_nodes(dom.boundary(), 12);
    int checked = 0;
    for (NodeId x : centers) {
      BoundednessReport rep =
          boundedness_iteration(dom, sol.u, prob.f, x, cs.R, params, 0.0);
      std::string at = tag + "node " + dom.graph().node(x).name + ": ";
      c.require(rep.d == std::max(rep.d_est1, rep.d_est2),
                at + "level increment is not the closed-form maximum");
      c.require(rep.pass, at + "sup " + fmt_g17(rep.sup_half) +
                              " above k0 + d = " + fmt_g17(rep.k0 + rep.d));
      if (!rep.half_ball_empty) ++checked;
    }
    c.require(checked >= 6, tag + "too few centers with interior half balls");
  }
}

// ------------------------------------------------------------------
// 7. exponent eligibility gate and the iteration windows
// ------------------------------------------------------------------
void exponent_gate(Check& c) {
  c.require(compute_exponents(3.0, 2.0).eligible, "(3, 2) must be eligible");
  c.require(!compute_exponents(5.0, 2.0).eligible, "(5, 2) must be ineligible");
  for (double p : {1.1, 2.0, 3.0})
    c.require(compute_exponents(3.9, p).eligible,
              "(3.9, " + fmt_g17(p) + ") must be eligible");

  for (auto [s, p] : std::vector<std::pair<double, double>>{
           {3.0, 2.0}, {3.9, 1.1}, {3.9, 2.0}, {3.9, 3.0}, {2.0, 1.5}}) {
    DeGiorgiParams pr = compute_exponents(s, p);
    std::string tag = "(" + fmt_g17(s) + ", " + fmt_g17(p) + "): ";
    c.require(pr.eligible, tag + "not eligible");
    c.require(pr.kappa > 1.0 && pr.kappa < s / (s - p) + 1e-12,
              tag + "kappa outside its window");
    c.require(pr.kappa_tilde > 1.0 &&
                  pr.kappa_tilde < (s - 1.0) / (s - p) + 1e-12,
              tag + "kappa_tilde outside its window");
    c.require(pr.alpha > 0.0 && pr.alpha < 1.0, tag + "alpha outside (0,1)");
    c.require(pr.beta > 0.0 && pr.beta < 1.0, tag + "beta outside (0,1)");
    c.require(pr.alpha + 1.0 / p - 1.0 > 0.0, tag + "alpha conjugacy fails");
    c.require(pr.beta + 1.0 / p - 1.0 > 0.0, tag + "beta conjugacy fails");
    c.require(pr.sigma >= (pr.alpha + 1.0) / pr.alpha - 1e-12,
              tag + "sigma below its floor");
    c.require(pr.tau >= p * (pr.sigma * (1.0 - pr.alpha) + pr.alpha) - 1e-12,
              tag + "tau below the sigma coupling");
    c.require(pr.tau >= pr.beta / (pr.beta + 1.0 / p - 1.0) - 1e-12,
              tag + "tau below the beta floor");
    c.require(pr.tau <= (pr.sigma - (1.0 + pr.beta)) / (1.0 - pr.beta) + 1e-12,
              tag + "tau above its ceiling");
    c.require(pr.aleph > 0.0 && pr.aleph < 1.0, tag + "aleph outside (0,1)");
  }
}

// ------------------------------------------------------------------
// 8. oscillation decay near constant-sign boundary data on a 32x32 grid
// ------------------------------------------------------------------
void oscillation_decay_check(Check& c) {
  Domain dom = make("grid:32");
  const double p = 1.5;
  MassExponentFit fit = estimate_mass_exponent(dom);

  NeumannProblem prob;
  Solution sol = solve_dipole(dom, p, &prob);
  c.require(sol.converged, "dipole solve did not converge");
  DeGiorgiReport dg = check_degiorgi(dom, sol.u, prob.f, p,
                                     make_degiorgi_tuples(dom, sol.u), 1e3, 1);
  ExponentConfig ec;
  ec.C = std::max(1.0, dg.max_ratio);
  DeGiorgiParams params = compute_exponents(fit.s, p, ec);
  c.require(params.eligible,
            "(s, p) = (" + fmt_g17(fit.s) + ", 1.5) must be eligible");

  std::vector<double> grid;
  for (double R = dom.diameter() / 2.0; R >= 2.0 * dom.resolution(); R /= 2.0)
    grid.push_back(R);
  c.require(grid.size() >= 4, "radius grid too short");

  int applicable = 0;
  for (NodeId x : dom.boundary()) {
    OscillationReport rep = oscillation_decay(dom, sol.u, prob.f, x, grid, params);
    std::string at = "node " + dom.graph().node(x).name + ": ";
    if (!rep.applicable) {
      c.require(!rep.note.empty(), at + "inapplicable without a note");
      continue;
    }
    ++applicable;
    c.require(rep.osc_monotone, at + "oscillation not monotone");
    if (!rep.steps.empty() && rep.steps.front().osc > 1e-8)
      c.require(rep.theta_fit > 0.0,
                at + "flat decay slope " + fmt_g17(rep.theta_fit));
  }
  c.require(applicable >= 32, "only " + std::to_string(applicable) +
                                  " applicable boundary nodes");

  // adjacent patches of both signs: nodes between them must be refused
  NeumannProblem prob2 = assemble(
      dom, p, make_boundary_data(dom, DataKind::constant_sign_patch, 0));
  Solution sol2 = solve(prob2);
  c.require(sol2.converged, "patch solve did not converge");
  int refused = 0;
  for (NodeId x : dom.boundary()) {
    OscillationReport rep =
        oscillation_decay(dom, sol2.u, prob2.f, x, grid, params);
    if (!rep.applicable) {
      c.require(rep.steps.empty(), "inapplicable report carries steps");
      ++refused;
    }
  }
  c.require(refused >= 1, "no sign-change node was reported inapplicable");
}

// ------------------------------------------------------------------
// 9. one-sided perturbations near a nonnegative patch never win
// ------------------------------------------------------------------
void one_sided_stability(Check& c) {
  Domain dom = make("grid:16");
  NeumannProblem prob;
  Solution sol = solve_dipole(dom, 2.0, &prob);
  c.require(sol.converged, "solve did not converge");

  double r = dom.diameter() / 4.0;
  for (const char* name : {"n15_15", "n15_8"}) {
    NodeId x = dom.graph().require(name);
    SubminimizerReport rep =
        subminimizer_check(dom, sol.u, prob.f, x, r, 2.0, 200, 7);
    std::string at = std::string(name) + ": ";
    c.require(rep.trials == 200, at + "trial count off");
    c.require(rep.max_deficit <= 1e-10,
              at + "energy dropped by " + fmt_g17(rep.max_deficit));
    c.require(rep.pass, at + std::to_string(rep.violations.size()) +
                            " violating perturbations");
  }
}

// ------------------------------------------------------------------
// 10. constancy forces vanishing data; solver outputs never trip it
// ------------------------------------------------------------------
void constancy_contrapositive(Check& c) {
  Domain g8 = make("grid:8");
  NodeField f8 = make_boundary_data(g8, DataKind::dipole, 0);
  NaturalBoundaryReport bad =
      natural_boundary_check(g8, NodeField::constant(g8, 1.0), f8);
  c.require(!bad.pass && bad.violations >= 1,
            "constant field with live data must breach");

  struct Case {
    const char* spec;
    double p;
    DataKind kind;
  };
  for (Case cs : {Case{"path:5", 2.0, DataKind::dipole},
                  Case{"grid:8", 1.5, DataKind::dipole},
                  Case{"grid:8", 3.0, DataKind::constant_sign_patch},
                  Case{"lshape:8", 2.0, DataKind::dipole},
                  Case{"annulus_grid:9", 2.0, DataKind::random_compatible},
                  Case{"sierpinski:3", 2.0, DataKind::dipole}}) {
    std::string tag = std::string(cs.spec) + " p=" + fmt_g17(cs.p) + ": ";
    Domain dom = make(cs.spec);
    NeumannProblem prob =
        assemble(dom, cs.p, make_boundary_data(dom, cs.kind, 3));
    Solution sol = solve(prob);
    c.require(sol.converged, tag + "solve did not converge");
    NaturalBoundaryReport rep = natural_boundary_check(dom, sol.u, prob.f);
    c.require(rep.pass, tag + std::to_string(rep.violations) +
                            " constancy violations");
  }
}

// ------------------------------------------------------------------
// 11. dimension estimates land in their windows; capacity anchor
// ------------------------------------------------------------------
void diagnostics_sanity(Check& c) {
  double s_grid = estimate_mass_exponent(make("grid:16")).s;
  c.require(s_grid >= 1.7 && s_grid <= 2.3,
            "grid exponent " + fmt_g17(s_grid) + " outside [1.7, 2.3]");

  double s_path = estimate_mass_exponent(make("path:32")).s;
  c.require(s_path >= 1.0 + 1e-6 && s_path <= 1.4,
            "path exponent " + fmt_g17(s_path) + " outside its window");

  // unit path v0..v4 with a pendant boundary node; the condenser between
  // the middle node and its double ball is four unit edges at gap 1/2
  MetricGraph g;
  for (int i = 0; i < 5; ++i) g.add_node("v" + std::to_string(i), 1.0);
  g.add_node("z", 0.0);
  for (int i = 0; i + 1 < 5; ++i)
    g.add_edge("v" + std::to_string(i), "v" + std::to_string(i + 1), 1.0);
  g.add_edge("z", "v0", 1.0);
  Domain dom = Domain::create(std::move(g), {"v0", "v1", "v2", "v3", "v4"},
                              {"z"}, {{"z", 1.0}});
  NodeId v2 = dom.graph().require("v2");
  double cap = relative_capacity(dom, {v2}, ball(dom, v2, 2.0), 2.0);
  c.within(cap, 1.0, 1e-10, "path condenser capacity");
}

// ------------------------------------------------------------------
// 12. repeated full runs produce byte-identical artifacts
// ------------------------------------------------------------------
void deterministic_artifacts(Check& c) {
  fs::path base = fs::temp_directory_path() / "nplap_acceptance";
  fs::remove_all(base);

  RunConfig cfg;
  cfg.command = RunConfig::Command::full;
  cfg.domain = "grid:8";
  cfg.p = 2.0;
  cfg.data = "dipole";
  cfg.seed = 7;

  std::vector<std::string> verdicts;
  for (const char* leg : {"a", "b"}) {
    cfg.out = (base / leg).string();
    std::ostringstream sink;
    int rc = run(cfg, sink);
    c.require(rc == 0, std::string("run ") + leg + " exited " +
                           std::to_string(rc));
    std::string line = sink.str();
    verdicts.push_back(line.substr(line.rfind("verdict:")));
  }
  c.require(verdicts[0] == verdicts[1], "verdict lines differ");

  int files = 0;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    std::string name = entry.path().filename().string();
    fs::path twin = base / "b" / name;
    c.require(fs::exists(twin), name + " missing from the second run");
    if (!fs::exists(twin)) continue;
    c.require(read_text_file(entry.path().string()) ==
                  read_text_file(twin.string()),
              name + " differs between runs");
    ++files;
  }
  c.require(files >= 10, "only " + std::to_string(files) + " artifacts");
}

}  // namespace

int main() {
  struct Item {
    const char* name;
    void (*fn)(Check&);
    std::optional<double> budget_s;
  };
  const std::vector<Item> items = {
      {"model path closed forms", model_closed_forms, 1.0},
      {"oracle agreement on small instances", oracle_agreement, 30.0},
      {"minimizer set invariants (16x16 dipole)", minimizer_set_invariants, 120.0},
      {"truncation energy ratio budget", truncation_ratio_budget, 120.0},
      {"level-set mass bounds", level_set_mass_bounds, std::nullopt},
      {"local boundedness ladder", boundedness_ladder, 120.0},
      {"iteration exponent gate", exponent_gate, std::nullopt},
      {"boundary oscillation decay (32x32)", oscillation_decay_check, 300.0},
      {"one-sided perturbation stability", one_sided_stability, 60.0},
      {"constancy forces vanishing data", constancy_contrapositive, std::nullopt},
      {"dimension and capacity diagnostics", diagnostics_sanity, 60.0},
      {"deterministic artifacts", deterministic_artifacts, std::nullopt},
  };

  int failures = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      items[i].fn(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    if (c.ok && items[i].budget_s && secs > *items[i].budget_s)
      c.require(false, "over the " + fmt_g17(*items[i].budget_s) +
                           " s time budget");
    std::printf("%2zu/12  %-42s %s  %6.2fs%s%s\n", i + 1, items[i].name,
                c.ok ? "pass" : "FAIL", secs, c.ok ? "" : "  ",
                c.ok ? "" : c.why.c_str());
    if (!c.ok) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: 12/12 pass\n");
    return 0;
  }
  std::printf("acceptance: %d/12 pass, %d FAIL\n", 12 - failures, failures);
  return 1;
}
