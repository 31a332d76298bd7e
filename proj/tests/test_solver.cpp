#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "nplap/solver.hpp"

using namespace nplap;
using Catch::Approx;

namespace {

NodeField data(const Domain& dom, std::initializer_list<std::pair<const char*, double>> vals) {
  NodeField f = NodeField::zeros(dom);
  for (auto& [name, v] : vals) f[dom.graph().require(name)] = v;
  return f;
}

NodeField dipole3(const Domain& dom) {
  return data(dom, {{"a", -1.0}, {"c", 1.0}});
}

// 4x4 lattice with data on the mid-edge boundary nodes, zero at corners
NodeField dipole_lattice4(const Domain& dom) {
  NodeField f = NodeField::zeros(dom);
  f[dom.graph().require(fixtures::grid_name(0, 1))] = -1.0;
  f[dom.graph().require(fixtures::grid_name(0, 2))] = -1.0;
  f[dom.graph().require(fixtures::grid_name(3, 1))] = 1.0;
  f[dom.graph().require(fixtures::grid_name(3, 2))] = 1.0;
  return f;
}

void check_mean_zero(const Domain& dom, const NodeField& u) {
  double s = 0.0, sup = 0.0;
  for (NodeId i : dom.interior()) {
    s += u[i] * dom.mu(i);
    sup = std::max(sup, std::abs(u[i]));
  }
  CHECK(std::abs(s) <= 1e-12 * std::max(1.0, sup) * dom.interior_mass());
}

}  // namespace

TEST_CASE("assemble enforces compatibility", "[solver]") {
  Domain dom = fixtures::three_node_model();
  SECTION("balanced dipole accepted") {
    CHECK_NOTHROW(assemble(dom, 2.0, dipole3(dom)));
  }
  SECTION("unbalanced data rejected with defect") {
    try {
      assemble(dom, 2.0, data(dom, {{"a", 1.0}, {"c", 1.0}}));
      FAIL("expected CompatibilityError");
    } catch (const CompatibilityError& e) {
      CHECK(e.defect == Approx(2.0));
    }
  }
  SECTION("projection removes the defect") {
    SolverOptions opt;
    opt.project_compat = true;
    auto prob = assemble(dom, 2.0, data(dom, {{"a", 1.0}, {"c", 1.0}}), opt);
    CHECK(prob.f[dom.graph().require("a")] == 0.0);
    CHECK(prob.f[dom.graph().require("c")] == 0.0);
  }
  SECTION("p must exceed 1") {
    CHECK_THROWS_AS(assemble(dom, 1.0, dipole3(dom)), UsageError);
  }
  SECTION("zero data is compatible") {
    CHECK_NOTHROW(assemble(dom, 2.0, NodeField::zeros(dom)));
  }
}

TEST_CASE("energy breakdown on the model", "[solver]") {
  Domain dom = fixtures::three_node_model();
  auto prob = assemble(dom, 2.0, dipole3(dom));
  NodeField u = data(dom, {{"a", 1.0}, {"b", 0.0}, {"c", -1.0}});

  auto zero = energy(prob, NodeField::zeros(dom));
  CHECK(zero.total == 0.0);
  CHECK(zero.dirichlet == 0.0);
  CHECK(zero.boundary == 0.0);

  auto eb = energy(prob, u);
  CHECK(eb.dirichlet == Approx(1.0));
  CHECK(eb.boundary == Approx(-2.0));
  CHECK(eb.total == Approx(-1.0));
  CHECK(eb.total == eb.dirichlet + eb.boundary);

  auto prob3 = assemble(dom, 3.0, dipole3(dom));
  auto eb3 = energy(prob3, u);
  CHECK(eb3.dirichlet == Approx(1.0));
  CHECK(eb3.total == Approx(-1.0));
}

TEST_CASE("model problem solved exactly", "[solver]") {
  Domain dom = fixtures::three_node_model();
  NodeId a = dom.graph().require("a"), b = dom.graph().require("b"),
         c = dom.graph().require("c");

  SECTION("p = 2") {
    auto sol = solve(assemble(dom, 2.0, dipole3(dom)));
    REQUIRE(sol.converged);
    CHECK(sol.u[a] == Approx(1.0).margin(1e-8));
    CHECK(sol.u[b] == Approx(0.0).margin(1e-8));
    CHECK(sol.u[c] == Approx(-1.0).margin(1e-8));
    CHECK(sol.energy == Approx(-1.0).margin(1e-8));
    CHECK(sol.dirichlet_part == Approx(1.0).margin(1e-8));
    CHECK(sol.boundary_part == Approx(-2.0).margin(1e-8));
    auto r = euler_lagrange_residual(assemble(dom, 2.0, dipole3(dom)), sol.u);
    CHECK(r.interior_max <= 1e-8);
    CHECK(r.boundary_max <= 1e-8);
    check_mean_zero(dom, sol.u);
  }
  SECTION("p = 3") {
    auto sol = solve(assemble(dom, 3.0, dipole3(dom)));
    REQUIRE(sol.converged);
    double t = std::sqrt(2.0 / 3.0);
    CHECK(sol.gradient.edge_quotients[0] == Approx(t).margin(1e-7));
    CHECK(sol.gradient.edge_quotients[1] == Approx(t).margin(1e-7));
    CHECK(sol.energy == Approx(std::pow(2.0 / 3.0, 1.5) - 2.0 * t).margin(1e-7));
  }
  SECTION("zero data gives the zero field") {
    auto sol = solve(assemble(dom, 2.0, NodeField::zeros(dom)));
    REQUIRE(sol.converged);
    for (double v : sol.u.values) CHECK(std::abs(v) <= 1e-12);
    CHECK(sol.energy == 0.0);
  }
}

TEST_CASE("euler-lagrange residual formula", "[solver]") {
  Domain dom = fixtures::three_node_model();
  NodeField u = data(dom, {{"a", 1.0}, {"b", 0.0}, {"c", -1.0}});

  auto prob0 = assemble(dom, 2.0, NodeField::zeros(dom));
  auto r0 = euler_lagrange_residual(prob0, NodeField::zeros(dom));
  CHECK(r0.interior_max == 0.0);
  CHECK(r0.boundary_max == 0.0);

  auto prob2 = assemble(dom, 2.0, data(dom, {{"a", -2.0}, {"c", 2.0}}));
  auto r2 = euler_lagrange_residual(prob2, u);
  CHECK(r2.interior_max == Approx(0.0).margin(1e-15));
  CHECK(r2.boundary_max == Approx(1.0));
}

TEST_CASE("monotone descent and translation invariance", "[solver]") {
  Domain dom = fixtures::lattice4(4);
  auto prob = assemble(dom, 3.0, dipole_lattice4(dom));
  auto sol = solve(prob);
  REQUIRE(sol.converged);
  for (std::size_t i = 1; i < sol.energy_trace.size(); ++i)
    CHECK(sol.energy_trace[i] <= sol.energy_trace[i - 1] + 1e-12);

  auto shifted = solve_from(prob, NodeField::constant(dom, 17.0));
  REQUIRE(shifted.converged);
  for (NodeId i = 0; i < dom.node_count(); ++i)
    CHECK(shifted.u[i] == Approx(sol.u[i]).margin(1e-8));
}

TEST_CASE("data scaling moves quotients by the dual power", "[solver]") {
  Domain dom = fixtures::three_node_model();
  for (double p : {2.0, 3.0}) {
    auto base = solve(assemble(dom, p, dipole3(dom)));
    for (double alpha : {2.0, 10.0}) {
      NodeField f = dipole3(dom);
      for (double& v : f.values) v *= alpha;
      auto scaled = solve(assemble(dom, p, f));
      double want = std::pow(alpha, 1.0 / (p - 1.0));
      for (std::size_t e = 0; e < base.gradient.edge_quotients.size(); ++e)
        CHECK(scaled.gradient.edge_quotients[e] ==
              Approx(want * base.gradient.edge_quotients[e]).margin(1e-7));
    }
  }
}

TEST_CASE("oracle agrees with the solver on small instances", "[solver]") {
  SECTION("three node model") {
    Domain dom = fixtures::three_node_model();
    for (double p : {1.5, 2.0, 3.0}) {
      auto prob = assemble(dom, p, dipole3(dom));
      auto fast = solve(prob);
      auto slow = oracle_minimize(prob);
      REQUIRE(fast.converged);
      for (NodeId i = 0; i < dom.node_count(); ++i)
        CHECK(fast.u[i] == Approx(slow.u[i]).margin(1e-6));
    }
  }
  SECTION("oracle pins the model closed form") {
    Domain dom = fixtures::three_node_model();
    auto slow = oracle_minimize(assemble(dom, 2.0, dipole3(dom)));
    CHECK(slow.u[dom.graph().require("a")] == Approx(1.0).margin(1e-6));
    CHECK(slow.u[dom.graph().require("c")] == Approx(-1.0).margin(1e-6));
    auto zero = oracle_minimize(assemble(dom, 2.0, NodeField::zeros(dom)));
    for (double v : zero.u.values) CHECK(std::abs(v) <= 1e-9);
  }
  SECTION("square with symmetric data keeps the symmetry") {
    MetricGraph g;
    g.add_node("bl", 0.0);
    g.add_node("br", 0.0);
    g.add_node("il", 1.0);
    g.add_node("ir", 1.0);
    g.add_edge("bl", "il", 1.0);
    g.add_edge("br", "ir", 1.0);
    g.add_edge("il", "ir", 1.0);
    Domain dom = Domain::create(std::move(g), {"il", "ir"}, {"bl", "br"},
                                {{"bl", 1.0}, {"br", 1.0}});
    auto prob = assemble(dom, 2.0, data(dom, {{"bl", 1.0}, {"br", -1.0}}));
    auto slow = oracle_minimize(prob);
    CHECK(slow.u[dom.graph().require("bl")] ==
          Approx(-slow.u[dom.graph().require("br")]).margin(1e-6));
    CHECK(slow.u[dom.graph().require("il")] ==
          Approx(-slow.u[dom.graph().require("ir")]).margin(1e-6));
    auto fast = solve(prob);
    for (NodeId i = 0; i < dom.node_count(); ++i)
      CHECK(fast.u[i] == Approx(slow.u[i]).margin(1e-6));
  }
  SECTION("too large is refused") {
    Domain dom = fixtures::path_domain(9);
    CHECK_THROWS_AS(oracle_minimize(assemble(dom, 2.0, NodeField::zeros(dom))),
                    UsageError);
  }
}

TEST_CASE("solution invariants: sign, mean, lower bound", "[solver]") {
  Domain dom = fixtures::lattice4(4);
  for (double p : {1.5, 2.0, 3.0}) {
    auto prob = assemble(dom, p, dipole_lattice4(dom));
    auto sol = solve(prob);
    REQUIRE(sol.converged);
    CHECK(sol.energy <= 0.0);
    check_mean_zero(dom, sol.u);
    CHECK(sol.energy == sol.dirichlet_part + sol.boundary_part);

    // certify a trace constant from the iterates themselves plus fresh samples
    double C = 0.0;
    for (std::size_t t = 0; t < sol.energy_trace.size(); ++t)
      if (sol.grad_norm_trace[t] > 0.0)
        C = std::max(C, sol.boundary_l1_trace[t] / sol.grad_norm_trace[t]);
    auto rng = make_rng(21);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int t = 0; t < 16; ++t) {
      NodeField w = NodeField::zeros(dom);
      for (NodeId i = 0; i < dom.node_count(); ++i) w[i] = uni(rng);
      project_mean_zero(dom, w);
      double g = gradient_lp_norm(dom, w, p);
      if (g <= 0.0) continue;
      double l1 = 0.0;
      for (NodeId z : dom.boundary()) l1 += std::abs(w[z]) * dom.perimeter(z);
      C = std::max(C, l1 / g);
    }
    double f_inf = 1.0;
    // per-iterate lower bound: energy >= ||g||^p - C ||g|| ||f||_inf
    for (std::size_t t = 0; t < sol.energy_trace.size(); ++t) {
      double g = sol.grad_norm_trace[t];
      CHECK(sol.energy_trace[t] >= std::pow(g, p) - C * g * f_inf - 1e-10);
    }
    CHECK(sol.energy >= functional_lower_bound(C, f_inf, p) - 1e-10);
  }
}

TEST_CASE("nonconvergence is a structured report", "[solver]") {
  Domain dom = fixtures::lattice4(4);
  auto prob = assemble(dom, 3.0, dipole_lattice4(dom));
  prob.options.max_iter = 2;
  auto sol = solve(prob);
  CHECK_FALSE(sol.converged);
  CHECK(sol.iterations == 2);
  CHECK(std::isfinite(sol.residual));
  CHECK(sol.residual > prob.options.tol_grad);
  CHECK(sol.u.size() == static_cast<std::size_t>(dom.node_count()));
}

TEST_CASE("minimizer set laws", "[solver]") {
  SECTION("model problem") {
    Domain dom = fixtures::three_node_model();
    auto rep = verify_minimizer_set(assemble(dom, 2.0, dipole3(dom)), 4, 17);
    CHECK(rep.pass);
    CHECK(rep.max_grad_sup_diff <= 1e-6);
    CHECK(rep.max_boundary_spread <= 1e-8);
    CHECK(rep.max_lattice_gap <= 1e-8);
    CHECK(rep.max_convex_gap <= 1e-8);
    CHECK(rep.rows.size() == 6);
  }
  SECTION("zero data") {
    Domain dom = fixtures::three_node_model();
    auto rep = verify_minimizer_set(assemble(dom, 2.0, NodeField::zeros(dom)), 3, 5);
    CHECK(rep.pass);
  }
  SECTION("4x4 grid dipole") {
    Domain dom = fixtures::lattice4(4);
    auto rep = verify_minimizer_set(assemble(dom, 2.0, dipole_lattice4(dom)), 4, 9);
    CHECK(rep.pass);
    CHECK(rep.max_grad_sup_diff < 1e-6);
  }
}

TEST_CASE("decoupled boundary data is rejected at solve time", "[solver]") {
  Domain dom = fixtures::lattice4(4);  // corners have only zero-weight edges
  NodeField f = dipole_lattice4(dom);
  f[dom.graph().require(fixtures::grid_name(0, 0))] = 1.0;
  f[dom.graph().require(fixtures::grid_name(3, 3))] = -1.0;
  auto prob = assemble(dom, 2.0, f);
  CHECK_THROWS_AS(solve(prob), UsageError);
}
