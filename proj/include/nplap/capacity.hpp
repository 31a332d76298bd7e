#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nplap/graph.hpp"
#include "nplap/log.hpp"
#include "nplap/solver.hpp"

namespace nplap {

/// Relative p-capacity: inf of sum_e w_e |du/l_e|^p over potentials with
/// u >= 1 on E and u = 0 outside B2. Infeasible configurations (E reaching
/// outside B2) are signalled as +inf rather than thrown.
inline double relative_capacity(const Domain& dom, const std::vector<NodeId>& E,
                                const std::vector<NodeId>& B2, double p) {
  if (!(p > 1.0)) throw UsageError("relative_capacity: p must be > 1");
  if (E.empty()) return 0.0;
  std::vector<char> inE(dom.node_count(), 0), inB2(dom.node_count(), 0);
  for (NodeId i : E) inE[i] = 1;
  for (NodeId i : B2) inB2[i] = 1;
  for (NodeId i : E)
    if (!inB2[i]) {
      log_warn("relative_capacity: E is not contained in B2; capacity is +inf");
      return kInf;
    }

  const MetricGraph& g = dom.graph();
  NodeField u(static_cast<std::size_t>(dom.node_count()), 0.0);
  std::vector<char> fixed(dom.node_count(), 0);
  for (NodeId i = 0; i < dom.node_count(); ++i) {
    if (inE[i]) {
      fixed[i] = 1;
      u[i] = 1.0;
    } else if (!inB2[i]) {
      fixed[i] = 1;
      u[i] = 0.0;
    }
  }

  // components of the positive-weight subgraph decide which free nodes are
  // anchored; unanchored components sit at a flat 0 and carry no energy
  std::vector<int> comp(dom.node_count(), -1);
  int ncomp = 0;
  for (NodeId i = 0; i < dom.node_count(); ++i) {
    if (comp[i] >= 0) continue;
    std::vector<NodeId> stack{i};
    comp[i] = ncomp;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (EdgeId e : g.incident(v)) {
        if (!(dom.edge_weight(e) > 0.0)) continue;
        NodeId w = g.other_end(e, v);
        if (comp[w] < 0) {
          comp[w] = ncomp;
          stack.push_back(w);
        }
      }
    }
    ++ncomp;
  }
  std::vector<char> anchored(ncomp, 0);
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (fixed[i]) anchored[comp[i]] = 1;

  detail::PMinSpec spec;
  spec.dom = &dom;
  spec.p = p;
  spec.linear.assign(dom.node_count(), 0.0);
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    if (dom.edge_weight(e) > 0.0) spec.edges.push_back(e);
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!fixed[i] && anchored[comp[i]]) spec.vars.push_back(i);

  if (spec.vars.empty()) return detail::pmin_energy(spec, u);

  SolverOptions opt;
  opt.tol_grad = 1e-12;
  opt.max_iter = 50000;
  auto r = detail::pmin_minimize(spec, std::move(u), opt);
  if (!r.converged)
    log_warn("relative_capacity: potential solve stopped at residual " +
             std::to_string(r.residual));
  return r.energy;
}

struct CapacityBallBounds {
  double capacity = 0.0;
  double c_lower = 1.0;  // constant needed for mu(B(x,r)) / (c r^p) <= cap
  double c_upper = 1.0;  // constant needed for cap <= c mu(B(x,r)) / r^p
};

/// Capacity of a ball inside its double, together with the constants that
/// make the standard two-sided comparison against mu(B(x,r)) / r^p tight.
inline CapacityBallBounds capacity_ball_bounds(const Domain& dom, NodeId x,
                                               double r, double p) {
  auto E = ball(dom, x, r);
  auto B2 = ball(dom, x, 2.0 * r);
  CapacityBallBounds out;
  out.capacity = relative_capacity(dom, E, B2, p);
  double mass = dom.mu_ball(E);
  double rp = std::pow(r, p);
  out.c_lower = (out.capacity > 0.0) ? mass / (rp * out.capacity)
                                     : (mass > 0.0 ? kInf : 1.0);
  out.c_upper = (mass > 0.0) ? out.capacity * rp / mass
                             : (out.capacity > 0.0 ? kInf : 1.0);
  return out;
}

/// Dyadic discretization of the Wiener-type thinness integral: levels at
/// rho = 2^{-j} contribute (cap(B(x,rho)\U, B(x,2rho)) / cap(B(x,rho),
/// B(x,2rho)))^{1/(p-1)}. Levels whose ball degenerates to a single node or
/// whose denominator vanishes are skipped and logged.
inline double fine_thinness_sum(const Domain& dom, NodeId x,
                                const std::vector<NodeId>& U, double p,
                                int dyadic_levels) {
  if (!(p > 1.0)) throw UsageError("fine_thinness_sum: p must be > 1");
  if (dyadic_levels < 1)
    throw UsageError("fine_thinness_sum: dyadic_levels must be >= 1");
  std::vector<char> inU(dom.node_count(), 0);
  for (NodeId i : U) inU[i] = 1;

  double sum = 0.0;
  for (int j = 1; j <= dyadic_levels; ++j) {
    double rho = std::pow(2.0, -j);
    auto b = ball(dom, x, rho);
    if (b.size() < 2) {
      log_debug("fine_thinness_sum: level " + std::to_string(j) +
                " below resolution, skipped");
      continue;
    }
    auto b2 = ball(dom, x, 2.0 * rho);
    double denom = relative_capacity(dom, b, b2, p);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      log_debug("fine_thinness_sum: level " + std::to_string(j) +
                " has degenerate denominator, skipped");
      continue;
    }
    std::vector<NodeId> complement;
    for (NodeId i : b)
      if (!inU[i]) complement.push_back(i);
    double num = complement.empty() ? 0.0 : relative_capacity(dom, complement, b2, p);
    sum += std::pow(num / denom, 1.0 / (p - 1.0));
  }
  return sum;
}

}  // namespace nplap
