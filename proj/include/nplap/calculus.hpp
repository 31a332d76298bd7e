#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "nplap/graph.hpp"
#include "nplap/rng.hpp"

namespace nplap {

/// Real-valued function on the nodes of a domain.
struct NodeField {
  std::vector<double> values;

  NodeField() = default;
  explicit NodeField(std::size_t n, double c = 0.0) : values(n, c) {}

  static NodeField zeros(const Domain& dom) {
    return NodeField(static_cast<std::size_t>(dom.node_count()), 0.0);
  }
  static NodeField constant(const Domain& dom, double c) {
    return NodeField(static_cast<std::size_t>(dom.node_count()), c);
  }

  double& operator[](NodeId i) { return values[i]; }
  double operator[](NodeId i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

inline void check_field(const Domain& dom, const NodeField& u, const char* who) {
  if (u.size() != static_cast<std::size_t>(dom.node_count()))
    throw UsageError(std::string(who) + ": field size does not match the domain");
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!std::isfinite(u[i]) && dom.kind(i) != NodeKind::exterior)
      throw UsageError(std::string(who) + ": non-finite value at node '" +
                       dom.graph().node(i).name + "'");
}

/// Difference quotients per edge plus the node-wise maximum over incident
/// edges. The edge quotients drive the energy; the node maxima serve as the
/// discrete upper gradient.
struct GradientField {
  std::vector<double> edge_quotients;
  std::vector<double> node_upper;
};

inline GradientField upper_gradient(const Domain& dom, const NodeField& u) {
  check_field(dom, u, "upper_gradient");
  const MetricGraph& g = dom.graph();
  GradientField out;
  out.edge_quotients.resize(g.edge_count());
  out.node_upper.assign(g.node_count(), 0.0);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    double q = std::abs(u[ed.a] - u[ed.b]) / ed.len;
    out.edge_quotients[e] = q;
    out.node_upper[ed.a] = std::max(out.node_upper[ed.a], q);
    out.node_upper[ed.b] = std::max(out.node_upper[ed.b], q);
  }
  return out;
}

/// mu-weighted mean of u over the interior.
inline double mu_mean(const Domain& dom, const NodeField& u) {
  double s = 0.0;
  for (NodeId i : dom.interior()) s += u[i] * dom.mu(i);
  return s / dom.interior_mass();
}

inline void project_mean_zero(const Domain& dom, NodeField& u) {
  double m = mu_mean(dom, u);
  for (double& v : u.values) v -= m;
}

/// L^p norm of u over the interior with respect to mu.
inline double lp_norm_interior(const Domain& dom, const NodeField& u, double p) {
  double s = 0.0;
  for (NodeId i : dom.interior()) s += std::pow(std::abs(u[i]), p) * dom.mu(i);
  return std::pow(s, 1.0 / p);
}

/// Energy-consistent gradient norm: (sum_e w_e |du/l|^p)^{1/p}.
inline double gradient_lp_norm(const Domain& dom, const NodeField& u, double p) {
  const MetricGraph& g = dom.graph();
  double s = 0.0;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    double q = std::abs(u[g.edge(e).a] - u[g.edge(e).b]) / g.edge(e).len;
    s += dom.edge_weight(e) * std::pow(q, p);
  }
  return std::pow(s, 1.0 / p);
}

struct NewtonianNorm {
  double lp_norm = 0.0;
  double grad_lp_norm = 0.0;
};

inline NewtonianNorm newtonian_norm(const Domain& dom, const NodeField& u, double p) {
  if (p < 1.0) throw UsageError("newtonian_norm: p must be >= 1");
  check_field(dom, u, "newtonian_norm");
  return NewtonianNorm{lp_norm_interior(dom, u, p), gradient_lp_norm(dom, u, p)};
}

/// Boundary restriction. Discrete functions carry their boundary values, so
/// the trace is the identity on them; kept as a named operation because every
/// boundary quantity below is a statement about Tu rather than u.
inline std::map<NodeId, double> trace(const Domain& dom, const NodeField& u) {
  check_field(dom, u, "trace");
  std::map<NodeId, double> out;
  for (NodeId z : dom.boundary()) out.emplace(z, u[z]);
  return out;
}

/// mu-average of u over B(z,r) cap Omega; the quantity whose r->0 limit
/// defines the trace. Errors when the ball carries no interior mass.
inline double trace_ball_average(const Domain& dom, const NodeField& u, NodeId z,
                                 double r) {
  check_field(dom, u, "trace_ball_average");
  auto b = ball(dom, z, r);
  double mass = 0.0, sum = 0.0;
  for (NodeId i : b)
    if (dom.is_interior(i)) {
      mass += dom.mu(i);
      sum += u[i] * dom.mu(i);
    }
  if (!(mass > 0.0))
    throw UsageError("trace_ball_average: ball around '" + dom.graph().node(z).name +
                     "' carries no interior mass (radius below resolution)");
  return sum / mass;
}

inline double boundary_integral(const Domain& dom, const NodeField& h) {
  if (h.size() != static_cast<std::size_t>(dom.node_count()))
    throw UsageError("boundary_integral: field size does not match the domain");
  double s = 0.0;
  for (NodeId z : dom.boundary()) {
    if (!std::isfinite(h[z]))
      throw UsageError("boundary_integral: missing value at boundary node '" +
                       dom.graph().node(z).name + "'");
    s += h[z] * dom.perimeter(z);
  }
  return s;
}

inline double boundary_integral(const Domain& dom,
                                const std::map<NodeId, double>& h) {
  double s = 0.0;
  for (NodeId z : dom.boundary()) {
    auto it = h.find(z);
    if (it == h.end() || !std::isfinite(it->second))
      throw UsageError("boundary_integral: missing value at boundary node '" +
                       dom.graph().node(z).name + "'");
    s += it->second * dom.perimeter(z);
  }
  return s;
}

/// ||u - u_Omega||_p / ||grad u||_p for one field; the embedding-constant
/// contribution of u. Returns -1 for fields with vanishing gradient norm.
inline double sobolev_ratio(const Domain& dom, const NodeField& u, double p) {
  double g = gradient_lp_norm(dom, u, p);
  if (!(g > 0.0)) return -1.0;
  NodeField v = u;
  project_mean_zero(dom, v);
  return lp_norm_interior(dom, v, p) / g;
}

/// Sampled lower bound for the constant of the embedding
/// ||u - u_Omega||_p <= C ||grad u||_p over the interior.
inline double check_sobolev_embedding(const Domain& dom, double p, int trials,
                                      std::uint64_t seed) {
  if (!(p > 1.0)) throw UsageError("check_sobolev_embedding: p must be > 1");
  if (dom.interior().size() < 2)
    throw UsageError("check_sobolev_embedding: need at least two interior nodes");
  double best = -1.0;
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    NodeField u = NodeField::zeros(dom);
    for (NodeId i = 0; i < dom.node_count(); ++i) u[i] = uni(rng);
    best = std::max(best, sobolev_ratio(dom, u, p));
  }
  // coordinate-style probes: distance functions from a few nodes
  for (std::size_t j = 0; j < dom.interior().size(); j += std::max<std::size_t>(1, dom.interior().size() / 4)) {
    auto dist = dom.graph().distances(dom.interior()[j]);
    NodeField u = NodeField::zeros(dom);
    for (NodeId i = 0; i < dom.node_count(); ++i)
      u[i] = std::isfinite(dist[i]) ? dist[i] : 0.0;
    best = std::max(best, sobolev_ratio(dom, u, p));
  }
  if (best < 0.0)
    throw UsageError("check_sobolev_embedding: all sampled fields were constant");
  return best;
}

struct TraceSample {
  std::string center;
  double r = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct TraceReport {
  double p = 0.0, p_tilde = 0.0, p_star = 0.0;
  double epsilon = 0.0, aleph = 0.0;
  double max_ratio = 0.0;
  bool ahlfors_mode = false;     // epsilon = 0 at scales below diag.ahlfors_scale
  std::string gradient = "node_upper";
  std::vector<TraceSample> samples;
};

// forward declaration; SpaceDiagnostics lives with the space diagnostics
struct SpaceDiagnostics;

namespace detail {
inline double trace_lhs(const Domain& dom, const NodeField& u,
                        const std::vector<NodeId>& b, double p_tilde) {
  double s = 0.0;
  for (NodeId z : b)
    if (dom.is_boundary(z)) s += std::pow(std::abs(u[z]), p_tilde) * dom.perimeter(z);
  return std::pow(s, 1.0 / p_tilde);
}

inline double trace_rhs(const Domain& dom, const NodeField& u,
                        const std::vector<NodeId>& b, double r, double p,
                        double p_tilde, double aleph) {
  GradientField g = upper_gradient(dom, u);
  double grad = 0.0, mass = 0.0, l1 = 0.0, perim = 0.0;
  for (NodeId i : b) {
    if (dom.is_interior(i)) {
      grad += std::pow(g.node_upper[i], p) * dom.mu(i);
      mass += dom.mu(i);
      l1 += std::abs(u[i]) * dom.mu(i);
    } else if (dom.is_boundary(i)) {
      perim += dom.perimeter(i);
    }
  }
  if (!(mass > 0.0)) return -1.0;  // no interior mass in the ball
  return std::pow(r, 1.0 - 1.0 / p_tilde - aleph) * std::pow(grad, 1.0 / p) +
         std::pow(perim, 1.0 / p_tilde) * l1 / mass;
}
}  // namespace detail

/// Empirical constant for the boundary restriction estimate
///   ||Tu||_{L^ptilde(bd cap B)} <= C ( r^{1-1/ptilde-aleph} ||g_u||_{L^p(B cap Omega)}
///                                     + P(bd cap B)^{1/ptilde} ||u||_{L^1} / mu(B cap Omega) ).
/// Exponents follow the s-dimensional theory; the node upper gradient is used.
template <typename Diag>
TraceReport check_trace_inequality(const Domain& dom, double p, double p_tilde,
                                   const Diag& diag, int trials,
                                   std::uint64_t seed) {
  double s = diag.mass_exponent;
  if (!(p > 1.0)) throw UsageError("check_trace_inequality: p must be > 1");
  if (!(p < s))
    throw UsageError("check_trace_inequality: requires p < s (got p >= s)");
  double p_star = p * (s - 1.0) / (s - p);
  if (!(p < p_tilde && p_tilde < p_star))
    throw UsageError("check_trace_inequality: p_tilde outside (p, p*)");
  TraceReport rep;
  rep.p = p;
  rep.p_tilde = p_tilde;
  rep.p_star = p_star;
  rep.ahlfors_mode = diag.ahlfors_scale > 0.0;
  rep.epsilon =
      rep.ahlfors_mode ? 0.0 : 0.5 * (s - 1.0) * (1.0 / p_tilde - 1.0 / p_star);
  rep.aleph = s * (1.0 / p - 1.0 / p_tilde) + rep.epsilon;

  double h = dom.resolution();
  double rmax = dom.diameter() / 2.0;
  if (rep.ahlfors_mode) rmax = std::min(rmax, 0.999 * diag.ahlfors_scale);
  std::vector<double> radii;
  for (double r = rmax; r >= 1.5 * h; r /= 2.0) radii.push_back(r);
  if (radii.empty()) radii.push_back(1.5 * h);

  auto consider = [&](const NodeField& u, NodeId z, double r) {
    auto b = ball(dom, z, r);
    double lhs = detail::trace_lhs(dom, u, b, p_tilde);
    double rhs = detail::trace_rhs(dom, u, b, r, p, p_tilde, rep.aleph);
    if (rhs <= 0.0) return;  // empty interior or zero field: nothing to certify
    TraceSample row{dom.graph().node(z).name, r, lhs, rhs, lhs / rhs};
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.samples.push_back(row);
  };

  const auto& bd = dom.boundary();
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    NodeId z = bd[static_cast<std::size_t>(rng() % bd.size())];
    double r = radii[static_cast<std::size_t>(rng() % radii.size())];
    NodeField u = NodeField::zeros(dom);
    for (NodeId i = 0; i < dom.node_count(); ++i) u[i] = uni(rng);
    consider(u, z, r);
    consider(NodeField::constant(dom, 1.0), z, r);  // constant-function anchor
  }
  return rep;
}

}  // namespace nplap
