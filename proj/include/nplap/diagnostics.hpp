#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nplap/calculus.hpp"
#include "nplap/graph.hpp"
#include "nplap/log.hpp"
#include "nplap/rng.hpp"

namespace nplap {

namespace detail {

// Sorted (distance, mu) profile around a center; prefix sums answer
// mu(B(center, r)) for any r in O(log n).
struct BallProfile {
  std::vector<double> dist;
  std::vector<double> mu_prefix;       // ambient mass strictly inside radius
  std::vector<double> mu_in_prefix;    // interior mass only

  double mu(double r) const { return at(mu_prefix, r); }
  double mu_interior(double r) const { return at(mu_in_prefix, r); }

 private:
  double at(const std::vector<double>& pre, double r) const {
    auto it = std::lower_bound(dist.begin(), dist.end(), r);
    return pre[static_cast<std::size_t>(it - dist.begin())];
  }
};

inline BallProfile ball_profile(const Domain& dom, NodeId center) {
  std::vector<double> d = dom.graph().distances(center);
  std::vector<NodeId> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<NodeId>(i);
  std::sort(order.begin(), order.end(),
            [&](NodeId a, NodeId b) { return d[a] < d[b]; });
  BallProfile pr;
  pr.dist.reserve(order.size());
  pr.mu_prefix.assign(1, 0.0);
  pr.mu_in_prefix.assign(1, 0.0);
  for (NodeId i : order) {
    if (d[i] == kInf) break;
    pr.dist.push_back(d[i]);
    pr.mu_prefix.push_back(pr.mu_prefix.back() + dom.mu(i));
    pr.mu_in_prefix.push_back(pr.mu_in_prefix.back() +
                              (dom.is_interior(i) ? dom.mu(i) : 0.0));
  }
  return pr;
}

inline std::vector<NodeId> sample_nodes(const std::vector<NodeId>& pool,
                                        int want) {
  std::vector<NodeId> out;
  if (pool.empty() || want <= 0) return out;
  int n = static_cast<int>(pool.size());
  if (n <= want) return pool;
  for (int k = 0; k < want; ++k)
    out.push_back(pool[static_cast<std::size_t>(
        (static_cast<long long>(k) * n) / want)]);
  return out;
}

inline std::vector<double> dyadic_radii(const Domain& dom) {
  std::vector<double> radii;
  double h = dom.resolution();
  for (double r = dom.diameter(); r >= 1.5 * h && radii.size() < 12; r *= 0.5)
    radii.push_back(r);
  if (radii.empty()) radii.push_back(std::max(dom.diameter(), h));
  return radii;
}

}  // namespace detail

struct MassExponentFit {
  double s = 1.0 + 1e-6;
  double c = 1.0;
  double r_min = 0.0;  // radius range certified by (s, c)
  double r_max = 0.0;
  int pairs_used = 0;
  int pairs_skipped = 0;
};

/// Fits an exponent s and a companion constant c such that
///   mu(B(x,r)) >= c (r/R)^s mu(B(y,R))
/// for every pair of nodes x, y and every pair of radii r <= R in
/// [r_min, r_max], whenever the small ball carries mass. Pairs whose small
/// ball is empty sit below the resolution of the discretization and fall
/// outside the certificate. The exponent comes from a log-log least squares
/// fit of shell-exact ball mass against radius, with a common slope but one
/// intercept per sampled center (so centers near the boundary do not skew
/// the scaling) and a half-resolution smearing of the radius (the mass held
/// strictly inside radius just above d matches a continuum ball of radius
/// d + h/2); it is clamped to 1 + 1e-6 from below. The constant then comes
/// from an exact scan of the normalized profile q(x, r) = mu(B(x,r)) / r^s,
/// which is piecewise monotone in r, so the certificate is not limited to
/// sampled radii.
inline MassExponentFit estimate_mass_exponent(const Domain& dom,
                                              int slope_centers = 24) {
  std::vector<NodeId> all(static_cast<std::size_t>(dom.node_count()));
  for (NodeId i = 0; i < dom.node_count(); ++i) all[i] = i;
  std::vector<NodeId> centers = detail::sample_nodes(all, slope_centers);
  double h = dom.resolution();

  MassExponentFit fit;
  double sxx = 0.0, sxy = 0.0;
  auto slope_pass = [&](double top) {
    sxx = sxy = 0.0;
    fit.pairs_used = 0;
    fit.pairs_skipped = 0;
    for (NodeId c : centers) {
      detail::BallProfile pr = detail::ball_profile(dom, c);
      std::vector<std::pair<double, double>> pts;  // (log r, log mass)
      double last_d = 0.0, cum = 0.0;
      auto flush = [&]() {
        if (last_d <= 0.0 || last_d > top) return;
        if (!(cum > 0.0)) {
          ++fit.pairs_skipped;
          return;
        }
        pts.emplace_back(std::log(last_d + 0.5 * h), std::log(cum));
      };
      for (std::size_t i = 0; i < pr.dist.size(); ++i) {
        if (pr.dist[i] > last_d) {
          flush();
          last_d = pr.dist[i];
        }
        cum = pr.mu_prefix[i + 1];
      }
      flush();
      if (pts.size() < 2) continue;
      double mx = 0.0, my = 0.0;
      for (auto& [lx, ly] : pts) {
        mx += lx;
        my += ly;
      }
      mx /= static_cast<double>(pts.size());
      my /= static_cast<double>(pts.size());
      for (auto& [lx, ly] : pts) {
        sxx += (lx - mx) * (lx - mx);
        sxy += (lx - mx) * (ly - my);
        ++fit.pairs_used;
      }
    }
  };
  slope_pass(dom.diameter() / 4.0);  // scaling window below saturation
  if (fit.pairs_used == 0) slope_pass(dom.diameter());
  double slope = (sxx > 1e-30) ? sxy / sxx : 1.0;
  fit.s = std::max(slope, 1.0 + 1e-6);

  // certificate pass (every node up to 2048, strided beyond): mu(B(x, .)) is
  // a right-continuous step function of the radius, so q(x, r) =
  // mu(B(x,r)) / r^s attains its extremes at segment ends; c = (inf q) /
  // (sup q) then certifies the bound for arbitrary radii in [r_min, r_max],
  // not just sampled ones
  fit.r_min = 1.5 * dom.resolution();
  fit.r_max = std::max(dom.diameter(), 2.0 * fit.r_min);
  double low_q = kInf, high_q = 0.0;
  std::vector<NodeId> cert_centers =
      dom.node_count() <= 2048 ? all : detail::sample_nodes(all, 2048);
  for (NodeId x : cert_centers) {
    auto pr = detail::ball_profile(dom, x);
    std::vector<double> bk{0.0};  // unique breakpoints
    std::vector<double> cum{0.0};
    for (std::size_t i = 0; i < pr.dist.size(); ++i) {
      if (pr.dist[i] > bk.back()) {
        bk.push_back(pr.dist[i]);
        cum.push_back(0.0);
      }
      cum.back() = pr.mu_prefix[i + 1];
    }
    for (std::size_t j = 0; j < bk.size(); ++j) {
      // on (bk[j], next] the ball mass is cum[j]
      double lo = bk[j];
      double hi = (j + 1 < bk.size()) ? bk[j + 1] : fit.r_max;
      double right = std::min(hi, fit.r_max);
      if (!(right > lo) || right < fit.r_min) continue;
      double mass = cum[j];
      if (!(mass > 0.0)) continue;
      low_q = std::min(low_q, mass / std::pow(right, fit.s));
      high_q = std::max(high_q, mass / std::pow(std::max(lo, fit.r_min), fit.s));
    }
  }
  fit.c = (high_q > 0.0 && low_q < kInf) ? low_q / high_q : 1.0;
  return fit;
}

struct DensityReport {
  double worst_ratio = 1.0;
  NodeId witness_node = -1;
  double witness_radius = 0.0;
  int samples_used = 0;
  int samples_skipped = 0;
};

/// Measure density of the domain in the ambient space: scans balls centered
/// on interior and boundary nodes and reports the worst observed ratio
/// mu(B cap interior) / mu(B) together with the witnessing ball. Balls with
/// no ambient mass are skipped.
inline DensityReport check_density(const Domain& dom, int max_centers = 64) {
  std::vector<NodeId> centers;
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!dom.is_exterior(i)) centers.push_back(i);
  centers = detail::sample_nodes(centers, max_centers);
  std::vector<double> radii = detail::dyadic_radii(dom);

  DensityReport rep;
  bool first = true;
  for (NodeId c : centers) {
    auto pr = detail::ball_profile(dom, c);
    for (double r : radii) {
      double ambient = pr.mu(r);
      if (!(ambient > 0.0)) {
        ++rep.samples_skipped;
        continue;
      }
      double ratio = pr.mu_interior(r) / ambient;
      ++rep.samples_used;
      if (first || ratio < rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.witness_node = c;
        rep.witness_radius = r;
        first = false;
      }
    }
  }
  if (first) throw UsageError("check_density: no ball carries any mass");
  return rep;
}

struct PerimeterRegularity {
  double c_low = 1.0;   // bounds mu(B) / (r P(boundary cap B))
  double c_high = 1.0;  // bounds P(boundary cap B) r / mu(B)
  int samples_used = 0;
  int samples_skipped = 0;
};

/// Codimension-one comparison between perimeter and measure on balls
/// centered at boundary nodes: P(boundary cap B(x,r)) should behave like
/// mu(B(x,r)) / r. Reports the constants needed in both directions.
/// Degenerate samples (no mass in the ball) are skipped and logged.
inline PerimeterRegularity check_perimeter_regularity(const Domain& dom,
                                                      int max_centers = 32) {
  std::vector<NodeId> centers =
      detail::sample_nodes(dom.boundary(), max_centers);
  std::vector<double> radii = detail::dyadic_radii(dom);

  PerimeterRegularity rep;
  rep.c_low = 0.0;
  rep.c_high = 0.0;
  for (NodeId c : centers) {
    std::vector<double> d = dom.graph().distances(c);
    for (double r : radii) {
      double mass = 0.0, per = 0.0;
      for (NodeId i = 0; i < dom.node_count(); ++i) {
        if (!(d[i] < r)) continue;
        mass += dom.mu(i);
        if (dom.is_boundary(i)) per += dom.perimeter(i);
      }
      if (!(mass > 0.0)) {
        ++rep.samples_skipped;
        log_debug("check_perimeter_regularity: ball of radius " +
                  std::to_string(r) + " at node " + std::to_string(c) +
                  " carries no mass, skipped");
        continue;
      }
      ++rep.samples_used;
      rep.c_low = std::max(rep.c_low, mass / (r * per));
      rep.c_high = std::max(rep.c_high, per * r / mass);
    }
  }
  if (rep.samples_used == 0)
    throw UsageError("check_perimeter_regularity: every sample degenerate");
  return rep;
}

/// Ratio of the mean oscillation of u over a node set to rad * mean p-norm
/// of the node upper gradient, all averaged against mu on the set. Returns
/// -1 when the gradient part vanishes.
inline double poincare_ratio(const Domain& dom, const std::vector<NodeId>& set,
                             const NodeField& u, double p) {
  if (!(p >= 1.0)) throw UsageError("poincare_ratio: p must be >= 1");
  double mass = 0.0;
  for (NodeId i : set) mass += dom.mu(i);
  if (!(mass > 0.0))
    throw UsageError("poincare_ratio: set carries no measure");
  double mean = 0.0;
  for (NodeId i : set) mean += u[i] * dom.mu(i);
  mean /= mass;

  GradientField g = upper_gradient(dom, u);
  double osc = 0.0, gp = 0.0;
  for (NodeId i : set) {
    osc += std::abs(u[i] - mean) * dom.mu(i);
    gp += std::pow(g.node_upper[i], p) * dom.mu(i);
  }
  osc /= mass;
  gp /= mass;
  double rad = set_diameter(dom, set);
  double rhs = rad * std::pow(gp, 1.0 / p);
  if (!(rhs > 0.0)) return -1.0;
  return osc / rhs;
}

/// Sampled lower bound for the Poincare constant of a node set: the best
/// ratio found over random fields and distance-function probes. Seeded and
/// thread-count independent.
inline double estimate_poincare_constant(const Domain& dom,
                                         const std::vector<NodeId>& set,
                                         double p, int trials = 32,
                                         std::uint64_t seed = 0) {
  if (set.empty()) throw UsageError("estimate_poincare_constant: empty set");
  double best = 0.0;
  bool any = false;
  auto consider = [&](const NodeField& u) {
    double r = poincare_ratio(dom, set, u, p);
    if (r >= 0.0) {
      best = std::max(best, r);
      any = true;
    }
  };

  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    NodeField u(static_cast<std::size_t>(dom.node_count()), 0.0);
    for (NodeId i = 0; i < dom.node_count(); ++i) u[i] = unif(rng);
    consider(u);
  }
  for (NodeId c : detail::sample_nodes(set, 8)) {
    std::vector<double> d = dom.graph().distances(c);
    NodeField u(static_cast<std::size_t>(dom.node_count()), 0.0);
    for (NodeId i = 0; i < dom.node_count(); ++i)
      u[i] = (d[i] == kInf) ? 0.0 : d[i];
    consider(u);
  }
  if (!any)
    throw UsageError(
        "estimate_poincare_constant: every trial had vanishing gradient");
  return best;
}

/// Worst sampled ratio mu(B(x,2r)) / mu(B(x,r)); always >= 1.
inline double estimate_doubling(const Domain& dom, int max_centers = 48) {
  std::vector<NodeId> all(static_cast<std::size_t>(dom.node_count()));
  for (NodeId i = 0; i < dom.node_count(); ++i) all[i] = i;
  double cd = 1.0;
  for (NodeId c : detail::sample_nodes(all, max_centers)) {
    auto pr = detail::ball_profile(dom, c);
    for (double r : detail::dyadic_radii(dom)) {
      double m1 = pr.mu(r);
      if (!(m1 > 0.0)) continue;
      cd = std::max(cd, pr.mu(2.0 * r) / m1);
    }
  }
  return cd;
}

/// Largest dyadic radius r0 such that, for every sampled boundary center and
/// every tested radius r < r0, the normalized mass mu(B(x,r)) / r^s stays
/// within the given spread budget across samples. Zero when no scale passes.
inline double estimate_ahlfors_scale(const Domain& dom, double s,
                                     double budget = 16.0,
                                     int max_centers = 16) {
  std::vector<NodeId> centers =
      detail::sample_nodes(dom.boundary(), max_centers);
  if (centers.empty()) return 0.0;
  std::vector<detail::BallProfile> prof;
  for (NodeId c : centers) prof.push_back(detail::ball_profile(dom, c));

  std::vector<double> radii = detail::dyadic_radii(dom);
  double floor_r = 1.5 * dom.resolution();
  if (radii.back() > floor_r * (1.0 + 1e-9)) radii.push_back(floor_r);
  std::sort(radii.begin(), radii.end());  // ascending, small scales first
  double r0 = 0.0;
  for (double r : radii) {
    double lo = kInf, hi = 0.0;
    for (auto& pr : prof) {
      double q = pr.mu(r) / std::pow(r, s);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (!(lo > 0.0) || hi / lo > budget) break;
    r0 = 2.0 * r;  // every radius strictly below r0 = 2r has been checked
  }
  return r0;
}

struct SpaceDiagnostics {
  double doubling_constant = 1.0;
  double mass_exponent = 1.0 + 1e-6;
  double mass_constant = 1.0;
  double poincare_constant = 1.0;
  double density_constant = 1.0;
  double perimeter_reg_constant = 1.0;
  double ahlfors_scale = 0.0;
};

/// One-stop geometric survey of a domain. Comparison constants are clamped
/// to >= 1; the mass exponent to > 1. The Poincare entry is a sampled lower
/// bound for the true constant, clamped to 1 from below so that downstream
/// estimates remain conservative.
inline SpaceDiagnostics diagnose_space(const Domain& dom, double p = 2.0,
                                       int trials = 24,
                                       std::uint64_t seed = 0) {
  SpaceDiagnostics d;
  d.doubling_constant = std::max(1.0, estimate_doubling(dom));
  MassExponentFit fit = estimate_mass_exponent(dom);
  d.mass_exponent = fit.s;
  d.mass_constant = fit.c;
  DensityReport den = check_density(dom);
  d.density_constant = std::max(1.0, 1.0 / den.worst_ratio);
  PerimeterRegularity per = check_perimeter_regularity(dom);
  d.perimeter_reg_constant = std::max({1.0, per.c_low, per.c_high});

  std::vector<NodeId> everything;
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!dom.is_exterior(i)) everything.push_back(i);
  d.poincare_constant = std::max(
      1.0, estimate_poincare_constant(dom, everything, p, trials, seed));
  d.ahlfors_scale = estimate_ahlfors_scale(dom, d.mass_exponent);
  return d;
}

}  // namespace nplap
