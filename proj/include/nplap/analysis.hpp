#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nplap/calculus.hpp"
#include "nplap/graph.hpp"
#include "nplap/log.hpp"
#include "nplap/parallel.hpp"
#include "nplap/rng.hpp"
#include "nplap/solver.hpp"

namespace nplap {

namespace detail {

inline double max_edge_len(const Domain& dom) {
  double m = 0.0;
  for (const Edge& e : dom.graph().edges()) m = std::max(m, e.len);
  return m;
}

// (u - k)_+ on non-exterior nodes, zero elsewhere.
inline NodeField positive_part_above(const Domain& dom, const NodeField& u,
                                     double k) {
  NodeField w(static_cast<std::size_t>(dom.node_count()), 0.0);
  for (NodeId i = 0; i < dom.node_count(); ++i)
    if (!dom.is_exterior(i)) w[i] = std::max(u[i] - k, 0.0);
  return w;
}

}  // namespace detail

// ------------------------------------------------------------------
// level-set statistics around a center
// ------------------------------------------------------------------

struct LevelSetStats {
  NodeId x = -1;
  double k = 0.0, r = 0.0, R = 0.0;
  double u_kr = 0.0;         // (avg of (u-k)_+^p over interior ball, mu)^{1/p}
  double psi_kR = 0.0;       // avg of (u-k)_+ over boundary ball, perimeter
  double A_measure = 0.0;    // mu{y in B(x,r) interior : u(y) > k}
  double A_perimeter = 0.0;  // P{y in B(x,r) boundary : u(y) > k}
  double mu_ball = 0.0;      // mu(B(x,r) cap interior)
  double per_ball = 0.0;     // P(B(x,R) cap boundary)
  double M_R = 0.0, m_R = 0.0;  // sup / inf of u over B(x,R) cap interior
};

/// Superlevel statistics of u at level k around x: the L^p mean of the
/// positive part over the interior ball of radius r and its perimeter mean
/// over the boundary ball of radius R, plus superlevel mass at radius r.
inline LevelSetStats level_set_stats(const Domain& dom, const NodeField& u,
                                     NodeId x, double k, double r, double R,
                                     double p) {
  if (!(p >= 1.0)) throw UsageError("level_set_stats: p must be >= 1");
  if (!(r > 0.0) || !(R >= r))
    throw UsageError("level_set_stats: need 0 < r <= R");
  LevelSetStats st;
  st.x = x;
  st.k = k;
  st.r = r;
  st.R = R;

  double usum = 0.0;
  for (NodeId i : ball(dom, x, r)) {
    if (dom.is_interior(i)) {
      st.mu_ball += dom.mu(i);
      double w = std::max(u[i] - k, 0.0);
      usum += std::pow(w, p) * dom.mu(i);
      if (u[i] > k) st.A_measure += dom.mu(i);
    } else if (dom.is_boundary(i) && u[i] > k) {
      st.A_perimeter += dom.perimeter(i);
    }
  }
  if (!(st.mu_ball > 0.0))
    throw UsageError("level_set_stats: B(x,r) carries no interior measure");
  st.u_kr = std::pow(usum / st.mu_ball, 1.0 / p);

  double psum = 0.0;
  bool seen_interior = false;
  for (NodeId i : ball(dom, x, R)) {
    if (dom.is_boundary(i)) {
      st.per_ball += dom.perimeter(i);
      psum += std::max(u[i] - k, 0.0) * dom.perimeter(i);
    } else if (dom.is_interior(i)) {
      if (!seen_interior) {
        st.M_R = st.m_R = u[i];
        seen_interior = true;
      } else {
        st.M_R = std::max(st.M_R, u[i]);
        st.m_R = std::min(st.m_R, u[i]);
      }
    }
  }
  if (!(st.per_ball > 0.0))
    throw UsageError("level_set_stats: B(x,R) contains no boundary part");
  st.psi_kR = psum / st.per_ball;
  return st;
}

// ------------------------------------------------------------------
// graph-distance cutoff
// ------------------------------------------------------------------

/// Piecewise-linear bump: 1 on B(x,r), 0 outside B(x,R), linear in the
/// distance in between. Every edge quotient is bounded by 1/(R-r) because
/// distances to x are 1-Lipschitz along edges.
inline NodeField cutoff(const Domain& dom, NodeId x, double r, double R) {
  if (!(r > 0.0) || !(R > r)) throw UsageError("cutoff: need 0 < r < R");
  std::vector<double> d = dom.graph().distances(x);
  NodeField eta(static_cast<std::size_t>(dom.node_count()), 0.0);
  for (NodeId i = 0; i < dom.node_count(); ++i) {
    if (d[i] == kInf) continue;
    eta[i] = std::clamp((R - d[i]) / (R - r), 0.0, 1.0);
  }
  return eta;
}

// ------------------------------------------------------------------
// Caccioppoli-type inequality on balls
// ------------------------------------------------------------------

struct DeGiorgiTuple {
  NodeId x = -1;
  double r = 0.0, R = 0.0, k = 0.0;
};

struct DeGiorgiRow {
  DeGiorgiTuple tuple;
  double lhs = 0.0;           // energy of the truncation inside B(x,r)
  double rhs_volume = 0.0;    // (R-r)^{-p} mass of (u-k)_+^p in B(x,R)
  double rhs_boundary = 0.0;  // |f| (u-k)_+ against perimeter in B(x,R)
  double ratio = 0.0;         // lhs / (rhs_volume + rhs_boundary), 0 if vacuous
  bool vacuous = false;       // both sides zero
  bool hard_failure = false;  // rhs zero with lhs positive
};

struct DeGiorgiReport {
  double p = 2.0;
  double c_budget = 1e3;
  double max_ratio = 0.0;
  bool hard_failure = false;
  bool pass = false;
  std::vector<DeGiorgiRow> rows;
};

/// One sampled instance of the energy-level inequality: the p-energy of
/// (u-k)_+ measured with the node upper gradient inside the small ball must
/// be controlled by the level mass in the large ball plus the boundary-data
/// term. Callers should keep R - r at or above the longest edge so that the
/// nonlocality of edge quotients cannot leak mass past the large ball.
inline DeGiorgiRow degiorgi_row(const Domain& dom, const NodeField& u,
                                const NodeField& f, double p,
                                const DeGiorgiTuple& t) {
  if (!(t.R > t.r) || !(t.r > 0.0))
    throw UsageError("degiorgi_row: need 0 < r < R");
  DeGiorgiRow row;
  row.tuple = t;
  NodeField w = detail::positive_part_above(dom, u, t.k);
  GradientField g = upper_gradient(dom, w);
  for (NodeId i : ball(dom, t.x, t.r))
    if (dom.is_interior(i))
      row.lhs += std::pow(g.node_upper[i], p) * dom.mu(i);
  for (NodeId i : ball(dom, t.x, t.R)) {
    if (dom.is_interior(i))
      row.rhs_volume += std::pow(w[i], p) * dom.mu(i);
    else if (dom.is_boundary(i))
      row.rhs_boundary += std::abs(f[i]) * w[i] * dom.perimeter(i);
  }
  row.rhs_volume /= std::pow(t.R - t.r, p);
  double denom = row.rhs_volume + row.rhs_boundary;
  if (denom > 0.0) {
    row.ratio = row.lhs / denom;
  } else if (row.lhs > 0.0) {
    row.hard_failure = true;
    row.ratio = kInf;
  } else {
    row.vacuous = true;
  }
  return row;
}

/// Evaluates the inequality on every sampled tuple (concurrently; results
/// merge in tuple order) and compares the worst constant against the budget.
/// A zero right side with a positive left side is a hard failure regardless
/// of the budget.
inline DeGiorgiReport check_degiorgi(const Domain& dom, const NodeField& u,
                                     const NodeField& f, double p,
                                     const std::vector<DeGiorgiTuple>& tuples,
                                     double c_budget = 1e3, int threads = 1) {
  DeGiorgiReport rep;
  rep.p = p;
  rep.c_budget = c_budget;
  rep.rows.resize(tuples.size());
  parallel_for(tuples.size(), threads, [&](std::size_t i) {
    rep.rows[i] = degiorgi_row(dom, u, f, p, tuples[i]);
  });
  for (const DeGiorgiRow& row : rep.rows) {
    if (row.hard_failure) rep.hard_failure = true;
    if (!row.vacuous && !row.hard_failure)
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
  }
  rep.pass = !rep.hard_failure && rep.max_ratio <= c_budget;
  return rep;
}

/// Default sampling grid: boundary centers, dyadic R with r = R/2 kept a
/// whole edge apart, and levels at fixed quantile positions of u inside the
/// large ball.
inline std::vector<DeGiorgiTuple> make_degiorgi_tuples(const Domain& dom,
                                                       const NodeField& u,
                                                       int max_centers = 8,
                                                       int max_radii = 4) {
  std::vector<DeGiorgiTuple> out;
  std::vector<NodeId> centers;
  {
    const std::vector<NodeId>& b = dom.boundary();
    int n = static_cast<int>(b.size());
    int want = std::min(max_centers, n);
    for (int k = 0; k < want; ++k)
      centers.push_back(b[static_cast<std::size_t>(
          (static_cast<long long>(k) * n) / want)]);
  }
  double top = dom.diameter() / 2.0;
  double floor_R = 2.0 * detail::max_edge_len(dom);
  for (NodeId x : centers) {
    int used = 0;
    for (double R = top; R >= floor_R && used < max_radii; R *= 0.5, ++used) {
      double lo = kInf, hi = -kInf;
      for (NodeId i : ball(dom, x, R))
        if (dom.is_interior(i)) {
          lo = std::min(lo, u[i]);
          hi = std::max(hi, u[i]);
        }
      if (!(lo <= hi)) continue;  // no interior nodes in the ball
      for (double q : {0.15, 0.5, 0.85})
        out.push_back({x, R / 2.0, R, lo + q * (hi - lo)});
    }
  }
  return out;
}

// ------------------------------------------------------------------
// exponent bookkeeping
// ------------------------------------------------------------------

struct DeGiorgiParams {
  double s = 0.0, p = 0.0;
  double kappa = 0.0, kappa_tilde = 0.0;
  double alpha = 0.0, beta = 0.0;
  double aleph = 0.0;
  double C = 1.0;    // empirical comparison constant fed into d and lambda
  double C_f = 0.0;  // sup-norm^{1/p} of the data near the point, set per run
  double sigma = 0.0, tau = 0.0;
  double d = 0.0;
  int nu = 3;
  double D = 0.0;
  double theta0 = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  bool eligible = false;
};

struct ExponentConfig {
  std::optional<double> kappa;        // override, must lie in the open window
  std::optional<double> kappa_tilde;  // override
  double C = 1.0;                     // empirical constant scale
  bool ahlfors = false;               // drop the trace slack epsilon
  int nu = 3;
};

/// Derives the iteration exponents from the volume-scaling exponent s and p.
/// kappa sits in (p, s/(s-p)) so that alpha + 1/p - 1 > 0 (that window is
/// nonempty exactly when p^2 - sp + s > 0, the eligibility condition);
/// kappa_tilde sits in (1, (s-1)/(s-p)). When eligible, sigma is the
/// explicit three-way max and tau the midpoint of its admissible window;
/// an empty window is an inconsistency and throws.
inline DeGiorgiParams compute_exponents(double s, double p,
                                        const ExponentConfig& cfg = {}) {
  if (!(p > 1.0) || !(s > 1.0))
    throw UsageError("compute_exponents: need p > 1 and s > 1");
  if (p >= s)
    throw UsageError(
        "compute_exponents: theory inapplicable for this regime (p >= s)");
  DeGiorgiParams pr;
  pr.s = s;
  pr.p = p;
  pr.C = cfg.C;
  pr.nu = std::max(cfg.nu, 3);
  pr.eligible = (p * p - s * p + s > 0.0);

  double kappa_hi = s / (s - p);
  double kappa_lo = pr.eligible ? p : 1.0;
  pr.kappa = cfg.kappa ? *cfg.kappa : 0.5 * (kappa_lo + kappa_hi);
  if (!(pr.kappa > 1.0) || !(pr.kappa < kappa_hi))
    throw UsageError("compute_exponents: kappa outside (1, s/(s-p))");
  double kt_hi = (s - 1.0) / (s - p);
  pr.kappa_tilde = cfg.kappa_tilde ? *cfg.kappa_tilde : 0.5 * (1.0 + kt_hi);
  if (!(pr.kappa_tilde > 1.0) || !(pr.kappa_tilde < kt_hi))
    throw UsageError("compute_exponents: kappa_tilde outside (1, (s-1)/(s-p))");

  pr.alpha = 1.0 - 1.0 / pr.kappa;
  pr.beta = 1.0 - 1.0 / (pr.kappa_tilde * p);

  // trace exponent p~ = kappa_tilde p; the slack epsilon follows the trace
  // inequality defaults and vanishes in the Ahlfors-regular variant
  double p_tilde = pr.kappa_tilde * p;
  double p_star = p * (s - 1.0) / (s - p);
  double eps =
      cfg.ahlfors ? 0.0 : 0.5 * (s - 1.0) * (1.0 / p_tilde - 1.0 / p_star);
  pr.aleph = s * (1.0 / p - 1.0 / p_tilde) + eps;

  pr.D = std::max({std::pow(pr.C, 1.0 / pr.alpha),
                   std::pow(pr.C, 1.0 / pr.beta), 1.0 + 1e-6});

  if (pr.eligible) {
    double a = pr.alpha, b = pr.beta;
    double t1 = (a + 1.0) / a;
    double t2 = 1.0 + b + b * (1.0 - b) / (b + 1.0 / p - 1.0);
    double t3 = (1.0 + b) / (1.0 - p * (1.0 - a) * (1.0 - b));
    pr.sigma = std::max({t1, t2, t3});
    double lo = std::max(b / (b + 1.0 / p - 1.0),
                         p * (pr.sigma - (pr.sigma - 1.0) * a));
    double hi = (pr.sigma - (1.0 + b)) / (1.0 - b);
    if (lo > hi + 1e-9 * std::max(1.0, std::abs(hi)))
      throw HypothesisError(
          "compute_exponents: admissible window for tau is empty");
    pr.tau = 0.5 * (std::min(lo, hi) + hi);
  }
  return pr;
}

// ------------------------------------------------------------------
// one-step decay bounds for the level statistics
// ------------------------------------------------------------------

struct DecayStepBounds {
  double u_lhs = 0.0, psi_lhs = 0.0;  // measured u(k,r) and psi(k,r)
  double u_rhs = 0.0;                 // level-raising bound on u(k,r)
  double psi_rhs = 0.0;       // psi bound carrying the trace-loss factor
  double psi_rhs_strong = 0.0;  // variant valid under volume regularity
  double C_f = 0.0;
};

/// One-step decay bounds when the level rises h -> k and the radius shrinks
/// R -> r. The bracket of the strong psi variant differs from the plain one
/// by the exact factor R^{-aleph}, so the strong form is the tighter bound
/// at sub-unit radii, which is the regime the small-scale iteration runs in.
inline DecayStepBounds decay_step_bounds(const Domain& dom, const NodeField& u,
                                         const NodeField& f, NodeId x,
                                         double h, double k, double r,
                                         double R,
                                         const DeGiorgiParams& params) {
  if (!(h < k)) throw UsageError("decay_step_bounds: need h < k");
  if (!(R / 2.0 <= r) || !(r < R))
    throw UsageError("decay_step_bounds: need R/2 <= r < R");
  double p = params.p;
  LevelSetStats at_k = level_set_stats(dom, u, x, k, r, r, p);
  LevelSetStats at_h = level_set_stats(dom, u, x, h, R, R, p);
  DecayStepBounds out;
  out.u_lhs = at_k.u_kr;
  out.psi_lhs = at_k.psi_kR;
  double fmax = 0.0;
  for (NodeId i : ball(dom, x, R))
    if (dom.is_boundary(i)) fmax = std::max(fmax, std::abs(f[i]));
  out.C_f = std::pow(fmax, 1.0 / p);
  double uh = at_h.u_kr, ph = at_h.psi_kR;
  double bracket = (R / (R - r)) * uh +
                   out.C_f * std::pow(R, 1.0 - 1.0 / p) * std::pow(ph, 1.0 / p);
  out.u_rhs = params.C * std::pow(uh / (k - h), params.alpha) * bracket;
  out.psi_rhs_strong =
      params.C * std::pow(ph / (k - h), params.beta) * bracket;
  out.psi_rhs = std::pow(R, -params.aleph) * out.psi_rhs_strong;
  return out;
}

// ------------------------------------------------------------------
// boundedness iteration near a boundary point
// ------------------------------------------------------------------

struct BoundednessStep {
  int n = 0;
  double r = 0.0, k = 0.0;
  double u_kr = 0.0, psi = 0.0;
  double u_bound = 0.0, psi_bound = 0.0;  // claimed geometric envelopes
};

struct BoundednessReport {
  NodeId x = -1;
  double R = 0.0, k0 = 0.0;
  double sigma = 0.0, tau = 0.0;  // iteration exponents used here
  double C_f = 0.0, C_fR = 0.0;
  double d = 0.0, d_est1 = 0.0, d_est2 = 0.0;
  std::vector<BoundednessStep> steps;
  int truncated_at = -1;
  std::string note;
  bool half_ball_empty = false;
  double sup_half = 0.0;      // max of u over B(x,R/2) cap interior
  double enlargement = 1.0;   // worst measured/claimed ratio over steps
  bool pass = false;
};

/// Runs the shrinking-radius / rising-level scheme: radii (1+2^{-n}) R/2,
/// levels k0 + d (1 - 2^{-n}), with d the maximum of the two closed-form
/// estimates (built from the measured constant in params.C). Verifies the
/// claimed geometric decay of the level statistics and then checks the
/// resulting essential-sup bound u <= k0 + d on the half ball directly.
inline BoundednessReport boundedness_iteration(
    const Domain& dom, const NodeField& u, const NodeField& f, NodeId x,
    double R, const DeGiorgiParams& params, double k0, int n_max = 40) {
  if (!(R > 0.0)) throw UsageError("boundedness_iteration: R must be > 0");
  if (R >= dom.diameter() / 4.0)
    log_info("boundedness_iteration: R at or above diam/4; scale separation "
             "from the trace theorem is not guaranteed");
  double p = params.p;
  if (!(p > 1.0)) throw UsageError("boundedness_iteration: params lack p");

  BoundednessReport rep;
  rep.x = x;
  rep.R = R;
  rep.k0 = k0;

  // the section-5 sufficient exponents; tau first, then sigma from its window
  double a = params.alpha, b = params.beta, kp = params.kappa,
         kt = params.kappa_tilde;
  rep.tau = std::max({(2.0 * kt * p - 1.0) / (kt - 1.0), p * (kp - 1.0),
                      (2.0 * p + 2.0 * kp - 1.0 - 1.0 / kt) / (kp - 1.0 / kt)});
  double lo = std::max(1.0 + 1.0 / a, rep.tau * (1.0 - b) + 1.0 + b);
  double hi = (rep.tau / p - (1.0 + a)) / (1.0 - a);
  if (lo > hi + 1e-9 * std::max(1.0, std::abs(hi)))
    throw HypothesisError(
        "boundedness_iteration: admissible window for sigma is empty");
  rep.sigma = 0.5 * (std::min(lo, hi) + hi);

  double fmax = 0.0;
  for (NodeId i : ball(dom, x, R))
    if (dom.is_boundary(i)) fmax = std::max(fmax, std::abs(f[i]));
  rep.C_f = std::pow(fmax, 1.0 / p);
  rep.C_fR = params.C *
             (1.0 + rep.C_f * std::pow(R, 1.0 - 1.0 / p) +
              std::pow(R, -params.aleph) +
              rep.C_f * std::pow(R, 1.0 - 1.0 / p - params.aleph));

  LevelSetStats st0 = level_set_stats(dom, u, x, k0, R, R, p);
  double u0 = st0.u_kr, psi0 = st0.psi_kR;
  if (u0 > 0.0) {
    double head = rep.C_fR * (u0 + std::pow(psi0, 1.0 / p));
    if (psi0 > 0.0)
      rep.d_est1 =
          std::pow(head * std::pow(2.0, rep.tau) / std::pow(psi0, 1.0 - b),
                   1.0 / b);
    rep.d_est2 =
        std::pow(head * std::pow(2.0, rep.sigma) / std::pow(u0, 1.0 - a),
                 1.0 / a);
    rep.d = std::max(rep.d_est1, rep.d_est2);
  }

  std::vector<NodeId> prev_ball;
  for (int n = 0; n <= n_max; ++n) {
    double rn = (1.0 + std::pow(2.0, -n)) * R / 2.0;
    double kn = k0 + rep.d * (1.0 - std::pow(2.0, -n));
    std::vector<NodeId> bn = ball(dom, x, rn);
    if (n > 0 && bn == prev_ball) {
      rep.truncated_at = n;
      rep.note = "radius ladder collapsed at the graph resolution";
      break;
    }
    prev_ball = bn;
    bool has_interior = false;
    for (NodeId i : bn)
      if (dom.is_interior(i)) has_interior = true;
    if (!has_interior) {
      rep.truncated_at = n;
      rep.note = "ball lost all interior nodes before the ladder finished";
      break;
    }
    LevelSetStats st = level_set_stats(dom, u, x, kn, rn, rn, p);
    BoundednessStep step;
    step.n = n;
    step.r = rn;
    step.k = kn;
    step.u_kr = st.u_kr;
    step.psi = st.psi_kR;
    step.u_bound = std::pow(2.0, -rep.sigma * n) * u0;
    step.psi_bound = std::pow(2.0, -rep.tau * n) * psi0;
    if (step.u_bound > 0.0)
      rep.enlargement = std::max(rep.enlargement, step.u_kr / step.u_bound);
    if (step.psi_bound > 0.0)
      rep.enlargement = std::max(rep.enlargement, step.psi / step.psi_bound);
    rep.steps.push_back(step);
  }

  rep.half_ball_empty = true;
  for (NodeId i : ball(dom, x, R / 2.0)) {
    if (!dom.is_interior(i)) continue;
    if (rep.half_ball_empty) {
      rep.sup_half = u[i];
      rep.half_ball_empty = false;
    } else {
      rep.sup_half = std::max(rep.sup_half, u[i]);
    }
  }
  double scale = std::max(1.0, std::abs(k0) + rep.d);
  rep.pass = rep.half_ball_empty || rep.sup_half <= k0 + rep.d + 1e-12 * scale;
  return rep;
}

// ------------------------------------------------------------------
// oscillation decay near a boundary point
// ------------------------------------------------------------------

struct OscillationStep {
  double R = 0.0;
  double M = 0.0, m = 0.0, osc = 0.0;
  int nu = -1;                 // smallest level index firing the trigger
  double kappa_nu = 0.0;
  double trigger_ratio = 0.0;  // superlevel fraction at the firing level
  double d = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0, lambda = 0.0;
  double contraction = 0.0;    // measured osc(next)/osc(this), 0 on last step
};

struct OscillationReport {
  NodeId x = -1;
  bool applicable = true;
  std::string note;
  std::vector<OscillationStep> steps;
  double theta_fit = 0.0;   // log-log slope of osc against radius
  double theta0 = 0.0;      // log2(1/lambda) at the smallest resolved scale
  bool osc_monotone = true;
  bool vacuous = false;
  bool pass = false;
};

/// Measures sup-inf oscillation of u over interior parts of shrinking balls
/// and compares against the contraction predicted by the level-set scheme:
/// for each scale, the smallest level index nu >= params.nu whose superlevel
/// fraction clears the (4D)^{-p} trigger, the closed-form d, and the lambda
/// bound. Requires sign-constant data on the boundary part of the largest
/// ball; otherwise the report is marked inapplicable.
inline OscillationReport oscillation_decay(const Domain& dom,
                                           const NodeField& u,
                                           const NodeField& f, NodeId x,
                                           std::vector<double> R_grid,
                                           const DeGiorgiParams& params) {
  if (!params.eligible)
    throw UsageError("oscillation_decay: exponents not eligible (p^2-sp+s<=0)");
  if (R_grid.empty()) throw UsageError("oscillation_decay: empty radius grid");
  std::sort(R_grid.begin(), R_grid.end(), std::greater<double>());
  double p = params.p;

  OscillationReport rep;
  rep.x = x;
  bool pos = false, neg = false;
  for (NodeId i : ball(dom, x, R_grid.front()))
    if (dom.is_boundary(i)) {
      if (f[i] > 0.0) pos = true;
      if (f[i] < 0.0) neg = true;
    }
  if (pos && neg) {
    rep.applicable = false;
    rep.note = "inapplicable at x: boundary data changes sign in the ball";
    rep.pass = true;
    return rep;
  }

  double ahat = (params.alpha + 1.0 / p - 1.0) / params.alpha;
  double bhat = (params.beta + 1.0 / p - 1.0) / params.beta;
  for (double R : R_grid) {
    OscillationStep step;
    step.R = R;
    bool seen = false;
    for (NodeId i : ball(dom, x, R)) {
      if (!dom.is_interior(i)) continue;
      if (!seen) {
        step.M = step.m = u[i];
        seen = true;
      } else {
        step.M = std::max(step.M, u[i]);
        step.m = std::min(step.m, u[i]);
      }
    }
    if (!seen) {
      log_debug("oscillation_decay: no interior nodes in ball, scale skipped");
      continue;
    }
    step.osc = step.M - step.m;
    if (step.osc > 0.0) {
      double budget = std::pow(4.0 * params.D, -p);
      for (int nu = params.nu; nu <= 48; ++nu) {
        double knu = step.M - std::pow(2.0, -nu - 1) * step.osc;
        double worst = 0.0;
        bool ok = true;
        for (double r : R_grid) {
          if (r > R) continue;
          double above = 0.0, mass = 0.0;
          for (NodeId i : ball(dom, x, r)) {
            if (!dom.is_interior(i)) continue;
            mass += dom.mu(i);
            if (u[i] > knu) above += dom.mu(i);
          }
          if (!(mass > 0.0)) continue;
          worst = std::max(worst, above / mass);
          if (above / mass > budget) {
            ok = false;
            break;
          }
        }
        if (ok) {
          step.nu = nu;
          step.kappa_nu = knu;
          step.trigger_ratio = worst;
          break;
        }
      }
      if (step.nu >= 0) {
        double gap = step.M - step.kappa_nu;  // = 2^{-nu-1} osc
        double rfac = std::pow(R, 1.0 - 1.0 / p);
        step.d = std::max(
            {gap / 4.0,
             params.C * std::pow(rfac * std::pow(gap, params.alpha + 1.0 / p - 1.0),
                                 1.0 / params.alpha),
             params.C * std::pow(rfac * std::pow(gap, params.beta + 1.0 / p - 1.0),
                                 1.0 / params.beta)});
        double tail = std::pow(2.0, -(step.nu + 1.0));
        step.lambda1 = 1.0 - tail +
                       params.C * std::pow(R, (1.0 - 1.0 / p) / params.alpha) *
                           std::pow(tail, ahat) /
                           std::pow(step.osc, 1.0 - ahat);
        step.lambda2 = 1.0 - tail +
                       params.C * std::pow(R, (1.0 - 1.0 / p) / params.beta) *
                           std::pow(tail, bhat) /
                           std::pow(step.osc, 1.0 - bhat);
        step.lambda = std::max({1.0 - 0.5 * tail, step.lambda1, step.lambda2});
      }
    }
    rep.steps.push_back(step);
  }

  for (std::size_t i = 0; i + 1 < rep.steps.size(); ++i) {
    if (rep.steps[i].osc > 0.0)
      rep.steps[i].contraction = rep.steps[i + 1].osc / rep.steps[i].osc;
    if (rep.steps[i + 1].osc > rep.steps[i].osc * (1.0 + 1e-12))
      rep.osc_monotone = false;
  }

  // log-log slope over the scales that still see oscillation
  double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
  int m = 0;
  for (const OscillationStep& st : rep.steps) {
    if (!(st.osc > 0.0)) continue;
    double lx = std::log(st.R), ly = std::log(st.osc);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m >= 2 && sxx * m - sx * sx > 1e-30)
    rep.theta_fit = (sxy * m - sx * sy) / (sxx * m - sx * sx);
  for (auto it = rep.steps.rbegin(); it != rep.steps.rend(); ++it)
    if (it->nu >= 0 && it->lambda > 0.0 && it->lambda < 1.0) {
      rep.theta0 = std::log2(1.0 / it->lambda);
      break;
    }

  if (rep.steps.empty() || !(rep.steps.front().osc > 0.0)) {
    rep.vacuous = true;
    rep.pass = true;
  } else {
    rep.pass = rep.osc_monotone && rep.theta_fit > 0.0;
  }
  return rep;
}

// ------------------------------------------------------------------
// one-sided minimality on balls with nonnegative data
// ------------------------------------------------------------------

struct SubminimizerTrial {
  int trial = 0;
  double energy_base = 0.0;
  double energy_perturbed = 0.0;
  double deficit = 0.0;  // base - perturbed, positive is a violation
};

struct SubminimizerReport {
  NodeId x = -1;
  double r = 0.0, p = 2.0;
  int trials = 0;
  double max_deficit = 0.0;
  std::vector<SubminimizerTrial> violations;
  bool pass = false;
};

/// Where the data is nonnegative on the boundary part of B(x,r), adding a
/// nonpositive perturbation supported in the ball cannot lower the Dirichlet
/// energy of a minimizer. Samples random nonpositive bump fields under the
/// distance cutoff; refuses when the sign hypothesis fails.
inline SubminimizerReport subminimizer_check(const Domain& dom,
                                             const NodeField& u,
                                             const NodeField& f, NodeId x,
                                             double r, double p, int trials,
                                             std::uint64_t seed) {
  if (!(r > 0.0)) throw UsageError("subminimizer_check: r must be > 0");
  if (trials < 1) throw UsageError("subminimizer_check: need trials >= 1");
  std::vector<NodeId> b = ball(dom, x, r);
  for (NodeId i : b)
    if (dom.is_boundary(i) && f[i] < 0.0)
      throw UsageError(
          "subminimizer_check: data is negative on the boundary part of the "
          "ball; one-sided comparison does not apply");

  std::vector<EdgeId> edges = detail::edges_meeting_interior(dom);
  auto dirichlet = [&](const NodeField& v) {
    double E = 0.0;
    for (EdgeId e : edges) {
      const Edge& ed = dom.graph().edge(e);
      E += dom.edge_weight(e) *
           std::pow(std::abs(v[ed.a] - v[ed.b]) / ed.len, p);
    }
    return E;
  };

  SubminimizerReport rep;
  rep.x = x;
  rep.r = r;
  rep.p = p;
  rep.trials = trials;
  double base = dirichlet(u);
  NodeField eta = cutoff(dom, x, r / 2.0, r);
  double tol = 1e-8 * std::max(1.0, std::abs(base));
  for (int t = 0; t < trials; ++t) {
    NodeField v = u;
    if (t > 0) {  // trial 0 keeps the zero perturbation for the equality case
      auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double amp = std::pow(10.0, -3.0 * unif(rng));
      for (NodeId i = 0; i < dom.node_count(); ++i) {
        if (dom.is_exterior(i)) continue;
        v[i] -= amp * unif(rng) * eta[i];
      }
    }
    double perturbed = dirichlet(v);
    double deficit = base - perturbed;
    rep.max_deficit = std::max(rep.max_deficit, deficit);
    if (deficit > tol) rep.violations.push_back({t, base, perturbed, deficit});
  }
  rep.pass = rep.violations.empty();
  return rep;
}

// ------------------------------------------------------------------
// natural boundary: constancy balls force vanishing data
// ------------------------------------------------------------------

struct NaturalBoundaryEntry {
  NodeId x = -1;
  double r = 0.0;          // maximal radius with oscillation below tol
  double osc = 0.0;
  double f_mass_half = 0.0;  // |f| against perimeter inside B(x, r/2)
  bool breach = false;
};

struct NaturalBoundaryReport {
  double tol = 0.0;
  double tol_f = 0.0;
  std::vector<NaturalBoundaryEntry> entries;
  int violations = 0;
  bool pass = false;
};

/// Wherever the solution is constant (up to tol) on a ball around a boundary
/// node, the data must vanish on the half ball. Oscillation is taken over
/// interior and boundary values together, and a ball only counts once it
/// contains at least one interior node. Violations are theory-breach
/// witnesses.
inline NaturalBoundaryReport natural_boundary_check(const Domain& dom,
                                                    const NodeField& u,
                                                    const NodeField& f,
                                                    double tol = 1e-9) {
  NaturalBoundaryReport rep;
  rep.tol = tol;
  double total = 0.0;
  for (NodeId i : dom.boundary()) total += std::abs(f[i]) * dom.perimeter(i);
  rep.tol_f = 1e-8 * total;

  for (NodeId x : dom.boundary()) {
    std::vector<double> d = dom.graph().distances(x);
    std::vector<NodeId> order;
    for (NodeId i = 0; i < dom.node_count(); ++i)
      if (!dom.is_exterior(i) && d[i] < kInf) order.push_back(i);
    std::sort(order.begin(), order.end(),
              [&](NodeId a, NodeId c) { return d[a] < d[c]; });

    // grow the ball one distance shell at a time; track the largest radius
    // whose ball stays flat and contains interior mass
    double best_r = 0.0, best_osc = 0.0;
    double lo = kInf, hi = -kInf;
    bool has_interior = false;
    std::size_t i = 0;
    while (i < order.size()) {
      double shell = d[order[i]];
      while (i < order.size() && d[order[i]] == shell) {
        lo = std::min(lo, u[order[i]]);
        hi = std::max(hi, u[order[i]]);
        if (dom.is_interior(order[i])) has_interior = true;
        ++i;
      }
      double next = (i < order.size()) ? d[order[i]]
                                       : shell + dom.resolution();
      if (has_interior && hi - lo <= tol) {
        best_r = next;  // open ball of this radius captures the shell
        best_osc = hi - lo;
      }
    }
    if (!(best_r > 0.0)) continue;

    NaturalBoundaryEntry ent;
    ent.x = x;
    ent.r = best_r;
    ent.osc = best_osc;
    for (NodeId i2 : dom.boundary())
      if (d[i2] < best_r / 2.0)
        ent.f_mass_half += std::abs(f[i2]) * dom.perimeter(i2);
    ent.breach = ent.f_mass_half > rep.tol_f;
    if (ent.breach) ++rep.violations;
    rep.entries.push_back(ent);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace nplap
