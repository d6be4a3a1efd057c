#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "trigopt/core.hpp"
#include "trigopt/solver.hpp"
#include "trigopt/triggering.hpp"

namespace trigopt {

/// Verdict of one dense-grid soundness check.  worst_violation is the maximum
/// over the grid of (lhs - rhs) after subtracting each inequality's tolerance,
/// so pass == (worst_violation <= tolerance) with tolerance echoed below.
struct ValidationReport {
  std::string check;
  double worst_violation = -std::numeric_limits<double>::infinity();
  std::size_t worst_segment = 0;
  double worst_t = 0.0;
  bool pass = true;
  int grid_per_segment = 0;
  double tolerance = 0.0;
};

namespace detail {

/// Grid points linspace(0, tau, g); nested under g -> 2g - 1 refinement so
/// worst violations are monotone in density.
inline double grid_point(double tau, int j, int g) {
  if (g <= 1) return 0.0;
  return tau * static_cast<double>(j) / static_cast<double>(g - 1);
}

struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t segment = 0;
  double t = 0.0;

  void update(double v, std::size_t seg, double at) {
    if (v > value) {
      value = v;
      segment = seg;
      t = at;
    }
  }
};

}  // namespace detail

/// The guarantee the sampling rule rests on: along the frozen dynamics of
/// every segment, the Lyapunov derivative never exceeds the triggering
/// polynomial phi_k reconstructed from the stored sample data.
inline ValidationReport check_trigger_soundness(const Trajectory& traj,
                                                const ObjectiveOracle& oracle,
                                                const DerivativeBounds& bounds,
                                                int grid_per_segment) {
  ValidationReport rep;
  rep.check = "trigger_soundness";
  rep.grid_per_segment = grid_per_segment;
  rep.tolerance = 1e-8;

  detail::Worst worst;
  const double alpha = traj.config.alpha;
  for (const auto& r : traj.records) {
    const TriggerCoefficients c = trigger_coefficients(r.xdot, bounds);
    const TriggerPolynomial phi =
        traj.config.strategy == Strategy::second_order
            ? build_phi_second_order(c, r.v, alpha)
            : build_phi_third_order(c, r.v, alpha);
    for (int j = 0; j < grid_per_segment; ++j) {
      const double tau = detail::grid_point(r.tau, j, grid_per_segment);
      const State s{r.x + r.xdot * tau, r.t + tau};
      const double vdot = lyapunov_rate(oracle, s, r.xdot);
      worst.update(vdot - phi.poly(tau), r.index, s.t);
    }
  }
  rep.worst_violation = worst.value;
  rep.worst_segment = worst.segment;
  rep.worst_t = worst.t;
  rep.pass = worst.value <= rep.tolerance;
  return rep;
}

/// The chained gradient bounds that the triggering polynomials are built
/// from, on a dense grid per segment: ||gdot|| <= a_k (tol 1e-8),
/// ||gddot|| <= b_k via a centered second difference of the analytic gdot
/// (tol 1e-6), and ||g|| <= sqrt(2 V(t_k)) + a_k (t - t_k) (tol 1e-8).
/// Violations are reported net of their per-family tolerance, so
/// pass == worst <= 0.
inline ValidationReport check_gradient_bound_chain(const Trajectory& traj,
                                              const ObjectiveOracle& oracle,
                                              const DerivativeBounds& bounds,
                                              int grid_per_segment) {
  ValidationReport rep;
  rep.check = "gradient_bound_chain";
  rep.grid_per_segment = grid_per_segment;
  rep.tolerance = 0.0;

  constexpr double kTolFirst = 1e-8;
  constexpr double kTolSecond = 1e-6;
  constexpr double kFdStep = 1e-5;

  const auto gdot = [&](const SampleRecord& r, double tau) {
    const Vector x = r.x + r.xdot * tau;
    const double t = r.t + tau;
    return (oracle.hess_xx(x, t) * r.xdot + oracle.grad_xt(x, t)).eval();
  };

  detail::Worst worst;
  for (const auto& r : traj.records) {
    const TriggerCoefficients c = trigger_coefficients(r.xdot, bounds);
    const double g0 = std::sqrt(2.0 * r.v);
    for (int j = 0; j < grid_per_segment; ++j) {
      const double tau = detail::grid_point(r.tau, j, grid_per_segment);
      const double at = r.t + tau;
      worst.update(gdot(r, tau).norm() - c.a_k - kTolFirst, r.index, at);
      const Vector gdd =
          (gdot(r, tau + kFdStep) - gdot(r, tau - kFdStep)) / (2.0 * kFdStep);
      worst.update(gdd.norm() - c.b_k - kTolSecond, r.index, at);
      const Vector g = oracle.grad_x(r.x + r.xdot * tau, at);
      worst.update(g.norm() - (g0 + c.a_k * tau) - kTolFirst, r.index, at);
    }
  }
  rep.worst_violation = worst.value;
  rep.worst_segment = worst.segment;
  rep.worst_t = worst.t;
  rep.pass = worst.value <= rep.tolerance;
  return rep;
}

/// Profile of V along the trajectory: monotone decrease (1e-10 ripple) while
/// the run is in the descent phase and V <= epsilon + 1e-8 throughout the
/// hold phase.  Violations are net of those tolerances; pass == worst <= 0.
inline ValidationReport check_lyapunov_profile(const Trajectory& traj,
                                               const ObjectiveOracle& oracle,
                                               int grid_per_segment) {
  ValidationReport rep;
  rep.check = "lyapunov_profile";
  rep.grid_per_segment = grid_per_segment;
  rep.tolerance = 0.0;

  constexpr double kRipple = 1e-10;
  constexpr double kHoldTol = 1e-8;
  const double epsilon = traj.config.epsilon;

  detail::Worst worst;
  // monotonicity is tracked per maximal run of descent segments
  double prev_descent_v = std::numeric_limits<double>::infinity();
  for (const auto& r : traj.records) {
    if (r.phase == Phase::hold) {
      prev_descent_v = std::numeric_limits<double>::infinity();
    }
    for (int j = 0; j < grid_per_segment; ++j) {
      const double tau = detail::grid_point(r.tau, j, grid_per_segment);
      const State s{r.x + r.xdot * tau, r.t + tau};
      const double v = lyapunov(oracle, s);
      if (r.phase == Phase::descent) {
        worst.update(v - prev_descent_v - kRipple, r.index, s.t);
        prev_descent_v = v;
      } else {
        worst.update(v - epsilon - kHoldTol, r.index, s.t);
      }
    }
  }
  rep.worst_violation = worst.value;
  rep.worst_segment = worst.segment;
  rep.worst_t = worst.t;
  rep.pass = worst.value <= rep.tolerance;
  return rep;
}

/// Finite-difference audit of the supplied derivatives at `samples` points
/// drawn uniformly from box x [t_lo, t_hi] (deterministic in `seed`).
/// grad_x is checked against eval, hess_xx and grad_xt against grad_x, all to
/// relative error 1e-5 (normalized by 1 + the analytic magnitude); Hessian
/// symmetry to 1e-10.  Violations are net of those tolerances; pass == worst
/// <= 0.
inline ValidationReport check_oracle_consistency(const ObjectiveOracle& oracle,
                                                 const Box& box, double t_lo,
                                                 double t_hi, int samples,
                                                 std::uint64_t seed = 20231207) {
  ValidationReport rep;
  rep.check = "oracle_consistency";
  rep.grid_per_segment = samples;
  rep.tolerance = 0.0;

  constexpr double kFdStep = 1e-6;
  constexpr double kRelTol = 1e-5;
  constexpr double kSymTol = 1e-10;
  const int n = oracle.dimension;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  detail::Worst worst;
  Vector x(n);
  for (int sidx = 0; sidx < samples; ++sidx) {
    for (int i = 0; i < n; ++i) {
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    }
    const double t = t_lo + (t_hi - t_lo) * unit(rng);
    const auto seg = static_cast<std::size_t>(sidx);

    const Vector g = oracle.grad_x(x, t);
    const Matrix hess = oracle.hess_xx(x, t);
    const Vector gt = oracle.grad_xt(x, t);

    const double asym = (hess - hess.transpose()).cwiseAbs().maxCoeff();
    worst.update(asym - kSymTol * (1.0 + hess.cwiseAbs().maxCoeff()), seg, t);

    Vector fd_g(n);
    Matrix fd_h(n, n);
    for (int i = 0; i < n; ++i) {
      Vector xp = x, xm = x;
      xp[i] += kFdStep;
      xm[i] -= kFdStep;
      fd_g[i] = (oracle.eval(xp, t) - oracle.eval(xm, t)) / (2.0 * kFdStep);
      fd_h.col(i) =
          (oracle.grad_x(xp, t) - oracle.grad_x(xm, t)) / (2.0 * kFdStep);
    }
    const Vector fd_gt = (oracle.grad_x(x, t + kFdStep) -
                          oracle.grad_x(x, t - kFdStep)) /
                         (2.0 * kFdStep);

    worst.update((fd_g - g).norm() / (1.0 + g.norm()) - kRelTol, seg, t);
    worst.update((fd_h - hess).norm() / (1.0 + hess.norm()) - kRelTol, seg, t);
    worst.update((fd_gt - gt).norm() / (1.0 + gt.norm()) - kRelTol, seg, t);
  }
  rep.worst_violation = worst.value;
  rep.worst_segment = worst.segment;
  rep.worst_t = worst.t;
  rep.pass = rep.worst_violation <= rep.tolerance;
  return rep;
}

}  // namespace trigopt
