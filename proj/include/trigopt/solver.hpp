#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "trigopt/core.hpp"
#include "trigopt/triggering.hpp"

namespace trigopt {

struct SolverConfig {
  double alpha = 5.0;
  double epsilon = 1e-2;
  double t0 = 0.0;
  double tf = 7.0;
  Vector x0;
  Strategy strategy = Strategy::third_order;
  double root_tol = 1e-12;
  std::size_t max_samples = 1'000'000;
  /// If set, every sample is required to stay inside this box (the region on
  /// which the derivative bounds are certified).
  std::optional<Box> domain_box;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(root_tol > 0.0)) throw std::invalid_argument("root_tol must be > 0");
    if (!(t0 >= 0.0 && t0 < tf)) {
      throw std::invalid_argument("horizon must satisfy 0 <= t0 < tf");
    }
    if (max_samples < 1) throw std::invalid_argument("max_samples must be >= 1");
    if (x0.size() < 1 || !x0.allFinite()) {
      throw std::invalid_argument("x0 must be nonempty and finite");
    }
  }
};

enum class Phase { descent, hold };

/// One optimizer update: the state, direction and Lyapunov value at t_k, the
/// phase of the step, and the applied step size tau_k = t_{k+1} - t_k.
struct SampleRecord {
  std::size_t index = 0;
  double t = 0.0;
  Vector x;
  Vector xdot;
  double v = 0.0;
  Phase phase = Phase::descent;
  double tau = 0.0;
};

struct StepStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

/// Piecewise-affine trajectory: x(t) = x_k + xdot_k (t - t_k) on each
/// inter-sample segment.  Immutable after a run completes.
struct Trajectory {
  std::vector<SampleRecord> records;
  int dimension = 0;
  SolverConfig config;
  /// True when the last step was truncated to land exactly on tf.
  bool final_step_clamped = false;

  double final_time() const {
    const auto& r = records.back();
    return r.t + r.tau;
  }

  Vector final_x() const {
    const auto& r = records.back();
    return r.x + r.xdot * r.tau;
  }

  /// Number of trigger-chosen steps: the final step is excluded when it was
  /// clamped to the horizon, since its size is a horizon artifact.
  std::size_t trigger_step_count() const {
    return records.size() - (final_step_clamped ? 1 : 0);
  }

  Vector interpolate(double t) const;
};

/// Mean and population standard deviation over the trigger-chosen steps.
inline StepStats trigger_step_stats(const Trajectory& traj) {
  const std::size_t n = traj.trigger_step_count();
  if (n == 0) return {};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += traj.records[i].tau;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = traj.records[i].tau - mean;
    ss += d * d;
  }
  return {n, mean, std::sqrt(ss / static_cast<double>(n))};
}

inline Vector Trajectory::interpolate(double t) const {
  const double t_end = final_time();
  const double slack = 1e-9 * (1.0 + std::abs(config.tf));
  if (t < config.t0 - slack || t > std::max(config.tf, t_end) + slack) {
    throw OutOfHorizon("interpolate: t outside [t0, tf]");
  }
  // unique k with t_k <= t < t_{k+1}; t at or past the last knot lands on the
  // final segment
  auto it = std::upper_bound(
      records.begin(), records.end(), t,
      [](double value, const SampleRecord& r) { return value < r.t; });
  const auto& r = (it == records.begin()) ? records.front() : *std::prev(it);
  const double local = std::clamp(t - r.t, 0.0, r.tau);
  return r.x + r.xdot * local;
}

namespace detail {

inline void check_run_inputs(const ObjectiveOracle& oracle,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (oracle.dimension != cfg.x0.size()) {
    throw std::invalid_argument("x0 dimension does not match the oracle");
  }
}

inline void check_state(const SolverConfig& cfg, const Vector& x) {
  if (!x.allFinite()) {
    throw Error("solver state has non-finite entries");
  }
  if (cfg.domain_box && !cfg.domain_box->contains(x)) {
    throw BoundsRegionExited(
        "trajectory left the certified derivative-bounds region");
  }
}

}  // namespace detail

/// Two-phase self-triggered optimizer.
///
/// At each sample: compute the Newton tracking direction, then pick the next
/// sample time from the zero of phi_k while ||grad|| >= sqrt(2 epsilon)
/// (descent phase) or from psi_k crossing epsilon otherwise (hold phase).
/// Ties route to the descent phase.  The state advances affinely and the
/// final step is clamped to land exactly on tf.
inline Trajectory run_self_triggered(const ObjectiveOracle& oracle,
                                     const DerivativeBounds& bounds,
                                     const SolverConfig& cfg) {
  detail::check_run_inputs(oracle, cfg);
  bounds.validate();

  Trajectory traj;
  traj.dimension = oracle.dimension;
  traj.config = cfg;

  Vector x = cfg.x0;
  double t = cfg.t0;
  std::size_t k = 0;

  while (t < cfg.tf) {
    if (k >= cfg.max_samples) {
      throw SampleBudgetExceeded("max_samples reached before tf");
    }
    detail::check_state(cfg, x);

    const State s{x, t};
    const Vector g = oracle.grad_x(x, t);
    const double v = 0.5 * g.squaredNorm();
    const Vector xdot = newton_tracking_direction(oracle, s, cfg.alpha);
    const TriggerCoefficients coeff = trigger_coefficients(xdot, bounds);
    // ||g|| >= sqrt(2 epsilon) evaluated as v >= epsilon so the hold branch
    // always meets the psi_root precondition v <= epsilon
    const Phase phase = v >= cfg.epsilon ? Phase::descent : Phase::hold;

    const TriggerPolynomial phi =
        cfg.strategy == Strategy::second_order
            ? build_phi_second_order(coeff, v, cfg.alpha)
            : build_phi_third_order(coeff, v, cfg.alpha);
    double tau = phase == Phase::descent
                     ? phi_root(phi, cfg.root_tol)
                     : psi_root(build_psi(phi), cfg.epsilon, v, cfg.root_tol);

    double t_next = t + tau;
    if (t_next > cfg.tf) {
      tau = cfg.tf - t;
      t_next = cfg.tf;
      traj.final_step_clamped = true;
    }
    traj.records.push_back({k, t, x, xdot, v, phase, tau});
    x += xdot * tau;
    t = t_next;
    ++k;
  }
  detail::check_state(cfg, x);
  return traj;
}

/// Runs the held Newton dynamics on an explicit schedule of step sizes.
/// Phase labels follow the same ||grad|| >= sqrt(2 epsilon) rule.
inline Trajectory run_scheduled(const ObjectiveOracle& oracle,
                                const SolverConfig& cfg,
                                const std::vector<double>& taus,
                                bool final_clamped) {
  detail::check_run_inputs(oracle, cfg);
  if (taus.empty()) throw std::invalid_argument("empty schedule");

  Trajectory traj;
  traj.dimension = oracle.dimension;
  traj.config = cfg;
  traj.final_step_clamped = final_clamped;

  Vector x = cfg.x0;
  double t = cfg.t0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double tau = taus[k];
    if (!(tau > 0.0)) throw std::invalid_argument("schedule steps must be > 0");
    detail::check_state(cfg, x);
    const State s{x, t};
    const Vector g = oracle.grad_x(x, t);
    const double v = 0.5 * g.squaredNorm();
    const Vector xdot = newton_tracking_direction(oracle, s, cfg.alpha);
    const Phase phase = v >= cfg.epsilon ? Phase::descent : Phase::hold;
    traj.records.push_back({k, t, x, xdot, v, phase, tau});
    x += xdot * tau;
    t = t + tau;
  }
  detail::check_state(cfg, x);
  return traj;
}

/// Periodic Euler baseline: samples at t_k = t0 + k h; the number of steps is
/// ceil((tf - t0)/h) and the last one is truncated to land on tf when the
/// horizon is not a multiple of h.
inline Trajectory run_periodic(const ObjectiveOracle& oracle,
                               const SolverConfig& cfg, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("period h must be > 0");
  const double span = cfg.tf - cfg.t0;
  const auto steps =
      static_cast<std::size_t>(std::ceil(span / h - 1e-9));
  if (steps > cfg.max_samples) {
    throw SampleBudgetExceeded("periodic schedule exceeds max_samples");
  }
  std::vector<double> taus(steps, h);
  // accumulate exactly like the run loop so the final step lands on tf
  double t_last = cfg.t0;
  for (std::size_t k = 0; k + 1 < steps; ++k) t_last += h;
  taus.back() = cfg.tf - t_last;
  const bool clamped = taus.back() < h;
  return run_scheduled(oracle, cfg, taus, clamped);
}

/// Global Euler discretization-error bound (c tau / L) ((1 + tau L)^k - 1)
/// for a vector field with Lipschitz constant L; diagnostic only.
inline double euler_error_bound(double c, double L, double tau,
                                std::size_t k) {
  return (c * tau / L) * (std::pow(1.0 + tau * L, static_cast<double>(k)) - 1.0);
}

}  // namespace trigopt
