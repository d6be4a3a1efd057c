#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trigopt/core.hpp"
#include "trigopt/parallel.hpp"

namespace trigopt {

/// A benchmark objective together with its certified derivative bounds, the
/// region they are certified on, and (when known) the optimal trajectory.
struct ProblemSpec {
  ObjectiveOracle oracle;
  DerivativeBounds bounds;
  std::string name;
  /// x*(t); empty when no reference is available.
  std::function<Vector(double)> reference_optimum;
  Box domain_box;
  Vector default_x0;
};

/// Unique minimizer of x -> f(x, t) at frozen time t: full Newton iteration
/// from x_seed until ||grad|| <= 1e-12.
inline Vector reference_optimum(const ObjectiveOracle& oracle, double t,
                                Vector x_seed) {
  Vector x = std::move(x_seed);
  for (int it = 0; it < 100; ++it) {
    const Vector g = oracle.grad_x(x, t);
    if (g.norm() <= 1e-12) return x;
    x -= detail::factor_spd(oracle.hess_xx(x, t)).solve(g);
  }
  if (oracle.grad_x(x, t).norm() <= 1e-12) return x;
  throw NoConvergence(
      "reference_optimum: no convergence in 100 Newton iterations");
}

namespace detail {

/// Values far below this are indistinguishable from finite-difference noise;
/// flooring keeps every bound strictly positive so b_k > 0 and the trigger
/// polynomials retain a positive root.
constexpr double kBoundFloor = 1e-9;

inline double spectral_norm_sym(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline double min_eigenvalue_sym(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace detail

/// Empirical verification of the boundedness assumptions: per-constant maxima
/// of the derivative norms over a regular grid on box x [t_lo, t_hi].  Third
/// derivatives come from central finite differences of the analytic second
/// derivatives; m is the smallest Hessian eigenvalue seen.
inline DerivativeBounds estimate_bounds(const ObjectiveOracle& oracle,
                                        const Box& box, double t_lo,
                                        double t_hi, int grid,
                                        double fd_step = 1e-5) {
  if (grid < 2) throw std::invalid_argument("estimate_bounds: grid must be >= 2");
  if (!(t_lo < t_hi)) throw std::invalid_argument("estimate_bounds: bad t interval");
  const int n = oracle.dimension;
  if (box.lo.size() != n) {
    throw std::invalid_argument("estimate_bounds: box dimension mismatch");
  }

  std::size_t total = static_cast<std::size_t>(grid);  // t axis
  for (int i = 0; i < n; ++i) {
    if (total > 50'000'000 / static_cast<std::size_t>(grid)) {
      throw std::invalid_argument("estimate_bounds: grid too large");
    }
    total *= static_cast<std::size_t>(grid);
  }

  struct Extrema {
    double m = std::numeric_limits<double>::infinity();
    double c_xx = 0.0, c_xt = 0.0, c_xxx = 0.0, c_xxt = 0.0, c_xtt = 0.0;
  };

  const auto point_at = [&](std::size_t flat, Vector& x, double& t) {
    const auto g = static_cast<std::size_t>(grid);
    t = t_lo + (t_hi - t_lo) * static_cast<double>(flat % g) /
                   static_cast<double>(grid - 1);
    flat /= g;
    for (int i = 0; i < n; ++i) {
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) *
                             static_cast<double>(flat % g) /
                             static_cast<double>(grid - 1);
      flat /= g;
    }
  };

  const std::size_t workers = worker_count(total);
  std::vector<Extrema> partial(workers);
  const std::size_t chunk = (total + workers - 1) / workers;
  parallel_for(workers, [&](std::size_t w) {
    Extrema& e = partial[w];
    Vector x(n);
    double t = 0.0;
    const double h = fd_step;
    for (std::size_t flat = w * chunk;
         flat < std::min(total, (w + 1) * chunk); ++flat) {
      point_at(flat, x, t);
      const Matrix hess = oracle.hess_xx(x, t);
      e.m = std::min(e.m, detail::min_eigenvalue_sym(hess));
      e.c_xx = std::max(e.c_xx, detail::spectral_norm_sym(hess));
      e.c_xt = std::max(e.c_xt, oracle.grad_xt(x, t).norm());
      for (int i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        e.c_xxx = std::max(
            e.c_xxx, detail::spectral_norm_sym(
                         (oracle.hess_xx(xp, t) - oracle.hess_xx(xm, t)) /
                         (2.0 * h)));
      }
      e.c_xxt = std::max(
          e.c_xxt, detail::spectral_norm_sym(
                       (oracle.hess_xx(x, t + h) - oracle.hess_xx(x, t - h)) /
                       (2.0 * h)));
      e.c_xtt = std::max(
          e.c_xtt,
          ((oracle.grad_xt(x, t + h) - oracle.grad_xt(x, t - h)) / (2.0 * h))
              .norm());
    }
  });

  Extrema acc;
  for (const auto& e : partial) {
    acc.m = std::min(acc.m, e.m);
    acc.c_xx = std::max(acc.c_xx, e.c_xx);
    acc.c_xt = std::max(acc.c_xt, e.c_xt);
    acc.c_xxx = std::max(acc.c_xxx, e.c_xxx);
    acc.c_xxt = std::max(acc.c_xxt, e.c_xxt);
    acc.c_xtt = std::max(acc.c_xtt, e.c_xtt);
  }
  if (acc.m <= 0.0) {
    throw NonConvexDetected("estimate_bounds: nonpositive Hessian eigenvalue");
  }
  const auto floor = [](double v) { return std::max(v, detail::kBoundFloor); };
  DerivativeBounds out{acc.m,          floor(acc.c_xx), floor(acc.c_xt),
                       floor(acc.c_xxx), floor(acc.c_xxt), floor(acc.c_xtt)};
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Built-in problems
// ---------------------------------------------------------------------------

/// The 1-D experiment objective
///   f(x, t) = 1/2 (x - cos(w t))^2 + (k/2) cos^2(2 w t) exp(mu x^2)
/// with w = pi/5, k = 2, mu = 1/2 and analytic first, second and mixed
/// derivatives.  The third-derivative bounds are the published constants for
/// this problem; m, c_xx and c_xt are grid maxima over the certified box and
/// one full 10 s period of the time dependence.
inline ProblemSpec paper_problem_1d() {
  static const ProblemSpec cached = [] {
    const double w = std::acos(-1.0) / 5.0;  // pi / 5
    const double k = 2.0;
    const double mu = 0.5;

    auto eval = [=](const Vector& x, double t) {
      const double d = x[0] - std::cos(w * t);
      const double c2 = std::cos(2.0 * w * t);
      return 0.5 * d * d + 0.5 * k * c2 * c2 * std::exp(mu * x[0] * x[0]);
    };
    auto grad = [=](const Vector& x, double t) {
      const double c2 = std::cos(2.0 * w * t);
      Vector g(1);
      g[0] = (x[0] - std::cos(w * t)) +
             k * mu * x[0] * c2 * c2 * std::exp(mu * x[0] * x[0]);
      return g;
    };
    auto hess = [=](const Vector& x, double t) {
      const double c2 = std::cos(2.0 * w * t);
      Matrix h(1, 1);
      h(0, 0) = 1.0 + k * mu * c2 * c2 * std::exp(mu * x[0] * x[0]) *
                          (1.0 + 2.0 * mu * x[0] * x[0]);
      return h;
    };
    auto grad_xt = [=](const Vector& x, double t) {
      Vector g(1);
      g[0] = w * std::sin(w * t) -
             2.0 * w * k * mu * x[0] * std::sin(4.0 * w * t) *
                 std::exp(mu * x[0] * x[0]);
      return g;
    };

    ObjectiveOracle oracle(1, eval, grad, hess, grad_xt);
    Box box{Vector::Constant(1, -1.2), Vector::Constant(1, 1.2)};

    DerivativeBounds bounds = estimate_bounds(oracle, box, 0.0, 10.0, 241);
    bounds.c_xxx = 3.7212;
    bounds.c_xxt = 2.6924;
    bounds.c_xtt = 6.9369;
    bounds.validate();

    auto ref = [oracle, w](double t) {
      return reference_optimum(oracle, t, Vector::Constant(1, std::cos(w * t)));
    };

    return ProblemSpec{std::move(oracle), bounds,           "paper1d",
                       std::move(ref),    std::move(box),   Vector::Constant(1, 1.0)};
  }();
  return cached;
}

/// Closed-form testbed f(x, t) = 1/2 ||x - r(t)||^2 with r_i(t) = cos(w t + i).
/// The optimum is r(t) exactly and all bounds are analytic; the identically
/// zero third derivatives are floored so the triggers stay well posed.
inline ProblemSpec quadratic_tracking(int n, double omega) {
  if (n < 1) throw std::invalid_argument("quadratic_tracking: n must be >= 1");
  if (!(omega > 0.0)) {
    throw std::invalid_argument("quadratic_tracking: omega must be > 0");
  }

  auto r = [n, omega](double t) {
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = std::cos(omega * t + i);
    return out;
  };
  auto eval = [r](const Vector& x, double t) {
    return 0.5 * (x - r(t)).squaredNorm();
  };
  auto grad = [r](const Vector& x, double t) -> Vector { return x - r(t); };
  auto hess = [n](const Vector&, double) -> Matrix {
    return Matrix::Identity(n, n);
  };
  auto grad_xt = [n, omega](const Vector&, double t) {
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = omega * std::sin(omega * t + i);
    return g;
  };

  const double root_n = std::sqrt(static_cast<double>(n));
  DerivativeBounds bounds{1.0,
                          1.0,
                          omega * root_n,
                          detail::kBoundFloor,
                          detail::kBoundFloor,
                          std::max(omega * omega * root_n, detail::kBoundFloor)};
  bounds.validate();

  char omega_buf[32];
  const auto res =
      std::to_chars(omega_buf, omega_buf + sizeof(omega_buf), omega);
  std::string name = "quad:" + std::to_string(n) + "," +
                     std::string(omega_buf, res.ptr);

  return ProblemSpec{ObjectiveOracle(n, eval, grad, hess, grad_xt),
                     bounds,
                     std::move(name),
                     r,
                     Box{Vector::Constant(n, -2.0), Vector::Constant(n, 2.0)},
                     Vector::Zero(n)};
}

/// Registry lookup: "paper1d" or "quad:<n>,<omega>".
inline std::optional<ProblemSpec> make_problem(std::string_view id) {
  if (id == "paper1d") return paper_problem_1d();
  constexpr std::string_view prefix = "quad:";
  if (id.substr(0, prefix.size()) == prefix) {
    const std::string_view args = id.substr(prefix.size());
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) return std::nullopt;
    int n = 0;
    double omega = 0.0;
    const auto r1 =
        std::from_chars(args.data(), args.data() + comma, n);
    const auto r2 = std::from_chars(args.data() + comma + 1,
                                    args.data() + args.size(), omega);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
        r1.ptr != args.data() + comma ||
        r2.ptr != args.data() + args.size() || n < 1 || !(omega > 0.0)) {
      return std::nullopt;
    }
    return quadratic_tracking(n, omega);
  }
  return std::nullopt;
}

}  // namespace trigopt
