#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace trigopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of all runtime failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hessian factorization failed or a pivot fell below threshold; the
/// strong-convexity assumption does not hold at the queried point.
class SingularHessian : public Error {
 public:
  using Error::Error;
};

/// Descent-phase trigger requested with a nonpositive Lyapunov value.
class DegenerateTrigger : public Error {
 public:
  using Error::Error;
};

/// Hold-phase trigger requested while the Lyapunov value exceeds the target
/// level; the descent-phase rule applies instead.
class InvalidPhase : public Error {
 public:
  using Error::Error;
};

class SampleBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class OutOfHorizon : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class NonConvexDetected : public Error {
 public:
  using Error::Error;
};

/// Trajectory left the region on which the derivative bounds are certified.
class BoundsRegionExited : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Axis-aligned box; the region on which derivative bounds are certified.
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || (hi - lo).minCoeff() < 0.0) {
      throw std::invalid_argument("Box: lo/hi mismatch");
    }
  }

  bool contains(const Vector& x) const {
    return x.size() == lo.size() && (x.array() >= lo.array()).all() &&
           (x.array() <= hi.array()).all();
  }
};

/// Analytic derivative bundle of a time-varying objective f(x, t).
///
/// All callables must be pure functions of (x, t); the solver and the
/// validation checks evaluate them concurrently.  Consistency of the supplied
/// derivatives is not verified here (see validation::check_oracle_consistency).
struct ObjectiveOracle {
  using EvalFn = std::function<double(const Vector&, double)>;
  using VecFn = std::function<Vector(const Vector&, double)>;
  using MatFn = std::function<Matrix(const Vector&, double)>;

  int dimension = 0;
  EvalFn eval;
  VecFn grad_x;
  MatFn hess_xx;
  VecFn grad_xt;

  ObjectiveOracle(int n, EvalFn f, VecFn g, MatFn h, VecFn gt)
      : dimension(n),
        eval(std::move(f)),
        grad_x(std::move(g)),
        hess_xx(std::move(h)),
        grad_xt(std::move(gt)) {
    if (dimension < 1) {
      throw std::invalid_argument("ObjectiveOracle: dimension must be >= 1");
    }
    if (!eval || !grad_x || !hess_xx || !grad_xt) {
      throw std::invalid_argument("ObjectiveOracle: all callables required");
    }
  }
};

/// Constants of the smoothness assumptions: strong-convexity modulus m and
/// operator-norm bounds on the second- and third-order derivatives.
struct DerivativeBounds {
  double m = 0.0;
  double c_xx = 0.0;
  double c_xt = 0.0;
  double c_xxx = 0.0;
  double c_xxt = 0.0;
  double c_xtt = 0.0;

  void validate() const {
    if (!(m > 0.0 && c_xx > 0.0 && c_xt > 0.0 && c_xxx > 0.0 &&
          c_xxt > 0.0 && c_xtt > 0.0)) {
      throw std::invalid_argument("DerivativeBounds: all fields must be > 0");
    }
    if (m > c_xx) {
      throw std::invalid_argument("DerivativeBounds: m must not exceed c_xx");
    }
  }
};

/// Decision variable paired with its time instant.
struct State {
  Vector x;
  double t = 0.0;

  bool finite() const { return x.allFinite() && std::isfinite(t); }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

namespace detail {
constexpr double kPivotTol = 1e-12;
constexpr double kSolveTol = 1e-10;

/// SPD factorize-and-solve with a pivot guard.  The explicit inverse is never
/// formed.
inline Eigen::LDLT<Matrix> factor_spd(const Matrix& hess) {
  Eigen::LDLT<Matrix> ldlt(hess);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().minCoeff() < kPivotTol) {
    throw SingularHessian("hessian factorization failed (pivot < 1e-12)");
  }
  return ldlt;
}
}  // namespace detail

/// Newton prediction-correction direction h = -H^{-1}(alpha*g + g_t) at s.
///
/// One pass of iterative refinement keeps the linear-solve residual within
/// ||H h + (alpha g + g_t)|| <= 1e-10 * (1 + ||alpha g + g_t||).
inline Vector newton_tracking_direction(const ObjectiveOracle& oracle,
                                        const State& s, double alpha) {
  const Vector g = oracle.grad_x(s.x, s.t);
  const Vector gt = oracle.grad_xt(s.x, s.t);
  const Matrix hess = oracle.hess_xx(s.x, s.t);
  const Vector rhs = alpha * g + gt;

  const auto ldlt = detail::factor_spd(hess);
  Vector h = ldlt.solve(-rhs);
  const Vector residual = hess * h + rhs;
  if (residual.norm() > detail::kSolveTol * (1.0 + rhs.norm())) {
    h -= ldlt.solve(residual);
  }
  return h;
}

/// V(x, t) = 0.5 ||grad_x f(x, t)||^2; zero exactly on the optimal trajectory.
inline double lyapunov(const ObjectiveOracle& oracle, const State& s) {
  return 0.5 * oracle.grad_x(s.x, s.t).squaredNorm();
}

/// Time derivative of V along frozen dynamics xdot:
/// g^T (H xdot + g_t).  With xdot = newton_tracking_direction(...) this
/// equals -2 alpha V at the same state.
inline double lyapunov_rate(const ObjectiveOracle& oracle, const State& s,
                            const Vector& xdot) {
  const Vector g = oracle.grad_x(s.x, s.t);
  return g.dot(oracle.hess_xx(s.x, s.t) * xdot + oracle.grad_xt(s.x, s.t));
}

}  // namespace trigopt
