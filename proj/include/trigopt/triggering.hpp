#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "trigopt/core.hpp"

namespace trigopt {

/// Dense polynomial in the elapsed time tau = t - t_k, coefficients in
/// ascending degree.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }

  double operator()(double tau) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
      acc = acc * tau + *it;
    }
    return acc;
  }

  double derivative_at(double tau) const {
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 1;) {
      acc = acc * tau + static_cast<double>(i) * coeffs_[i];
    }
    return acc;
  }

  Polynomial derivative() const {
    std::vector<double> d;
    for (std::size_t i = 1; i < coeffs_.size(); ++i) {
      d.push_back(static_cast<double>(i) * coeffs_[i]);
    }
    return Polynomial(std::move(d));
  }

  /// Term-by-term antiderivative with value `constant` at tau = 0.
  Polynomial antiderivative(double constant) const {
    std::vector<double> a(coeffs_.size() + 1);
    a[0] = constant;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      a[i + 1] = coeffs_[i] / static_cast<double>(i + 1);
    }
    return Polynomial(std::move(a));
  }

  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

 private:
  std::vector<double> coeffs_;
};

enum class Strategy { second_order, third_order };

/// Coefficients of the triggering polynomial, built from the frozen velocity
/// and the derivative bounds.  Both are strictly positive since they include
/// the constant terms c_xt and c_xtt.
struct TriggerCoefficients {
  double a_k = 0.0;
  double b_k = 0.0;
};

inline TriggerCoefficients trigger_coefficients(const Vector& xdot,
                                                const DerivativeBounds& bounds) {
  const double n1 = xdot.lpNorm<1>();
  const double n2 = xdot.norm();
  return {bounds.c_xx * n2 + bounds.c_xt,
          (bounds.c_xxx * n1 + 2.0 * bounds.c_xxt) * n2 + bounds.c_xtt};
}

/// Upper bound phi_k on the Lyapunov derivative between samples, as a
/// polynomial in tau = t - t_k.  phi_k(0) = -2 alpha v_k by construction and
/// phi_k is strictly increasing and convex on tau >= 0 whenever v_k > 0.
struct TriggerPolynomial {
  Strategy order = Strategy::second_order;
  Polynomial poly;
  double v_k = 0.0;
  double alpha = 0.0;
};

inline TriggerPolynomial build_phi_second_order(const TriggerCoefficients& c,
                                                double v_k, double alpha) {
  const double s = std::sqrt(2.0 * v_k);
  return {Strategy::second_order,
          Polynomial({-2.0 * alpha * v_k, c.a_k * c.a_k + c.b_k * s,
                      0.5 * c.a_k * c.b_k}),
          v_k, alpha};
}

/// Uses only b_k: the strategy assumes known bounds on the third-order
/// derivatives alone.
inline TriggerPolynomial build_phi_third_order(const TriggerCoefficients& c,
                                               double v_k, double alpha) {
  const double s = std::sqrt(2.0 * v_k);
  return {Strategy::third_order,
          Polynomial({-2.0 * alpha * v_k, s * c.b_k + 2.0 * alpha * alpha * v_k,
                      1.5 * alpha * s * c.b_k, 0.5 * c.b_k * c.b_k}),
          v_k, alpha};
}

namespace detail {

/// Root of p(tau) = target for p strictly increasing on [lo, inf), given
/// p(lo) <= target.  Bracketed bisection refined with safeguarded Newton; the
/// returned point always lies strictly above lo when p(lo) < target.
inline double solve_increasing(const Polynomial& p, double target, double lo,
                               double tol_abs) {
  double hi = lo > 0.0 ? 2.0 * lo : 1e-6;
  for (int i = 0; i < 2100 && p(hi) < target; ++i) hi *= 2.0;
  if (p(hi) < target) {
    throw Error("solve_increasing: no upper bracket found");
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = p(x) - target;
    if (std::abs(f) <= tol_abs) return x;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double d = p.derivative_at(x);
    double xn = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Next inter-sample interval in the descent phase: the unique tau* > 0 with
/// phi(tau*) = 0.  Residual satisfies |phi(tau*)| <= tol * (1 + 2 alpha v_k).
inline double phi_root(const TriggerPolynomial& p, double tol = 1e-12) {
  if (!(p.v_k > 0.0)) {
    throw DegenerateTrigger("phi_root: requires v_k > 0 (use the hold phase)");
  }
  const double tol_abs = tol * (1.0 + 2.0 * p.alpha * p.v_k);
  const auto& c = p.poly.coeffs();

  if (p.order == Strategy::second_order) {
    // Closed form, written to avoid cancellation: with q = 2 alpha v_k > 0,
    // tau* = 2q / (c1 + sqrt(c1^2 + 4 c2 q)).
    const double q = -c[0];
    const double c1 = c[1];
    const double c2 = c[2];
    double tau;
    if (c2 > 0.0) {
      tau = 2.0 * q / (c1 + std::sqrt(c1 * c1 + 4.0 * c2 * q));
    } else {
      tau = q / c1;
    }
    if (std::abs(p.poly(tau)) > tol_abs) {
      tau = detail::solve_increasing(p.poly, 0.0, 0.0, tol_abs);
    }
    return tau;
  }
  return detail::solve_increasing(p.poly, 0.0, 0.0, tol_abs);
}

/// Antiderivative psi_k of phi_k shifted so that psi(0) = v_k.
inline Polynomial build_psi(const TriggerPolynomial& p) {
  return p.poly.antiderivative(p.v_k);
}

/// Next inter-sample interval in the hold phase: the smallest tau* > 0 with
/// psi(tau*) = epsilon.
///
/// psi decreases until the zero of phi and increases afterwards, so the
/// bracket starts at that dip; in the limiting case v_k = epsilon the root
/// tau = 0 is thereby discarded and the strictly positive root returned.
/// Residual satisfies |psi(tau*) - epsilon| <= tol * (1 + epsilon).
inline double psi_root(const Polynomial& psi, double epsilon, double v_k,
                       double tol = 1e-12) {
  if (v_k > epsilon || v_k < 0.0) {
    throw InvalidPhase("psi_root: requires 0 <= v_k <= epsilon");
  }
  double lo = 0.0;
  if (v_k > 0.0) {
    // dip = root of psi' (= phi), which is increasing with psi'(0) < 0
    lo = detail::solve_increasing(psi.derivative(), 0.0, 0.0, 0.0);
  }
  return detail::solve_increasing(psi, epsilon, lo, tol * (1.0 + epsilon));
}

}  // namespace trigopt
