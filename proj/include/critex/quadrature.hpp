#pragma once
/**
 * @file quadrature.hpp
 * @brief Special functions and quadrature rules for integrands carrying the
 *        algebraic weight s^σ.
 */

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace critex {

class QuadratureError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b) through log-Gamma.
inline double beta_function(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw QuadratureError("beta function needs a, b > 0");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/**
 * n-point Gauss–Jacobi rule for ∫_{-1}^{1} f(x) (1-x)^α (1+x)^β dx,
 * computed by Golub–Welsch from the Jacobi three-term recurrence.
 */
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw QuadratureError("Gauss–Jacobi needs at least one node");
  if (!(alpha > -1.0) || !(beta > -1.0)) throw QuadratureError("Jacobi exponents must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag(k) = (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double b2;
    if (k == 1) {
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(b2);
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

/// Rule for ∫_a^b (s-a)^σ g(s) ds, i.e. Gauss–Jacobi with α = 0, β = σ mapped to [a, b].
inline QuadratureRule left_singular_rule(int n, double sigma, double a, double b) {
  QuadratureRule ref = gauss_jacobi(n, 0.0, sigma);
  const double half = 0.5 * (b - a);
  const double scale = std::pow(half, sigma + 1.0);
  for (int i = 0; i < n; ++i) {
    ref.nodes[i] = a + half * (ref.nodes[i] + 1.0);
    ref.weights[i] *= scale;
  }
  return ref;
}

/// Adaptive Gauss–Kronrod (15-point) integration to relative tolerance `tol`.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol = 1e-12, unsigned max_depth = 30) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(std::forward<F>(f), a, b,
                                                                       max_depth, tol, &err);
}

/**
 * ∫_0^t s^σ f(s) ds with the substitution τ = s^{σ+1}, which removes the
 * endpoint singularity for σ in (-1, 0):
 *   ∫_0^{t^{σ+1}} f(τ^{1/(σ+1)}) dτ / (σ+1).
 */
template <class F>
double integrate_power_weight(F&& f, double sigma, double t, double tol = 1e-12) {
  if (!(sigma > -1.0)) throw QuadratureError("power weight needs sigma > -1");
  if (t == 0.0) return 0.0;
  const double sp1 = sigma + 1.0;
  auto g = [&](double tau) { return f(std::pow(tau, 1.0 / sp1)); };
  return integrate_adaptive(g, 0.0, std::pow(t, sp1), tol) / sp1;
}

/**
 * G(σ, x) = ∫_0^1 u^σ e^{-x(1-u)} du for x >= 0.
 *
 * Convergent series e^{-x} Σ x^k / (k!(σ+1+k)) for moderate x; for large x
 * the Watson expansion (1/x) Σ_k Π_{j<k}(j-σ) / x^k, whose truncation error
 * is below e^{-x}.
 */
inline double singular_exponential_moment(double sigma, double x) {
  if (!(sigma > -1.0)) throw QuadratureError("sigma must exceed -1");
  if (!(x >= 0.0)) throw QuadratureError("decay argument must be >= 0");
  constexpr double eps = 1e-17;
  if (x <= 60.0) {
    double term = 1.0;
    double sum = 1.0 / (sigma + 1.0);
    for (int k = 1; k < 2000; ++k) {
      term *= x / k;
      const double add = term / (sigma + 1.0 + k);
      sum += add;
      if (k > x && add < eps * sum) break;
    }
    return std::exp(-x) * sum;
  }
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * ((k - 1) - sigma) / x;
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < eps * std::abs(sum)) break;
  }
  return sum / x;
}

/// ∫_0^t s^σ e^{-λ(t-s)} ds: the Fourier-mode weight of the forcing Duhamel term.
inline double singular_duhamel_weight(double sigma, double lambda, double t) {
  if (t == 0.0) return 0.0;
  return std::pow(t, sigma + 1.0) * singular_exponential_moment(sigma, lambda * t);
}

/// ∫_0^1 e^{-z v} dv and ∫_0^1 v e^{-z v} dv for z >= 0.
inline std::pair<double, double> exponential_moments(double z) {
  if (z < 0.5) {
    double e1 = 0.0;
    double e2 = 0.0;
    double pw = 1.0;  // (-z)^k / k!
    for (int k = 0; k < 24; ++k) {
      e1 += pw / (k + 1);
      e2 += pw / (k + 2);
      pw *= -z / (k + 1);
    }
    return {e1, e2};
  }
  const double em = std::exp(-z);
  return {(1.0 - em) / z, (1.0 - (1.0 + z) * em) / (z * z)};
}

}  // namespace critex
