#include "critex/quadrature.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <numbers>

using namespace critex;

namespace {

// Double-exponential quadrature handles algebraic endpoint singularities and
// shares no code with the Gauss–Jacobi or series routines under test.
template <class F>
double tanh_sinh(F f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, 1e-14);
}

}  // namespace

TEST(Beta, ExactValues) {
  EXPECT_NEAR(beta_function(1.0, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(beta_function(0.5, 0.5), std::numbers::pi, 1e-12);
  EXPECT_NEAR(beta_function(2.0, 3.0), 1.0 / 12.0, 1e-14);
  EXPECT_THROW(beta_function(0.0, 1.0), QuadratureError);
  EXPECT_THROW(beta_function(1.0, -0.5), QuadratureError);
}

TEST(Beta, QuadratureCrossCheck) {
  const double q = tanh_sinh([](double s, double sc) {
        return std::pow(s < 0.5 ? -sc : s, -0.75) * std::pow(s < 0.5 ? 1.0 - s : sc, -0.5);
      },
                             0.0, 1.0);
  EXPECT_NEAR(beta_function(0.25, 0.5), q, 1e-9);
  EXPECT_NEAR(beta_function(0.25, 0.5), boost::math::beta(0.25, 0.5), 1e-12);
}

TEST(Beta, SymmetryAndRecurrence) {
  for (double a : {0.1, 0.7, 2.5})
    for (double b : {0.3, 1.0, 4.2}) {
      EXPECT_NEAR(beta_function(a, b), beta_function(b, a), 1e-13 * beta_function(a, b));
      // B(a+1, b) = B(a, b) a / (a + b)
      EXPECT_NEAR(beta_function(a + 1, b), beta_function(a, b) * a / (a + b),
                  1e-12 * beta_function(a, b));
    }
}

TEST(GaussJacobi, ExactOnPolynomialTimesWeight) {
  // ∫_{-1}^1 (1-x)^α (1+x)^β x^k dx against tanh-sinh.
  for (double alpha : {0.0, -0.5, 0.3})
    for (double beta : {0.0, -0.75, 1.5}) {
      const int n = 6;
      const auto rule = gauss_jacobi(n, alpha, beta);
      for (int k = 0; k < 2 * n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
        const double ref = tanh_sinh(
            [&](double x, double xc) {
              const double l = x < 0 ? -xc : 1 + x, r = x < 0 ? 1 - x : xc;
              return std::pow(r, alpha) * std::pow(l, beta) * std::pow(x, k);
            },
            -1.0, 1.0);
        EXPECT_NEAR(s, ref, 1e-11 * std::max(1.0, std::abs(ref)))
            << "alpha=" << alpha << " beta=" << beta << " k=" << k;
      }
    }
}

TEST(GaussJacobi, Errors) {
  EXPECT_THROW(gauss_jacobi(0, 0.0, 0.0), QuadratureError);
  EXPECT_THROW(gauss_jacobi(4, -1.0, 0.0), QuadratureError);
}

TEST(GaussJacobi, LeftSingularRule) {
  // ∫_2^5 (s-2)^{-1/2} cos(s) ds
  const auto rule = left_singular_rule(20, -0.5, 2.0, 5.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::cos(rule.nodes[i]);
  const double ref = tanh_sinh([](double x, double xc) { return std::pow(x < 3.5 ? -xc : x - 2.0, -0.5) * std::cos(x); }, 2.0, 5.0);
  EXPECT_NEAR(s, ref, 1e-12);
}

TEST(Adaptive, PowerWeight) {
  const double v = integrate_power_weight([](double s) { return std::exp(-s); }, -0.5, 3.0);
  const double ref = tanh_sinh([](double s) { return std::pow(s, -0.5) * std::exp(-s); }, 0.0, 3.0);
  EXPECT_NEAR(v, ref, 1e-11);
  EXPECT_EQ(integrate_power_weight([](double) { return 1.0; }, 0.5, 0.0), 0.0);
  EXPECT_THROW(integrate_power_weight([](double) { return 1.0; }, -1.0, 1.0), QuadratureError);
}

TEST(Adaptive, CompactBumpIntegral) {
  // ∫_{-1}^{1} exp(1 - 1/(1-x²)) dx against tanh-sinh.
  auto f = [](double x) { return std::abs(x) >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - x * x)); };
  EXPECT_NEAR(integrate_adaptive(f, -1.0, 1.0), tanh_sinh(f, -1.0, 1.0), 1e-12);
}

TEST(SingularMoment, AgainstDirectQuadrature) {
  for (double sigma : {-0.75, -0.5, 0.0, 1.0})
    for (double x : {0.0, 1e-3, 0.7, 12.0, 59.0, 61.0, 500.0, 1e5}) {
      const double ref = tanh_sinh(
          [&](double u) { return std::pow(u, sigma) * std::exp(-x * (1.0 - u)); }, 0.0, 1.0);
      const double got = singular_exponential_moment(sigma, x);
      EXPECT_NEAR(got, ref, 1e-12 * std::max(ref, 1e-300) + 1e-15)
          << "sigma=" << sigma << " x=" << x;
    }
  EXPECT_THROW(singular_exponential_moment(-1.0, 1.0), QuadratureError);
  EXPECT_THROW(singular_exponential_moment(0.5, -1.0), QuadratureError);
}

TEST(SingularMoment, DuhamelWeightLimits) {
  // λ = 0: ∫_0^t s^σ ds = t^{σ+1}/(σ+1)
  EXPECT_NEAR(singular_duhamel_weight(-0.5, 0.0, 4.0), 4.0, 1e-14);
  EXPECT_EQ(singular_duhamel_weight(-0.5, 3.0, 0.0), 0.0);
  // λ large: ≈ t^σ/λ
  EXPECT_NEAR(singular_duhamel_weight(-0.5, 1e6, 4.0) * 1e6, 0.5, 1e-5);
}

TEST(ExponentialMoments, BothBranches) {
  for (double z : {0.0, 1e-8, 0.3, 0.49, 0.51, 3.0, 200.0}) {
    const auto [e1, e2] = exponential_moments(z);
    const double r1 = tanh_sinh([&](double v) { return std::exp(-z * v); }, 0.0, 1.0);
    const double r2 = tanh_sinh([&](double v) { return v * std::exp(-z * v); }, 0.0, 1.0);
    EXPECT_NEAR(e1, r1, 1e-14) << z;
    EXPECT_NEAR(e2, r2, 1e-14) << z;
  }
}
