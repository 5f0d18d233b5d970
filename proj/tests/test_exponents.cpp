#include "critex/exponents.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace critex;

namespace {

Rational R(long a, long b = 1) { return Rational(a, b); }

// Random rational in (lo, hi) with denominator up to 64.
Rational random_between(std::mt19937_64& rng, const Rational& lo, const Rational& hi) {
  std::uniform_int_distribution<long> den(2, 64);
  const long d = den(rng);
  std::uniform_int_distribution<long> num(1, d - 1);
  return lo + (hi - lo) * Rational(num(rng), d);
}

}  // namespace

TEST(Exponents, TableForThreeDimensionalExample) {
  const ExactParams prm{3, R(3), R(-1, 2)};
  const auto ex = derive(prm);
  ASSERT_TRUE(ex.pStar);
  EXPECT_EQ(*ex.pStar, R(2));
  EXPECT_EQ(ex.d, R(3));
  EXPECT_EQ(ex.k, R(3, 2));
  EXPECT_EQ(ex.pF, R(5, 3));
}

TEST(Exponents, CriticalExponentBranches) {
  EXPECT_EQ(*critical_exponent(2, R(-1, 2)), R(3));
  EXPECT_FALSE(critical_exponent(2, R(1)).has_value());
  EXPECT_FALSE(critical_exponent(3, R(1, 10)).has_value());
  // σ = 0 reproduces N/(N-2) in N >= 3 and +∞ in N = 2.
  EXPECT_EQ(*critical_exponent(3, R(0)), R(3));
  EXPECT_EQ(*critical_exponent(4, R(0)), R(2));
  EXPECT_FALSE(critical_exponent(2, R(0)).has_value());
  // Denominator N - 2 - 2σ hits zero.
  EXPECT_FALSE(critical_exponent(1, R(-1, 2)).has_value());
}

TEST(Exponents, PStarAlwaysAboveFujita) {
  for (int N = 2; N <= 4; ++N)
    for (int j = 1; j < 20; ++j) {
      const Rational s = R(-j, 20);
      const auto ps = critical_exponent(N, s);
      if (!ps) continue;
      EXPECT_GT(*ps, R(1) + R(2, N));
    }
}

TEST(Exponents, RegimeClassification) {
  EXPECT_EQ(classify_regime(ExactParams{2, R(2), R(-1, 2)}), Regime::SubcriticalBlowUp);
  EXPECT_EQ(classify_regime(ExactParams{2, R(4), R(-1, 2)}), Regime::SupercriticalGlobal);
  EXPECT_EQ(classify_regime(ExactParams{2, R(3), R(-1, 2)}), Regime::SupercriticalGlobal);
  EXPECT_EQ(classify_regime(ExactParams{2, R(10), R(1)}), Regime::ForcedBlowUp);
  EXPECT_THROW(classify_regime(ExactParams{2, R(2), R(0)}), ParameterError);
}

TEST(Exponents, InvalidParametersRejected) {
  EXPECT_THROW(derive(ExactParams{2, R(1), R(-1, 2)}), ParameterError);
  EXPECT_THROW(derive(ExactParams{2, R(2), R(-1)}), ParameterError);
  EXPECT_THROW(derive(ExactParams{0, R(2), R(-1, 2)}), ParameterError);
}

TEST(Exponents, ScopeFlag) {
  EXPECT_FALSE(derive(ExactParams{1, R(2), R(-1, 2)}).inScope);
  EXPECT_FALSE(derive(ExactParams{2, R(2), R(0)}).inScope);
  EXPECT_TRUE(derive(ExactParams{2, R(2), R(-1, 2)}).inScope);
}

TEST(Exponents, DefaultQForCriterionSix) {
  const auto ex = derive(ExactParams{2, R(4), R(-1, 2)});
  ASSERT_TRUE(ex.q);
  EXPECT_EQ(*ex.q, R(6));
  EXPECT_EQ(*ex.beta, R(1, 6));
}

TEST(Exponents, WindowBoundsReportedOnViolation) {
  const ExactParams prm{2, R(4), R(-1, 2)};
  EXPECT_THROW(verify_scaling_identities(prm, R(20)), ParameterError);
  EXPECT_THROW(verify_scaling_identities(prm, R(3)), ParameterError);
  EXPECT_NO_THROW(verify_scaling_identities(prm, R(6)));
}

// Property: every supercritical (N, p, σ) with σ < 0 gives a negative window quadratic
// value, exact scaling identities, and the ordering q > d > k >= 1.
TEST(ExponentProperties, SupercriticalSamples) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> dim(2, 4);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int N = dim(rng);
    const Rational sigma = random_between(rng, R(-1), R(0));
    const auto ps = critical_exponent(N, sigma);
    ASSERT_TRUE(ps);
    const Rational p = *ps + random_between(rng, R(0), R(4));
    const ExactParams prm{N, p, sigma};
    ASSERT_EQ(classify_regime(prm), Regime::SupercriticalGlobal);
    EXPECT_LT(window_quadratic(prm), 0) << "N=" << N << " p=" << p << " sigma=" << sigma;
    const auto ex = derive(prm);
    ASSERT_TRUE(ex.q) << "empty window at N=" << N << " p=" << p << " sigma=" << sigma;
    const auto id = verify_scaling_identities(prm, *ex.q);
    EXPECT_EQ(id.freeTerm, 0);
    EXPECT_EQ(id.nonlinearTerm, 0);
    EXPECT_EQ(id.forcingTerm, 0);
    EXPECT_TRUE(id.betaPositive);
    EXPECT_TRUE(id.betaPBelowOne);
    EXPECT_TRUE(id.qAboveP);
    EXPECT_TRUE(id.indexOrdering);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(ExponentProperties, KEqualsOneAtCriticalExponent) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(2, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = dim(rng);
    const Rational sigma = random_between(rng, R(-1), R(0));
    const Rational p = *critical_exponent(N, sigma);
    EXPECT_EQ(derive(ExactParams{N, p, sigma}).k, R(1));
  }
}

TEST(ExponentProperties, DoubleAgreesWithExact) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Rational sigma = random_between(rng, R(-1), R(0));
    const Rational p = R(1) + random_between(rng, R(0), R(6));
    const ExactParams e{3, p, sigma};
    const auto a = derive(e);
    const auto b = derive(to_double(e));
    EXPECT_NEAR(to_double(a.d), b.d, 1e-12);
    EXPECT_NEAR(to_double(a.k), b.k, 1e-12 * std::abs(b.k));
    EXPECT_EQ(a.q.has_value(), b.q.has_value());
  }
}

TEST(ParseRational, AcceptedForms) {
  EXPECT_EQ(parse_rational("3/4"), R(3, 4));
  EXPECT_EQ(parse_rational("-1/2"), R(-1, 2));
  EXPECT_EQ(parse_rational("-0.45"), R(-9, 20));
  EXPECT_EQ(parse_rational("1e-3"), R(1, 1000));
  EXPECT_EQ(parse_rational("2.5E1"), R(25));
  EXPECT_EQ(parse_rational("7"), R(7));
}

TEST(ParseRational, Rejected) {
  EXPECT_THROW(parse_rational(""), ParameterError);
  EXPECT_THROW(parse_rational("abc"), ParameterError);
  EXPECT_THROW(parse_rational("1/0"), ParameterError);
  EXPECT_THROW(parse_rational("1.2.3"), ParameterError);
}

TEST(LocalExistence, BudgetSolvesDefiningEquation) {
  const Params prm{2, 2.0, -0.5};
  const auto b = local_existence_time(3.0, prm);
  const double T = b.Tguarantee;
  EXPECT_GT(T, 0.0);
  EXPECT_LT(T, 1.0);
  const double lhs = std::pow(T, 0.5) / 0.5 + 4.0 * 3.0 * T;
  EXPECT_NEAR(lhs, 1.0, 1e-9);
  EXPECT_EQ(local_existence_time(0.0, Params{2, 2.0, 1.0}).Tguarantee, 1.0);
}

TEST(PicardSmallnessTest, Formula) {
  const Params prm{2, 4.0, -0.5};
  const auto s = picard_smallness(prm, 2.0);
  EXPECT_NEAR(s.deltaMax, std::cbrt(0.25), 1e-15);
  EXPECT_NEAR(s.dataBudget, s.deltaMax / 4.0, 1e-15);
  EXPECT_THROW(picard_smallness(prm, 0.0), ParameterError);
}
