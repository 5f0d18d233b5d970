#include "critex/certificate.hpp"
#include "critex/spectral.hpp"

#include <gtest/gtest.h>

using namespace critex;

namespace {

std::vector<double> t_ladder(double L) {
  std::vector<double> Ts;
  for (int i = 5; i >= 0; --i) Ts.push_back(0.5 * L * L * std::pow(2.0, -0.8 * i));
  return Ts;
}

double slope_expected_dissipation(int N, double p) { return 1.0 + 0.5 * N - p / (p - 1.0); }

}  // namespace

TEST(Cutoffs, ShapeAndDerivatives) {
  const Cutoffs c;
  EXPECT_EQ(c.xi(0.5)[0], 1.0);
  EXPECT_EQ(c.xi(2.5)[0], 0.0);
  const double h = 1e-5;
  for (double r : {1.1, 1.4, 1.5, 1.8, 1.95}) {
    const auto v = c.xi(r);
    EXPECT_GT(v[0], 0.0);
    EXPECT_LT(v[0], 1.0);
    EXPECT_NEAR(v[1], (c.xi(r + h)[0] - c.xi(r - h)[0]) / (2 * h), 1e-7);
    EXPECT_NEAR(v[2], (c.xi(r + h)[1] - c.xi(r - h)[1]) / (2 * h), 1e-6);
  }
  for (double s : {0.1, 0.3, 0.7, 0.9}) {
    EXPECT_NEAR(c.eta_prime(s), (c.eta(s + h) - c.eta(s - h)) / (2 * h), 1e-7);
    EXPECT_NEAR(c.log_eta(s), std::log(c.eta(s)), 1e-12);
    EXPECT_NEAR(c.log_abs_eta_prime(s), std::log(std::abs(c.eta_prime(s))), 1e-10);
  }
  EXPECT_EQ(c.eta(0.0), 0.0);
  EXPECT_EQ(c.eta(1.0), 0.0);
}

TEST(YoungConstant, Values) {
  EXPECT_DOUBLE_EQ(conjugate_exponent(2.0), 2.0);
  EXPECT_DOUBLE_EQ(conjugate_exponent(3.0), 1.5);
  // p = 2: (1)^{-1}/2
  EXPECT_DOUBLE_EQ(young_constant(2.0), 0.5);
  EXPECT_NEAR(young_constant(3.0), std::pow(1.5, -0.5) / 1.5, 1e-15);
}

TEST(TimeFactors, DerivativeFactorClosedForm) {
  // ∫ η_T^{-1/(p-1)} |η_T'|^{p'} = (p')^{p'} T^{1-p'} ∫_0^1 |η'|^{p'}
  const Cutoffs c;
  for (double p : {2.0, 3.0, 1.5}) {
    const double pc = conjugate_exponent(p);
    const double J = integrate_adaptive([&](double s) { return std::pow(std::abs(c.eta_prime(s)), pc); }, 0.0, 0.5) +
                     integrate_adaptive([&](double s) { return std::pow(std::abs(c.eta_prime(s)), pc); }, 0.5, 1.0);
    for (double T : {3.0, 70.0}) {
      const double got = time_derivative_factor(T, Params{2, p, -0.5}, c);
      const double want = std::pow(pc, pc) * std::pow(T, 1.0 - pc) * J;
      EXPECT_NEAR(got, want, 1e-9 * want) << "p=" << p << " T=" << T;
    }
  }
}

TEST(TimeFactors, DissipationFactorScalesLinearly) {
  const Cutoffs c;
  const Params prm{2, 2.0, -0.5};
  EXPECT_NEAR(dissipation_time_factor(20.0, prm, c), 4.0 * dissipation_time_factor(5.0, prm, c), 1e-10);
}

TEST(SpaceFactors, AnalyticLaplacianMatchesSpectral) {
  // ∫ |Δμ|^{p'} μ^{-p'/p} with μ = ξ^{2p'}, once from the analytic radial
  // formula and once from a spectral Laplacian of the sampled μ. The weight
  // μ^{-1/(p-1)} amplifies spectral error near the edge of the support, so the
  // spectral side needs the finer grid.
  const Grid g(2, 16.0, 512);
  const Cutoffs c;
  for (double p : {2.0, 3.0}) {
    const double scale = 40.0;
    const double pc = conjugate_exponent(p);
    const double analytic = laplacian_space_factor(g, scale, p, c);
    const Field mu = detail::sample_mu(g, scale, p, c);
    const Field lap = SpectralGrid(g).laplacian(mu);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (mu[i] > 1e-12) acc += std::pow(std::abs(lap[i]), pc) * std::pow(mu[i], -pc / p);
    acc *= g.cell_volume();
    EXPECT_NEAR(acc, analytic, 1e-4 * analytic) << "p=" << p;
  }
}

TEST(SpaceFactors, BoxTooSmall) {
  const Grid g(2, 4.0, 32);
  EXPECT_THROW(laplacian_space_factor(g, 9.0, 2.0, Cutoffs{}), CertificateError);
  EXPECT_THROW(build_phi(9.0, Params{2, 2.0, -0.5}, Cutoffs{}, g), CertificateError);
}

TEST(Forcing, FunctionalSlopeIsSigmaPlusOne) {
  const Grid g(2, 32.0, 256);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  for (double sigma : {-0.5, -0.25}) {
    const Params prm{2, 2.0, sigma};
    std::vector<double> Ts = t_ladder(32.0), F;
    for (double T : Ts) F.push_back(forcing_functional(w, T, prm, Cutoffs{}).value());
    EXPECT_NEAR(fit_loglog(Ts, F).slope, sigma + 1.0, 0.02 * (sigma + 1.0));
  }
}

struct SlopeCase {
  int N;
  double p;
  int n;
};

class DissipationSlopes : public ::testing::TestWithParam<SlopeCase> {};

TEST_P(DissipationSlopes, MatchScaling) {
  const auto [N, p, n] = GetParam();
  const double L = 32.0;
  const Grid g(N, L, n);
  const Params prm{N, p, -0.5};
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  const auto rep = blowup_certificate(w, prm, Cutoffs{}, t_ladder(L));
  const double want = slope_expected_dissipation(N, p);
  const double tol = want == 0.0 ? 5e-3 : 0.05 * std::abs(want);
  EXPECT_NEAR(rep.I1Slope, want, tol);
  EXPECT_NEAR(rep.I2Slope, want, tol);
  EXPECT_NEAR(rep.forcingSlope, 0.5, 0.01);
}

INSTANTIATE_TEST_SUITE_P(Cases, DissipationSlopes,
                         ::testing::Values(SlopeCase{2, 2.0, 256}, SlopeCase{3, 2.0, 64},
                                           SlopeCase{3, 3.0, 64}));

TEST(Verdict, FollowsSignOfScalingExponent) {
  // N/2 - σ - p' changes sign at p = p*(σ); the verdict must flip with it.
  const double L = 32.0;
  const Grid g(2, L, 256);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  for (double p : {1.6, 2.0, 2.5, 3.5, 4.0, 6.0}) {
    const Params prm{2, p, -0.5};
    const auto rep = blowup_certificate(w, prm, Cutoffs{}, t_ladder(L));
    const double expo = 1.0 + 0.5 - conjugate_exponent(p);
    EXPECT_EQ(rep.contradiction, expo < 0.0) << "p=" << p;
    EXPECT_NEAR(rep.boundSlope, rep.predictedBoundSlope, 0.02) << "p=" << p;
  }
}

TEST(Verdict, CriticalPointIsMarginal) {
  const double L = 32.0;
  const Grid g(2, L, 256);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  const auto rep = blowup_certificate(w, Params{2, 3.0, -0.5}, Cutoffs{}, t_ladder(L));
  EXPECT_FALSE(rep.contradiction);
  EXPECT_TRUE(rep.marginal);
}

TEST(Verdict, PositiveSigmaWithFrozenRadius) {
  const double L = 32.0;
  const Grid g(2, L, 256);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  std::vector<double> Ts{10, 100, 1000, 1e4};
  const auto rep = blowup_certificate(w, Params{2, 4.0, 1.0}, Cutoffs{}, Ts, L / 2);
  EXPECT_TRUE(rep.contradiction);
  EXPECT_NEAR(rep.boundSlope, -1.0, 0.3);
  EXPECT_NEAR(rep.forcingSlope, 2.0, 0.04);
}

TEST(Verdict, NeedsTwoTimes) {
  const Grid g(2, 16.0, 64);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  EXPECT_THROW(blowup_certificate(w, Params{2, 2.0, -0.5}, Cutoffs{}, {10.0}), CertificateError);
}

TEST(Fit, LogLogExact) {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.7));
  const auto f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -0.7, 1e-13);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-13);
  EXPECT_THROW(fit_loglog({1, 2}, {1, -1}), CertificateError);
}

TEST(Output, CsvHasSlopeBlock) {
  const Grid g(2, 16.0, 64);
  const ForcingSpec w(heat_kernel(g, 1.0, 1.0));
  const auto rep = blowup_certificate(w, Params{2, 2.0, -0.5}, Cutoffs{}, {20.0, 40.0, 80.0});
  std::ostringstream os;
  write_certificate_csv(os, rep);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("T,forcing,I1,I2,bound,verdict\n", 0), 0u);
  EXPECT_NE(s.find("# verdict="), std::string::npos);
}
