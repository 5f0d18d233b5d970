#include "critex/sweep.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace critex;

namespace {

Trajectory synthetic(Verdict v, std::vector<std::pair<double, double>> tw) {
  Trajectory tr;
  tr.verdict = v;
  for (auto [t, w] : tw) {
    NormRecord r;
    r.t = t;
    r.weighted = w;
    tr.norms.push_back(r);
  }
  tr.tEnd = tw.back().first;
  return tr;
}

PhasePoint point(double p, double sigma, PhaseVerdict v, double scale = 0.1) {
  PhasePoint pt;
  pt.p = p;
  pt.sigma = sigma;
  pt.scale = scale;
  pt.verdict = v;
  return pt;
}

SweepPlan tiny_plan() {
  SweepPlan plan;
  plan.N = 2;
  plan.L = 16.0;
  plan.n = 32;
  plan.pValues = {1.5, 5.0};
  plan.sigmaValues = {-0.5, -0.25};
  plan.dataScales = {0.05};
  plan.cfg.dt0 = 1e-3;
  plan.Tend = 20.0;
  plan.horizonMax = 20.0;
  return plan;
}

}  // namespace

TEST(Tail, NonIncreasingRule) {
  EXPECT_TRUE(weighted_tail_nonincreasing(
      synthetic(Verdict::ReachedHorizon, {{1, 5}, {20, 3}, {50, 2}, {100, 2}})));
  EXPECT_FALSE(weighted_tail_nonincreasing(
      synthetic(Verdict::ReachedHorizon, {{1, 5}, {20, 3}, {50, 2}, {100, 2.1}})));
  // Increase before Tend/10 is ignored.
  EXPECT_TRUE(weighted_tail_nonincreasing(
      synthetic(Verdict::ReachedHorizon, {{1, 1}, {5, 4}, {20, 3}, {100, 2}})));
}

TEST(Classify, Verdicts) {
  auto b = classify_trajectory(synthetic(Verdict::BlewUp, {{0, 1}, {3, 1e9}}));
  EXPECT_EQ(b.verdict, PhaseVerdict::BlowUp);
  EXPECT_EQ(*b.tstar, 3.0);
  auto gl = classify_trajectory(synthetic(Verdict::ReachedHorizon, {{1, 2}, {50, 1}, {100, 0.9}}));
  EXPECT_EQ(gl.verdict, PhaseVerdict::GlobalCandidate);
  auto up = classify_trajectory(synthetic(Verdict::ReachedHorizon, {{1, 2}, {50, 1}, {100, 1.5}}));
  EXPECT_EQ(up.verdict, PhaseVerdict::Undetermined);
  EXPECT_FALSE(up.reason.empty());
  auto st = classify_trajectory(synthetic(Verdict::Stalled, {{1, 2}}));
  EXPECT_EQ(st.verdict, PhaseVerdict::Undetermined);
}

TEST(Boundary, BracketedEstimate) {
  std::vector<PhasePoint> pts{point(2, -0.5, PhaseVerdict::BlowUp), point(3, -0.5, PhaseVerdict::BlowUp),
                              point(4, -0.5, PhaseVerdict::GlobalCandidate),
                              point(5, -0.5, PhaseVerdict::GlobalCandidate),
                              point(2, -0.5, PhaseVerdict::BlowUp, 1.0),
                              point(3, -0.5, PhaseVerdict::GlobalCandidate, 1.0)};
  const auto b = estimate_boundary(pts, -0.5, 2);
  EXPECT_EQ(b.scale, 0.1);
  EXPECT_EQ(*b.pHat, 4.0);
  EXPECT_EQ(*b.pBelow, 3.0);
  EXPECT_EQ(*b.pStarTheory, 3.0);
  EXPECT_TRUE(b.bracketed);
  EXPECT_TRUE(b.monotone);
}

TEST(Boundary, UnbracketedAndNonMonotone) {
  std::vector<PhasePoint> all_blow{point(2, 0.5, PhaseVerdict::BlowUp), point(8, 0.5, PhaseVerdict::BlowUp)};
  const auto a = estimate_boundary(all_blow, 0.5, 2);
  EXPECT_FALSE(a.pHat);
  EXPECT_EQ(a.note, "Unbracketed: pStar = inf");
  std::vector<PhasePoint> mixed{point(2, -0.5, PhaseVerdict::BlowUp),
                                point(3, -0.5, PhaseVerdict::GlobalCandidate),
                                point(4, -0.5, PhaseVerdict::BlowUp)};
  const auto m = estimate_boundary(mixed, -0.5, 2);
  EXPECT_FALSE(m.monotone);
}

TEST(Probe, FormulaSideExact) {
  std::vector<Rational> ladder{Rational(-1, 2), Rational(-1, 10), Rational(-1, 100), Rational(-1, 1000),
                               Rational(1, 1000), Rational(1, 2)};
  const auto rep = discontinuity_probe(3, ladder);
  ASSERT_TRUE(rep.leftLimit);
  EXPECT_EQ(*rep.leftLimit, Rational(3));
  EXPECT_TRUE(rep.leftSideConverges);
  EXPECT_TRUE(rep.rightSideInfinite);
  EXPECT_NEAR(*rep.rows[3].pStarTheory, 3.0, 0.01);
  EXPECT_FALSE(rep.rows[4].pStarTheory);
  const auto two = discontinuity_probe(2, ladder);
  EXPECT_FALSE(two.leftLimit);
  EXPECT_TRUE(two.leftSideConverges);
  EXPECT_THROW(discontinuity_probe(3, {Rational(0)}), ConfigError);
}

TEST(Plan, Validation) {
  SweepPlan p = tiny_plan();
  p.pValues.clear();
  EXPECT_THROW(p.validate(), ConfigError);
  p = tiny_plan();
  p.sigmaValues = {-1.0};
  EXPECT_THROW(p.validate(), ConfigError);
  p = tiny_plan();
  p.escalation = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = tiny_plan();
  p.u0Shape = Field::zero(Grid(2, 16.0, 64));
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Execute, IndependentOfWorkerCount) {
  const SweepPlan plan = tiny_plan();
  const auto a = execute(plan, 1);
  const auto b = execute(plan, 3);
  std::ostringstream sa, sb;
  write_phase_csv(sa, a);
  write_phase_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  ASSERT_EQ(a.size(), 4u);
  // Job order is (sigma, scale, p).
  EXPECT_EQ(a[0].sigma, -0.5);
  EXPECT_EQ(a[0].p, 1.5);
  EXPECT_EQ(a[1].p, 5.0);
  EXPECT_EQ(a[2].sigma, -0.25);
  EXPECT_EQ(a[1].theoryRegime, Regime::SupercriticalGlobal);
}

TEST(Output, SvgAndBoundaryCsv) {
  std::vector<PhasePoint> pts{point(2, -0.5, PhaseVerdict::BlowUp), point(4, -0.5, PhaseVerdict::GlobalCandidate),
                              point(2, -0.25, PhaseVerdict::BlowUp), point(4, -0.25, PhaseVerdict::Undetermined)};
  std::ostringstream svg;
  write_phase_svg(svg, pts, 2);
  EXPECT_NE(svg.str().find("<svg"), std::string::npos);
  EXPECT_NE(svg.str().find("<path"), std::string::npos);
  std::ostringstream csv;
  write_boundary_csv(csv, {estimate_boundary(pts, -0.5, 2)});
  EXPECT_NE(csv.str().find("-0.5,0.10000000000000001,4,2,3,true,true,"), std::string::npos);
}
