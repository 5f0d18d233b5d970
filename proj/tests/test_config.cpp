#include "critex/config.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace critex;

namespace {

RunConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rnd = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  RunConfig c;
  c.p = std::to_string(2 + static_cast<int>(rng() % 5)) + "/" + std::to_string(1 + rng() % 3);
  c.sigma = "-0." + std::to_string(1 + rng() % 9);
  c.grid.N = 1 + static_cast<int>(rng() % 3);
  c.grid.L = rnd(1.0, 100.0);
  c.grid.n = 8 << (rng() % 5);
  c.u0.kind = (rng() % 2) ? "gaussian" : "compact";
  c.u0.amplitude = rnd(-1.0, 1.0) * 1e-3;
  c.u0.scale = rnd(0.1, 5.0);
  c.u0.center = {rnd(-1, 1), rnd(-1, 1), rnd(-1, 1)};
  c.w.kind = "zero";
  c.solver.dt0 = rnd(1e-6, 1e-3);
  c.solver.Tend = rnd(1.0, 1e4);
  c.solver.tolStep = rnd(1e-9, 1e-6);
  c.solver.snapshotEvery = static_cast<int>(rng() % 10);
  if (rng() % 2) c.solver.q = rnd(2.0, 9.0);
  c.solver.nonlinearity = rng() % 2;
  if (rng() % 2) {
    PicardSpec pk;
    pk.Tcap = rnd(1, 20);
    pk.rungs = 8 + static_cast<int>(rng() % 60);
    if (rng() % 2) pk.delta = rnd(0.01, 1.0);
    c.picard = pk;
  }
  if (rng() % 2) {
    CertificateSpec ck;
    for (int i = 0; i < 4; ++i) ck.Tvalues.push_back(rnd(1, 1000));
    if (rng() % 2) ck.R = rnd(1, 10);
    c.certificate = ck;
  }
  if (rng() % 2) {
    SweepSpec sw;
    sw.pValues = {rnd(1.1, 2), rnd(2, 8)};
    sw.sigmaValues = {rnd(-0.9, -0.1)};
    sw.scales = {rnd(0.01, 1.0), 1.0 / 3.0};
    sw.probeSigmas = {-0.5, 0.25};
    c.sweep = sw;
  }
  return c;
}

const char* kMinimal = R"([params]
N = 2
p = 4
sigma = -1/2

[grid]
L_length = 16
n_points = 32

[data]
u0_kind = gaussian
u0_amplitude = 0.01
w_kind = zero

[solver]
Tend_time = 5
)";

}  // namespace

// Property: parse → serialise → parse is the identity on random records.
TEST(ConfigProperties, RoundTrip) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const RunConfig c = random_config(rng);
    const std::string text = serialize_config(c);
    const RunConfig back = parse_config_text(text);
    EXPECT_TRUE(back == c) << text;
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(Config, MinimalParsesWithDefaults) {
  const RunConfig c = parse_config_text(kMinimal);
  EXPECT_EQ(c.grid.N, 2);
  EXPECT_EQ(c.p, "4");
  EXPECT_EQ(c.params().sigma, -0.5);
  EXPECT_EQ(c.u0.amplitude, 0.01);
  EXPECT_EQ(c.w.kind, "zero");
  EXPECT_EQ(c.solver.Tend, 5.0);
  EXPECT_EQ(c.solver.dt0, SolverSpec{}.dt0);
  EXPECT_FALSE(c.picard);
  EXPECT_EQ(c.solve_config().params.p, 4.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("[params]\nN = 2\np = x\n"), 3);
  EXPECT_EQ(line_of("[grid]\n\nL_length = 1.5.2\n"), 3);
  EXPECT_EQ(line_of("[grid]\nbogus_key = 1\n"), 2);
  EXPECT_EQ(line_of("[grid\n"), 1);
  EXPECT_EQ(line_of("N = 2\n"), 1);
  EXPECT_EQ(line_of("[params]\nN = 2\nN = 3\n"), 3);
  EXPECT_EQ(line_of("[params]\njust text\n"), 2);
  EXPECT_EQ(line_of("[data]\n# comment\nu0_kind = square\n"), 3);
  EXPECT_EQ(line_of("[solver]\nnonlinearity = maybe\n"), 2);
}

TEST(Config, CommentsAndUnknownSectionsIgnored) {
  const std::string text = std::string("[manifest]\ncommand = simulate\n\n") + kMinimal +
                           "; trailing comment\n";
  EXPECT_NO_THROW(parse_config_text(text));
}

TEST(Data, BuildKinds) {
  const Grid g(2, 8.0, 16);
  DataSpec d;
  d.kind = "constant";
  d.amplitude = 2.0;
  EXPECT_EQ(max_abs(build_data(g, d)), 2.0);
  d.kind = "zero";
  EXPECT_EQ(max_abs(build_data(g, d)), 0.0);
  d.kind = "gaussian";
  d.amplitude = 0.5;
  EXPECT_NEAR(max_abs(build_data(g, d)), 0.5, 1e-12);
  const Field seed = Field::constant(g, 3.0);
  EXPECT_EQ(max_abs(build_data(g, d, seed)), 1.5);
  d.kind = "file";
  d.file = "/nonexistent/snapshot.field";
  EXPECT_THROW(build_data(g, d), ConfigError);
}

TEST(Fingerprint, StableAndSensitive) {
  const Grid g(2, 8.0, 16);
  const Field a = heat_kernel(g, 1.0);
  EXPECT_EQ(fingerprint(a), fingerprint(heat_kernel(g, 1.0)));
  std::vector<double> v(a.values());
  v[7] = std::nextafter(v[7], 1.0);
  EXPECT_NE(fingerprint(a), fingerprint(Field(g, v)));
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
  // FNV-1a of the empty input is the offset basis.
  EXPECT_EQ(fingerprint(Field()), 0xcbf29ce484222325ULL);
}

TEST(Manifest, ReadsBackAsConfig) {
  RunManifest m;
  m.command = "simulate";
  m.timestamp = "2000-01-01T00:00:00Z";
  m.u0Hash = "00";
  m.config = parse_config_text(kMinimal);
  std::ostringstream os;
  write_manifest(os, m);
  EXPECT_NE(os.str().find("tool_version = "), std::string::npos);
  EXPECT_TRUE(parse_config_text(os.str()) == m.config);
}

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_list({1.0, 2.5}), "1 2.5");
}
