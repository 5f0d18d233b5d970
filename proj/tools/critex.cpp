// critex: command-line front end.
//
// Exit codes
//   0  success (simulate: reached the horizon)
//   1  --check failed
//   2  usage, parameter or config error
//   3  simulate: blow-up detected
//   4  simulate: stalled; picard: no converged fixed point

#include "critex/certificate.hpp"
#include "critex/config.hpp"
#include "critex/evolve.hpp"
#include "critex/exponents.hpp"
#include "critex/picard.hpp"
#include "critex/sweep.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace critex;

namespace {

enum Exit : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kBlowUp = 3, kStalled = 4 };

struct Globals {
  std::string out = "critex-out";
  std::string seedProfile;
  bool check = false;
  int workers = 1;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

std::string rat(const Rational& r) {
  return r.str() + " (" + format_double(to_double(r)) + ")";
}

// Shortest decimal that round-trips, so 0.2 reads back as the rational 1/5.
Rational shortest_rational(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return parse_rational(std::string_view(buf, res.ptr - buf));
}

/// Replaces the shape of non-trivial profiles by the seed snapshot so the
/// manifest names the file and re-runs stay self-contained.
void apply_seed(RunConfig& cfg, const Globals& g) {
  if (g.seedProfile.empty()) return;
  const std::string path = fs::absolute(g.seedProfile).string();
  for (DataSpec* d : {&cfg.u0, &cfg.w}) {
    if (d->kind == "zero" || d->kind == "constant") continue;
    d->kind = "file";
    d->file = path;
  }
}

void write_manifest_file(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                         const Field* u0, const Field* w) {
  RunManifest m;
  m.command = command;
  m.timestamp = utc_timestamp();
  if (u0) m.u0Hash = hex64(fingerprint(*u0));
  if (w) m.wHash = hex64(fingerprint(*w));
  m.config = cfg;
  auto os = open_out(dir / "manifest.ini");
  write_manifest(os, m);
}

// ---------------------------------------------------------------------------

struct ExponentArgs {
  int N = 0;
  std::string p;
  std::string sigma;
  std::string q;
};

int cmd_exponents(const ExponentArgs& a, const Globals& g) {
  const ExactParams prm{a.N, parse_rational(a.p), parse_rational(a.sigma)};
  const auto ex = derive(prm);
  bool ok = true;
  std::cout << "N          " << prm.N << '\n';
  std::cout << "p          " << rat(prm.p) << '\n';
  std::cout << "sigma      " << rat(prm.sigma) << '\n';
  std::cout << "pF         " << rat(ex.pF) << '\n';
  std::cout << "pStar      " << (ex.pStar ? rat(*ex.pStar) : std::string("inf")) << '\n';
  std::cout << "d          " << rat(ex.d) << '\n';
  std::cout << "k          " << rat(ex.k) << '\n';
  if (ex.inverseQWindow.empty())
    std::cout << "1/q window empty\n";
  else
    std::cout << "1/q window (" << rat(ex.inverseQWindow.lo) << ", " << rat(ex.inverseQWindow.hi)
              << ")\n";
  std::optional<Rational> q = ex.q;
  if (!a.q.empty()) q = parse_rational(a.q);
  if (q) {
    std::cout << "q          " << rat(*q) << '\n';
    std::cout << "beta       " << rat(weighted_decay_rate(prm, *q)) << '\n';
  }
  if (ex.inScope)
    std::cout << "regime     " << to_string(classify_regime(prm)) << '\n';
  else
    std::cout << "regime     outside the supported range\n";
  const Rational quad = window_quadratic(prm);
  std::cout << "quadratic  " << rat(quad) << '\n';

  if (!g.check) return kOk;
  if (!q) {
    std::cout << "check      FAIL: no admissible q\n";
    return kCheckFailed;
  }
  const auto id = verify_scaling_identities(prm, *q);
  auto report = [&](const char* name, bool pass) {
    std::cout << "check      " << name << ' ' << (pass ? "ok" : "FAIL") << '\n';
    ok = ok && pass;
  };
  report("free_identity", id.freeTerm == 0);
  report("nonlinear_identity", id.nonlinearTerm == 0);
  report("forcing_identity", id.forcingTerm == 0);
  report("beta_positive", id.betaPositive);
  report("beta_p_below_one", id.betaPBelowOne);
  report("q_above_p", id.qAboveP);
  report("index_ordering", id.indexOrdering);
  if (ex.inScope && classify_regime(prm) == Regime::SupercriticalGlobal)
    report("window_quadratic_negative", quad < 0);
  return ok ? kOk : kCheckFailed;
}

int cmd_simulate(const std::string& path, const Globals& g) {
  RunConfig cfg = load_config(path);
  apply_seed(cfg, g);
  const Grid grid = cfg.grid.grid();
  const Field u0 = build_data(grid, cfg.u0);
  const ForcingSpec w(build_data(grid, cfg.w));
  const SolveConfig sc = cfg.solve_config();
  sc.validate();

  const fs::path dir = out_dir(g);
  write_manifest_file(dir, "simulate", cfg, &u0, &w.profile());
  const Trajectory tr = run(u0, w, sc);
  {
    auto os = open_out(dir / "norms.csv");
    write_norms_csv(os, tr);
  }
  {
    auto os = open_out(dir / "summary.csv");
    os << "verdict,t_end,q,beta,accepted_steps,rejected_steps,boundary_flag\n";
    os << to_string(tr.verdict) << ',' << format_double(tr.tEnd) << ','
       << format_double(tr.indices.q) << ',' << format_double(tr.indices.beta) << ','
       << tr.acceptedSteps << ',' << tr.rejectedSteps << ','
       << (tr.boundaryFlag ? "true" : "false") << '\n';
  }
  const fs::path snaps = dir / "snapshots";
  fs::create_directories(snaps);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%04zu.field", i);
    auto os = open_out(snaps / name);
    write_snapshot(os, tr.snapshots[i].field);
  }
  {
    auto os = open_out(snaps / "times.csv");
    os << "index,t\n";
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i)
      os << i << ',' << format_double(tr.snapshots[i].t) << '\n';
  }
  std::cout << to_string(tr.verdict) << " at t=" << format_double(tr.tEnd);
  if (!tr.note.empty()) std::cout << " (" << tr.note << ')';
  std::cout << '\n';
  if (tr.boundaryFlag) std::cout << "warning: mass reached the boundary shell\n";
  switch (tr.verdict) {
    case Verdict::BlewUp: return kBlowUp;
    case Verdict::Stalled: return kStalled;
    case Verdict::ReachedHorizon: return kOk;
  }
  return kOk;
}

int cmd_picard(const std::string& path, const Globals& g) {
  RunConfig cfg = load_config(path);
  apply_seed(cfg, g);
  if (!cfg.picard) cfg.picard = PicardSpec{};
  const PicardSpec& pk = *cfg.picard;
  const Params prm = cfg.params();
  const auto ex = derive(prm);
  const double q = pk.q ? *pk.q : (ex.q ? *ex.q : 0.0);
  if (!ex.q && !pk.q) throw ParameterError("no admissible q for these parameters");

  const Grid grid = cfg.grid.grid();
  const Field u0 = build_data(grid, cfg.u0);
  const ForcingSpec w(build_data(grid, cfg.w));
  const fs::path dir = out_dir(g);
  write_manifest_file(dir, "picard", cfg, &u0, &w.profile());

  const Propagator prop(grid);
  const auto ladder = make_ladder(LadderSpec{pk.Tcap, pk.rungs, pk.minFraction});
  const PicardConstants pc = measure_picard_constants(prop, prm, q, {u0, w.profile()}, ladder);
  const PicardSmallness sm = picard_smallness(prm, pc.Cstar);
  const double delta = pk.delta ? *pk.delta : 0.5 * sm.deltaMax;
  const double dataSize = lr_norm(u0, ex.d) + lr_norm(w.profile(), ex.k);

  const PicardOperator op(prop, u0, w, prm, q, ladder);
  FixedPointOptions opt;
  opt.maxIter = pk.maxIter;
  opt.tol = pk.tol;
  opt.dataBudget = sm.dataBudget;
  const auto res = iterate_to_fixed_point(op, delta, opt, dataSize);
  const auto& dg = res.diagnostics;
  const EstimateAudit au = audit_estimates(op, res.solution, u0, w, pc);

  {
    auto os = open_out(dir / "ladder.csv");
    write_ladder_csv(os, res.solution);
  }
  {
    auto os = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(os, dg);
  }
  {
    auto os = open_out(dir / "audit.csv");
    write_audit_csv(os, au);
  }
  {
    auto os = open_out(dir / "constants.csv");
    auto kv = [&](const char* k, const std::string& v) { os << k << ',' << v << '\n'; };
    os << "key,value\n";
    kv("q", format_double(q));
    kv("beta", format_double(res.solution.beta));
    kv("c1_free", format_double(pc.c1Free));
    kv("c1_nonlinear", format_double(pc.c1Nonlinear));
    kv("c1_forcing", format_double(pc.c1Forcing));
    kv("c1hat", format_double(pc.c1hat));
    kv("beta_nonlinear", format_double(pc.betaNonlinear));
    kv("beta_forcing", format_double(pc.betaForcing));
    kv("Cstar", format_double(pc.Cstar));
    kv("delta_max", format_double(sm.deltaMax));
    kv("data_budget", format_double(sm.dataBudget));
    kv("data_size", format_double(dataSize));
    kv("delta", format_double(delta));
    kv("iterates", std::to_string(dg.iterates));
    kv("converged", dg.converged ? "true" : "false");
    kv("non_contractive", dg.nonContractive ? "true" : "false");
    kv("all_in_ball", dg.allInBall ? "true" : "false");
    kv("outside_guarantee", dg.outsideGuarantee ? "true" : "false");
    kv("ratio_estimate", format_double(dg.ratioEstimate));
    kv("residual", format_double(dg.residual));
    kv("sup_weighted", format_double(res.solution.sup_weighted()));
    kv("min_audit_margin", format_double(au.min_margin()));
  }

  std::cout << (dg.converged ? "converged" : "not converged") << " after " << dg.iterates
            << " iterates, ratio " << format_double(dg.ratioEstimate) << ", residual "
            << format_double(dg.residual) << '\n';
  if (dg.outsideGuarantee) std::cout << "warning: data exceed the smallness budget\n";
  if (!dg.converged) return kStalled;
  if (g.check) {
    const bool ok = au.min_margin() >= 0.0 && dg.residual <= 1e-8 && dg.ratioEstimate < 1.0 &&
                    !dg.outsideGuarantee;
    std::cout << "check " << (ok ? "ok" : "FAIL") << '\n';
    if (!ok) return kCheckFailed;
  }
  return kOk;
}

std::vector<double> default_certificate_ladder(double L) {
  std::vector<double> Ts;
  for (int i = 5; i >= 0; --i) Ts.push_back(0.5 * L * L * std::pow(2.0, -0.8 * i));
  return Ts;
}

int cmd_certificate(const std::string& path, const Globals& g) {
  RunConfig cfg = load_config(path);
  apply_seed(cfg, g);
  if (!cfg.certificate) cfg.certificate = CertificateSpec{};
  auto& ck = *cfg.certificate;
  const Params prm = cfg.params();
  if (ck.Tvalues.empty()) ck.Tvalues = default_certificate_ladder(cfg.grid.L);
  if (!ck.R && prm.sigma > 0.0) ck.R = 0.5 * cfg.grid.L;

  const Grid grid = cfg.grid.grid();
  const ForcingSpec w(build_data(grid, cfg.w));
  const fs::path dir = out_dir(g);
  write_manifest_file(dir, "certificate", cfg, nullptr, &w.profile());

  Cutoffs cut;
  cut.xiSharpness = ck.xiSharpness;
  cut.etaSharpness = ck.etaSharpness;
  const auto rep = blowup_certificate(w, prm, cut, ck.Tvalues, ck.R);
  {
    auto os = open_out(dir / "certificate.csv");
    write_certificate_csv(os, rep);
  }
  const char* verdict = rep.contradiction ? "CONTRADICTION" : (rep.marginal ? "MARGINAL" : "NONE");
  std::cout << "verdict " << verdict << ", bound slope " << format_double(rep.boundSlope)
            << " (predicted " << format_double(rep.predictedBoundSlope) << ")\n";
  if (g.check && in_scope(prm)) {
    const bool expect = classify_regime(prm) != Regime::SupercriticalGlobal;
    const bool ok = expect == rep.contradiction;
    std::cout << "check " << (ok ? "ok" : "FAIL") << '\n';
    if (!ok) return kCheckFailed;
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const Globals& g) {
  RunConfig cfg = load_config(path);
  apply_seed(cfg, g);
  if (!cfg.sweep) throw ConfigParseError("sweep needs a [sweep] section", 0);
  const SweepSpec& sw = *cfg.sweep;
  if (g.workers < 1) throw ConfigError("--workers must be >= 1");

  SweepPlan plan;
  plan.N = cfg.grid.N;
  plan.L = cfg.grid.L;
  plan.n = cfg.grid.n;
  plan.pValues = sw.pValues;
  plan.sigmaValues = sw.sigmaValues;
  plan.dataScales = sw.scales;
  plan.cfg = cfg.solve_config();
  plan.Tend = sw.Tend;
  plan.horizonMax = sw.horizonMax;
  plan.escalation = sw.escalation;
  const Grid grid = plan.grid();
  plan.u0Shape = build_data(grid, cfg.u0);
  plan.wShape = build_data(grid, cfg.w);
  plan.validate();

  const fs::path dir = out_dir(g);
  write_manifest_file(dir, "sweep", cfg, &*plan.u0Shape, &*plan.wShape);
  const auto points = execute(plan, g.workers);

  std::vector<BoundaryEstimate> bs;
  for (double s : sw.sigmaValues) bs.push_back(estimate_boundary(points, s, plan.N));
  std::vector<Rational> probe;
  for (double s : sw.probeSigmas.empty() ? sw.sigmaValues : sw.probeSigmas)
    if (s != 0.0) probe.push_back(shortest_rational(s));
  const auto rep = discontinuity_probe(plan.N, probe, points);
  {
    auto os = open_out(dir / "phase.csv");
    write_phase_csv(os, points);
  }
  {
    auto os = open_out(dir / "boundary.csv");
    write_boundary_csv(os, bs);
  }
  {
    auto os = open_out(dir / "probe.csv");
    write_probe_csv(os, rep);
  }
  {
    auto os = open_out(dir / "phase.svg");
    write_phase_svg(os, points, plan.N);
  }
  for (const auto& b : bs) {
    std::cout << "sigma " << format_double(b.sigma) << ": pHat "
              << (b.pHat ? format_double(*b.pHat) : std::string("-")) << ", pStar "
              << (b.pStarTheory ? format_double(*b.pStarTheory) : std::string("inf"));
    if (!b.note.empty()) std::cout << " (" << b.note << ')';
    std::cout << '\n';
  }
  if (g.check) {
    bool ok = true;
    std::optional<double> prev;
    for (const auto& b : bs) {
      if (!b.pHat) continue;
      if (b.pStarTheory && *b.pHat < *b.pStarTheory - 0.5) ok = false;
      if (prev && *b.pHat < *prev) ok = false;
      prev = b.pHat;
    }
    std::cout << "check " << (ok ? "ok" : "FAIL") << '\n';
    if (!ok) return kCheckFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forced semilinear heat equation: exponents, simulation, Picard audit, "
               "blow-up certificate and phase sweeps"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed-profile", g.seedProfile, "Snapshot file replacing the u0/w shape")
      ->check(CLI::ExistingFile);
  app.add_flag("--check", g.check, "Verify the command's invariants; exit 1 on failure");

  ExponentArgs ea;
  auto* exps = app.add_subcommand("exponents", "Tabulate derived exponents");
  exps->add_option("-N", ea.N, "Space dimension")->required();
  exps->add_option("-p", ea.p, "Nonlinearity exponent (decimal or a/b)")->required();
  exps->add_option("--sigma", ea.sigma, "Time exponent of the forcing")->required();
  exps->add_option("--q", ea.q, "Lebesgue index (defaults to the window midpoint)");

  std::string config;
  auto add_config_cmd = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("config", config, "Config or manifest file")->required();
    c->fallthrough();
    return c;
  };
  exps->fallthrough();
  auto* sim = add_config_cmd("simulate", "Integrate one trajectory");
  auto* pic = add_config_cmd("picard", "Fixed-point iteration and estimate audit");
  auto* cert = add_config_cmd("certificate", "Test-function blow-up certificate");
  auto* swp = add_config_cmd("sweep", "Phase-diagram sweep over (p, sigma)");
  swp->add_option("--workers", g.workers, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*exps) return cmd_exponents(ea, g);
    if (*sim) return cmd_simulate(config, g);
    if (*pic) return cmd_picard(config, g);
    if (*cert) return cmd_certificate(config, g);
    if (*swp) return cmd_sweep(config, g);
  } catch (const ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
