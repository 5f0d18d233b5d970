#pragma once
/**
 * @file sweep.hpp
 * @brief Batteries of runs over a (p, σ, data scale) lattice: classification,
 *        empirical boundary p̂(σ), and the σ → 0 probe.
 *
 * A point is GlobalCandidate when the run reaches its horizon and
 * t^β‖u(t)‖_q does not increase over the last decade of time; BlowUp when the
 * run blows up; Undetermined otherwise. Undetermined horizon outcomes are
 * retried with a ten times longer horizon up to horizonMax.
 */

#include "critex/evolve.hpp"
#include "critex/exponents.hpp"
#include "critex/field.hpp"
#include "critex/semigroup.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace critex {

enum class PhaseVerdict { BlowUp, GlobalCandidate, Undetermined };

inline std::string_view to_string(PhaseVerdict v) {
  switch (v) {
    case PhaseVerdict::BlowUp: return "BlowUp";
    case PhaseVerdict::GlobalCandidate: return "GlobalCandidate";
    case PhaseVerdict::Undetermined: return "Undetermined";
  }
  return "?";
}

struct SweepPlan {
  int N = 2;
  double L = 64.0;
  int n = 128;
  std::vector<double> pValues;
  std::vector<double> sigmaValues;
  std::vector<double> dataScales{1.0};
  /// Solver settings; params and Tend are overwritten per job.
  SolveConfig cfg;
  double Tend = 100.0;
  double horizonMax = 1e4;
  double escalation = 10.0;
  /// Unit-scale shapes of u0 and w. Defaults: exp(-|x|²/4) for both.
  std::optional<Field> u0Shape;
  std::optional<Field> wShape;

  Grid grid() const { return Grid(N, L, n); }

  void validate() const {
    if (pValues.empty() || sigmaValues.empty() || dataScales.empty())
      throw ConfigError("sweep lattice is empty");
    for (double s : sigmaValues)
      if (!(s > -1.0)) throw ConfigError("all sigma values must exceed -1");
    for (double p : pValues)
      if (!(p > 1.0)) throw ConfigError("all p values must exceed 1");
    if (!(Tend > 0.0) || !(horizonMax >= Tend) || !(escalation > 1.0))
      throw ConfigError("need 0 < Tend <= horizonMax and escalation > 1");
    const Grid g = grid();
    if (u0Shape && !(u0Shape->grid() == g)) throw ConfigError("u0 shape is on a different grid");
    if (wShape && !(wShape->grid() == g)) throw ConfigError("w shape is on a different grid");
  }
};

inline Field default_shape(const Grid& g) {
  return make_bump(g, BumpKind::Gaussian, Point{0.0, 0.0, 0.0}, 1.0, 1.0).field;
}

struct PhasePoint {
  double p = 0.0;
  double sigma = 0.0;
  double scale = 0.0;
  PhaseVerdict verdict = PhaseVerdict::Undetermined;
  /// Blow-up time for BlowUp.
  std::optional<double> tstar;
  /// Horizon of the run that produced the verdict.
  double horizon = 0.0;
  std::optional<Regime> theoryRegime;
  bool boundaryFlag = false;
  std::string reason;
};

/// True when the weighted series does not increase on [Tend/10, Tend].
inline bool weighted_tail_nonincreasing(const Trajectory& tr, double slack = 1e-6) {
  const double from = tr.tEnd / 10.0;
  double prev = -1.0;
  for (const auto& r : tr.norms) {
    if (r.t < from) continue;
    if (prev >= 0.0 && r.weighted > prev * (1.0 + slack)) return false;
    prev = r.weighted;
  }
  return true;
}

/// Verdict of one trajectory under the horizon and tail rules.
inline PhasePoint classify_trajectory(const Trajectory& tr) {
  PhasePoint pt;
  pt.horizon = tr.tEnd;
  pt.boundaryFlag = tr.boundaryFlag;
  switch (tr.verdict) {
    case Verdict::BlewUp:
      pt.verdict = PhaseVerdict::BlowUp;
      pt.tstar = tr.tEnd;
      break;
    case Verdict::ReachedHorizon:
      if (weighted_tail_nonincreasing(tr)) {
        pt.verdict = PhaseVerdict::GlobalCandidate;
      } else {
        pt.verdict = PhaseVerdict::Undetermined;
        pt.reason = "weighted norm still increasing at horizon";
      }
      break;
    case Verdict::Stalled:
      pt.verdict = PhaseVerdict::Undetermined;
      pt.reason = tr.note.empty() ? "stalled" : tr.note;
      break;
  }
  return pt;
}

namespace detail {

struct SweepJob {
  double p;
  double sigma;
  double scale;
};

inline PhasePoint run_job(const SweepPlan& plan, const Propagator& prop, const Field& u0s,
                          const Field& ws, const SweepJob& job, double Tend) {
  PhasePoint pt;
  try {
    SolveConfig cfg = plan.cfg;
    cfg.params = Params{plan.N, job.p, job.sigma};
    cfg.snapshotEvery = 0;
    cfg.stopTimes.clear();
    double horizon = Tend;
    for (;;) {
      cfg.Tend = horizon;
      const Trajectory tr = run(u0s.scaled(job.scale), ForcingSpec(ws.scaled(job.scale)), cfg, &prop);
      pt = classify_trajectory(tr);
      const bool horizon_issue = tr.verdict == Verdict::ReachedHorizon &&
                                 pt.verdict == PhaseVerdict::Undetermined;
      const double next = horizon * plan.escalation;
      if (!horizon_issue || next > plan.horizonMax * (1.0 + 1e-12)) break;
      horizon = next;
    }
  } catch (const std::exception& e) {
    pt = PhasePoint{};
    pt.verdict = PhaseVerdict::Undetermined;
    pt.reason = std::string("job failed: ") + e.what();
  }
  pt.p = job.p;
  pt.sigma = job.sigma;
  pt.scale = job.scale;
  if (job.sigma != 0.0) pt.theoryRegime = classify_regime(Params{plan.N, job.p, job.sigma});
  return pt;
}

}  // namespace detail

/**
 * Runs every lattice job on `workers` threads. Results are ordered by
 * (σ, scale, p) and do not depend on the worker count.
 */
inline std::vector<PhasePoint> execute(const SweepPlan& plan, int workers = 1) {
  plan.validate();
  const Grid g = plan.grid();
  const Propagator prop(g);
  const Field u0s = plan.u0Shape ? *plan.u0Shape : default_shape(g);
  const Field ws = plan.wShape ? *plan.wShape : default_shape(g);

  std::vector<detail::SweepJob> jobs;
  for (double s : plan.sigmaValues)
    for (double e : plan.dataScales)
      for (double p : plan.pValues) jobs.push_back({p, s, e});

  std::vector<PhasePoint> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      out[i] = detail::run_job(plan, prop, u0s, ws, jobs[i], plan.Tend);
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }

  // Along each p column a GlobalCandidate below a BlowUp is rerun with twice
  // its horizon; if it still reads global it is demoted to Undetermined.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].verdict != PhaseVerdict::GlobalCandidate) continue;
    const bool violated = std::any_of(out.begin(), out.end(), [&](const PhasePoint& o) {
      return o.sigma == out[i].sigma && o.scale == out[i].scale && o.p > out[i].p &&
             o.verdict == PhaseVerdict::BlowUp;
    });
    if (!violated) continue;
    PhasePoint redo = detail::run_job(plan, prop, u0s, ws, jobs[i], 2.0 * out[i].horizon);
    if (redo.verdict == PhaseVerdict::GlobalCandidate) {
      redo.verdict = PhaseVerdict::Undetermined;
      redo.reason = "non-monotone column: global below a blow-up";
    }
    out[i] = redo;
  }
  return out;
}

struct BoundaryEstimate {
  double sigma = 0.0;
  double scale = 0.0;
  std::optional<double> pHat;
  /// Largest BlowUp p below pHat.
  std::optional<double> pBelow;
  /// std::nullopt for +∞.
  std::optional<double> pStarTheory;
  bool bracketed = false;
  bool monotone = true;
  std::string note;
};

/// p̂(σ): smallest p classified GlobalCandidate at the smallest data scale.
inline BoundaryEstimate estimate_boundary(const std::vector<PhasePoint>& points, double sigma,
                                          int N) {
  BoundaryEstimate b;
  b.sigma = sigma;
  b.pStarTheory = critical_exponent(N, sigma);
  std::vector<PhasePoint> col;
  double smin = kInf;
  for (const auto& pt : points)
    if (pt.sigma == sigma) smin = std::min(smin, pt.scale);
  for (const auto& pt : points)
    if (pt.sigma == sigma && pt.scale == smin) col.push_back(pt);
  b.scale = smin;
  std::sort(col.begin(), col.end(), [](const auto& a, const auto& c) { return a.p < c.p; });
  for (const auto& pt : col)
    if (pt.verdict == PhaseVerdict::GlobalCandidate) {
      b.pHat = pt.p;
      break;
    }
  const bool any_blowup = std::any_of(col.begin(), col.end(), [](const auto& pt) {
    return pt.verdict == PhaseVerdict::BlowUp;
  });
  if (!b.pHat || !any_blowup) {
    b.pHat.reset();
    b.note = b.pStarTheory ? "Unbracketed" : "Unbracketed: pStar = inf";
    return b;
  }
  for (const auto& pt : col) {
    if (pt.verdict != PhaseVerdict::BlowUp) continue;
    if (pt.p < *b.pHat)
      b.pBelow = pt.p;
    else
      b.monotone = false;
  }
  b.bracketed = b.pBelow.has_value();
  if (!b.bracketed) b.note = "no BlowUp below pHat";
  return b;
}

struct ProbeRow {
  double sigma = 0.0;
  std::optional<double> pStarTheory;
  std::optional<double> pHat;
};

struct DiscontinuityReport {
  int N = 2;
  std::vector<ProbeRow> rows;
  /// Limit of the formula as σ → 0⁻: N/(N-2) for N >= 3, +∞ otherwise.
  std::optional<Rational> leftLimit;
  /// Largest |p*(σ) - leftLimit| over the two σ < 0 entries closest to 0,
  /// shrinking as they approach 0 (formula side).
  bool leftSideConverges = true;
  bool rightSideInfinite = true;
};

inline std::optional<Rational> critical_exponent_left_limit(int N) {
  if (N <= 2) return std::nullopt;
  return Rational(N, N - 2);
}

/**
 * Tabulates p*(σ) on both sides of σ = 0 and attaches empirical p̂(σ) where
 * sweep points are given. Formula facts are checked exactly; empirical trends
 * are only reported.
 */
inline DiscontinuityReport discontinuity_probe(int N, const std::vector<Rational>& sigmaLadder,
                                               const std::vector<PhasePoint>& points = {}) {
  DiscontinuityReport rep;
  rep.N = N;
  rep.leftLimit = critical_exponent_left_limit(N);
  std::vector<std::pair<Rational, Rational>> left;  // (σ, p*) for σ < 0 with finite p*
  for (const Rational& s : sigmaLadder) {
    if (s == 0) throw ConfigError("sigma ladder must exclude 0");
    if (!(s > -1)) throw ConfigError("sigma must exceed -1");
    ProbeRow row;
    row.sigma = to_double(s);
    const auto ps = critical_exponent(N, s);
    if (ps) row.pStarTheory = to_double(*ps);
    if (s > 0 && ps) rep.rightSideInfinite = false;
    if (s < 0) {
      if (ps) left.emplace_back(s, *ps);
      else if (rep.leftLimit) rep.leftSideConverges = false;
    }
    bool have = std::any_of(points.begin(), points.end(),
                            [&](const PhasePoint& pt) { return pt.sigma == row.sigma; });
    if (have) row.pHat = estimate_boundary(points, row.sigma, N).pHat;
    rep.rows.push_back(row);
  }
  // Formula side: as σ ↑ 0 the distance to the limit must shrink monotonically
  // (N >= 3), or p* must grow without bound (N <= 2).
  std::sort(left.begin(), left.end());
  for (std::size_t i = 1; i < left.size(); ++i) {
    if (rep.leftLimit) {
      const Rational a = abs(left[i - 1].second - *rep.leftLimit);
      const Rational b = abs(left[i].second - *rep.leftLimit);
      if (!(b < a)) rep.leftSideConverges = false;
    } else if (!(left[i].second > left[i - 1].second)) {
      rep.leftSideConverges = false;
    }
  }
  return rep;
}

inline void write_phase_csv(std::ostream& os, const std::vector<PhasePoint>& pts) {
  os << "p,sigma,scale,verdict,tstar,theory\n";
  char buf[256];
  for (const auto& pt : pts) {
    std::string ts;
    if (pt.tstar) {
      char t[40];
      std::snprintf(t, sizeof t, "%.17g", *pt.tstar);
      ts = t;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%s,%s\n", pt.p, pt.sigma, pt.scale,
                  std::string(to_string(pt.verdict)).c_str(), ts.c_str(),
                  pt.theoryRegime ? std::string(to_string(*pt.theoryRegime)).c_str() : "none");
    os << buf;
  }
}

inline void write_boundary_csv(std::ostream& os, const std::vector<BoundaryEstimate>& bs) {
  os << "sigma,scale,pHat,pBelow,pStarTheory,bracketed,monotone,note\n";
  auto fmt = [](const std::optional<double>& v, const char* missing) {
    if (!v) return std::string(missing);
    char t[40];
    std::snprintf(t, sizeof t, "%.17g", *v);
    return std::string(t);
  };
  char buf[64];
  for (const auto& b : bs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", b.sigma, b.scale);
    os << buf << fmt(b.pHat, "") << ',' << fmt(b.pBelow, "") << ',' << fmt(b.pStarTheory, "inf")
       << ',' << (b.bracketed ? "true" : "false") << ',' << (b.monotone ? "true" : "false") << ','
       << b.note << '\n';
  }
}

inline void write_probe_csv(std::ostream& os, const DiscontinuityReport& rep) {
  os << "sigma,pStarTheory,pHat\n";
  char buf[128];
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,", r.sigma);
    os << buf;
    if (r.pStarTheory) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.pStarTheory);
      os << buf;
    } else {
      os << "inf";
    }
    os << ',';
    if (r.pHat) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.pHat);
      os << buf;
    }
    os << '\n';
  }
  os << "# left_limit=" << (rep.leftLimit ? rep.leftLimit->str() : std::string("inf"))
     << "\n# left_side_converges=" << (rep.leftSideConverges ? "true" : "false")
     << "\n# right_side_infinite=" << (rep.rightSideInfinite ? "true" : "false") << '\n';
}

/**
 * Verdict-coloured lattice at the smallest data scale with the theoretical
 * p*(σ) curve drawn over it (clipped to the p range).
 */
inline void write_phase_svg(std::ostream& os, const std::vector<PhasePoint>& pts, int N) {
  std::vector<double> ps, ss;
  double smin = kInf;
  for (const auto& pt : pts) {
    ps.push_back(pt.p);
    ss.push_back(pt.sigma);
    smin = std::min(smin, pt.scale);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(ps);
  uniq(ss);
  const int cell = 40, margin = 60;
  const int W = margin * 2 + cell * static_cast<int>(ss.size());
  const int H = margin * 2 + cell * static_cast<int>(ps.size());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"sans-serif\" font-size=\"11\">\n",
                W, H);
  os << buf;
  auto colour = [](PhaseVerdict v) {
    switch (v) {
      case PhaseVerdict::BlowUp: return "#d9534f";
      case PhaseVerdict::GlobalCandidate: return "#5cb85c";
      default: return "#cccccc";
    }
  };
  auto col_of = [&](double s) { return std::lower_bound(ss.begin(), ss.end(), s) - ss.begin(); };
  auto row_of = [&](double p) { return std::lower_bound(ps.begin(), ps.end(), p) - ps.begin(); };
  for (const auto& pt : pts) {
    if (pt.scale != smin) continue;
    const long x = margin + cell * col_of(pt.sigma);
    const long y = H - margin - cell * (row_of(pt.p) + 1);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%ld\" y=\"%ld\" width=\"%d\" height=\"%d\" fill=\"%s\" "
                  "stroke=\"white\"/>\n",
                  x, y, cell, cell, colour(pt.verdict));
    os << buf;
  }
  for (std::size_t i = 0; i < ss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%zu\" y=\"%d\" text-anchor=\"middle\">%g</text>\n",
                  margin + cell * i + cell / 2, H - margin + 16, ss[i]);
    os << buf;
  }
  for (std::size_t j = 0; j < ps.size(); ++j) {
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%zu\" text-anchor=\"end\">%g</text>\n",
                  margin - 6, H - margin - cell * j - cell / 2 + 4, ps[j]);
    os << buf;
  }
  // p*(σ) in lattice coordinates: linear interpolation between row centres.
  auto y_of = [&](double p) {
    if (p <= ps.front()) return double(H - margin - cell / 2);
    if (p >= ps.back()) return double(H - margin - cell * ps.size() + cell / 2);
    const std::size_t j = std::upper_bound(ps.begin(), ps.end(), p) - ps.begin();
    const double f = (p - ps[j - 1]) / (ps[j] - ps[j - 1]);
    return H - margin - cell * (j - 1 + f) - cell / 2.0;
  };
  std::ostringstream path;
  bool open = false;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const auto pstar = critical_exponent(N, ss[i]);
    const double x = margin + cell * i + cell / 2.0;
    if (!pstar) {
      open = false;
      continue;
    }
    path << (open ? " L " : " M ") << x << ' ' << y_of(*pstar);
    open = true;
  }
  if (!path.str().empty())
    os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\">sigma</text>\n<text x=\"10\" y=\"%d\">p</text>\n", W / 2,
                H - 10, margin - 20);
  os << buf;
  os << "</svg>\n";
}

}  // namespace critex
