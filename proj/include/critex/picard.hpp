#pragma once
/**
 * @file picard.hpp
 * @brief The Picard map
 *   (Su)(t) = e^{tΔ}u0 + ∫_0^t e^{(t-s)Δ}|u(s)|^p ds + ∫_0^t s^σ e^{(t-s)Δ}w ds
 * on a geometric time ladder, its fixed-point iteration in the weighted ball
 * sup_t t^β‖u(t)‖_q <= δ, and an audit of the three Duhamel estimates.
 *
 * The nonlinear term treats |u(s)|^p as piecewise linear in s between rungs
 * (with u(0) = u0) and integrates the heat multiplier exactly on each piece,
 * which gives a per-mode recurrence along the ladder. The forcing term uses
 * the closed-form mode weights ∫_0^t s^σ e^{-λ(t-s)} ds.
 */

#include "critex/evolve.hpp"
#include "critex/exponents.hpp"
#include "critex/field.hpp"
#include "critex/quadrature.hpp"
#include "critex/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace critex {

struct LadderSpec {
  double Tcap = 10.0;
  int rungs = 64;
  /// t_min = minFraction·Tcap
  double minFraction = 1e-6;
};

/// Geometric times t_min = t_0 < ... < t_{M-1} = Tcap.
inline std::vector<double> make_ladder(const LadderSpec& spec) {
  if (!(spec.Tcap > 0.0) || spec.rungs < 2 || !(spec.minFraction > 0.0) ||
      !(spec.minFraction < 1.0))
    throw ConfigError("ladder needs Tcap > 0, rungs >= 2, 0 < minFraction < 1");
  std::vector<double> t(spec.rungs);
  const double lo = std::log(spec.minFraction * spec.Tcap);
  const double hi = std::log(spec.Tcap);
  for (int j = 0; j < spec.rungs; ++j)
    t[j] = std::exp(lo + (hi - lo) * j / (spec.rungs - 1));
  t.back() = spec.Tcap;
  return t;
}

struct LadderSolution {
  std::vector<double> times;
  std::vector<Field> fields;
  double q = 2.0;
  double beta = 0.0;
  double delta = 0.0;
  bool inBall = false;

  /// t_j^β ‖u(t_j)‖_q per rung.
  std::vector<double> weighted_norms() const {
    std::vector<double> out(times.size());
    for (std::size_t j = 0; j < times.size(); ++j)
      out[j] = std::pow(times[j], beta) * lr_norm(fields[j], q);
    return out;
  }
  double sup_weighted() const {
    const auto w = weighted_norms();
    return w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
  }
};

/// Distance in the ball metric: max_j t_j^β ‖u(t_j) - v(t_j)‖_q.
inline double ladder_distance(const LadderSolution& a, const LadderSolution& b) {
  if (a.times != b.times) throw ConfigError("ladder mismatch");
  double d = 0.0;
  for (std::size_t j = 0; j < a.times.size(); ++j)
    d = std::max(d, std::pow(a.times[j], a.beta) * lr_norm(a.fields[j] - b.fields[j], a.q));
  return d;
}

/**
 * The map S for fixed (u0, w, p, σ, q) on a fixed ladder. Construction
 * precomputes the free and forcing terms, which do not depend on u.
 */
class PicardOperator {
 public:
  PicardOperator(const Propagator& prop, const Field& u0, const ForcingSpec& w, const Params& prm,
                 double q, std::vector<double> ladder)
      : prop_(prop), u0_(u0), prm_(prm), q_(q), times_(std::move(ladder)) {
    validate(prm);
    require_same_grid(u0, w.profile());
    if (!(u0.grid() == prop.grid())) throw FieldError("grid mismatch");
    if (times_.empty() || !(times_.front() > 0.0) ||
        !std::is_sorted(times_.begin(), times_.end()) ||
        std::adjacent_find(times_.begin(), times_.end()) != times_.end())
      throw ConfigError("ladder must be strictly increasing and positive");
    const auto ex = derive(prm);
    if (!ex.inverseQWindow.contains(1.0 / q))
      throw ParameterError("q outside the admissible window");
    beta_ = weighted_decay_rate(prm, q);

    const ForcedHeatFlow flow(prop, w, prm.sigma);
    const std::vector<double> zero(u0.size(), 0.0);
    free_.reserve(times_.size());
    forcing_.reserve(times_.size());
    for (double t : times_) {
      free_.push_back(prop.apply(u0, t));
      forcing_.push_back(Field(u0.grid(), flow.advance(zero, 0.0, t)));
    }

    // Per interval [t_{j-1}, t_j] (t_{-1} = 0) and per distinct symbol λ:
    // decay e^{-λΔ} and the weights of the right/left endpoint values.
    const auto& lam = prop.spectral().distinct_symbols();
    const std::size_t nc = lam.size();
    decay_.resize(times_.size() * nc);
    wRight_.resize(times_.size() * nc);
    wLeft_.resize(times_.size() * nc);
    double prev = 0.0;
    for (std::size_t j = 0; j < times_.size(); ++j) {
      const double dt = times_[j] - prev;
      for (std::size_t c = 0; c < nc; ++c) {
        const double z = lam[c] * dt;
        const auto [e1, e2] = exponential_moments(z);
        decay_[j * nc + c] = std::exp(-z);
        wRight_[j * nc + c] = dt * (e1 - e2);
        wLeft_[j * nc + c] = dt * e2;
      }
      prev = times_[j];
    }
  }

  const std::vector<double>& times() const { return times_; }
  double q() const { return q_; }
  double beta() const { return beta_; }
  const Params& params() const { return prm_; }
  const Propagator& propagator() const { return prop_; }
  const std::vector<Field>& free_terms() const { return free_; }
  const std::vector<Field>& forcing_terms() const { return forcing_; }

  /// ∫_0^{t_j} e^{(t_j-s)Δ}|u(s)|^p ds for every rung.
  std::vector<Field> nonlinear_terms(const std::vector<Field>& u) const {
    if (u.size() != times_.size()) throw ConfigError("ladder mismatch");
    const SpectralGrid& sg = prop_.spectral();
    const auto& cls = sg.symbol_class();
    const std::size_t nc = sg.distinct_symbols().size();
    const double p = prm_.p;
    auto power = [&](const Field& f) {
      if (!(f.grid() == u0_.grid())) throw FieldError("grid mismatch");
      std::vector<double> v(f.values());
      for (double& x : v) x = std::pow(std::abs(x), p);
      return sg.forward(v);
    };
    Spectrum acc(sg.spectrum_size(), {0.0, 0.0});
    Spectrum left = power(u0_);
    std::vector<Field> out;
    out.reserve(times_.size());
    for (std::size_t j = 0; j < times_.size(); ++j) {
      Spectrum right = power(u[j]);
      const std::size_t base = j * nc;
      for (std::size_t i = 0; i < acc.size(); ++i) {
        const std::size_t k = base + cls[i];
        acc[i] = decay_[k] * acc[i] + wRight_[k] * right[i] + wLeft_[k] * left[i];
      }
      out.push_back(sg.inverse(acc));
      left = std::move(right);
    }
    return out;
  }

  LadderSolution apply(const LadderSolution& u, double delta) const {
    if (u.times != times_) throw ConfigError("ladder mismatch");
    const auto nl = nonlinear_terms(u.fields);
    LadderSolution out = empty_solution(delta);
    for (std::size_t j = 0; j < times_.size(); ++j)
      out.fields.push_back(free_[j] + nl[j] + forcing_[j]);
    out.inBall = out.sup_weighted() <= delta;
    return out;
  }

  /// The free term alone: the starting iterate.
  LadderSolution free_solution(double delta) const {
    LadderSolution out = empty_solution(delta);
    out.fields = free_;
    out.inBall = out.sup_weighted() <= delta;
    return out;
  }

 private:
  LadderSolution empty_solution(double delta) const {
    LadderSolution s;
    s.times = times_;
    s.q = q_;
    s.beta = beta_;
    s.delta = delta;
    return s;
  }

  Propagator prop_;
  Field u0_;
  Params prm_;
  double q_;
  double beta_ = 0.0;
  std::vector<double> times_;
  std::vector<Field> free_;
  std::vector<Field> forcing_;
  std::vector<double> decay_;
  std::vector<double> wRight_;
  std::vector<double> wLeft_;
};

inline LadderSolution apply_S(const LadderSolution& u, const Field& u0, const ForcingSpec& w,
                              const Params& prm, double q) {
  const PicardOperator op(Propagator(u0.grid()), u0, w, prm, q, u.times);
  return op.apply(u, u.delta);
}

struct ContractionDiagnostics {
  int iterates = 0;
  std::vector<double> distances;
  /// exp of the least-squares slope of log d_m over m >= 1; NaN with fewer than two points.
  double ratioEstimate = std::nan("");
  bool converged = false;
  bool nonContractive = false;
  bool allInBall = true;
  bool outsideGuarantee = false;
  /// ‖S(u*) - u*‖ in the ball metric.
  double residual = std::nan("");
};

inline double fitted_ratio(const std::vector<double>& d) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t m = 1; m < d.size(); ++m)
    if (d[m] > 0.0) {
      x.push_back(static_cast<double>(m));
      y.push_back(std::log(d[m]));
    }
  if (x.size() < 2) return std::nan("");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
}

struct FixedPointOptions {
  int maxIter = 60;
  double tol = 1e-9;
  /// Data budget ‖u0‖_d + ‖w‖_k; when set and exceeded, the run is flagged.
  std::optional<double> dataBudget;
};

struct FixedPointResult {
  LadderSolution solution;
  ContractionDiagnostics diagnostics;
};

inline FixedPointResult iterate_to_fixed_point(const PicardOperator& op, double delta,
                                               const FixedPointOptions& opt = {},
                                               double data_size = 0.0) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  FixedPointResult res;
  auto& dg = res.diagnostics;
  dg.outsideGuarantee = opt.dataBudget && data_size > *opt.dataBudget;
  LadderSolution u = op.free_solution(delta);
  dg.allInBall = u.inBall;
  int increases = 0;
  for (int m = 0; m < opt.maxIter; ++m) {
    LadderSolution next = op.apply(u, delta);
    const double d = ladder_distance(next, u);
    dg.distances.push_back(d);
    dg.iterates = m + 1;
    dg.allInBall = dg.allInBall && next.inBall;
    u = std::move(next);
    if (d < opt.tol) {
      dg.converged = true;
      break;
    }
    if (dg.distances.size() >= 2 && d > dg.distances[dg.distances.size() - 2]) {
      if (++increases >= 3) {
        dg.nonContractive = true;
        break;
      }
    } else {
      increases = 0;
    }
  }
  dg.ratioEstimate = fitted_ratio(dg.distances);
  if (dg.converged && !(dg.ratioEstimate < 1.0) && dg.distances.size() > 2)
    dg.converged = false;
  dg.residual = ladder_distance(op.apply(u, delta), u);
  res.solution = std::move(u);
  return res;
}

inline FixedPointResult iterate_to_fixed_point(const Field& u0, const ForcingSpec& w,
                                               const Params& prm, double q, double delta,
                                               int maxIter, const LadderSpec& ladder = {}) {
  const PicardOperator op(Propagator(u0.grid()), u0, w, prm, q, make_ladder(ladder));
  FixedPointOptions opt;
  opt.maxIter = maxIter;
  return iterate_to_fixed_point(op, delta, opt);
}

/// Empirical smoothing constants for the three estimates and the resulting C*.
struct PicardConstants {
  double c1Free = 0.0;       ///< L^d → L^q
  double c1Nonlinear = 0.0;  ///< L^{q/p} → L^q
  double c1Forcing = 0.0;    ///< L^k → L^q
  double c1hat = 0.0;        ///< max of the three
  double betaNonlinear = 0.0;  ///< B(1-βp, 1-N(p-1)/(2q))
  double betaForcing = 0.0;    ///< B(σ+1, 1-(N/2)(1/k-1/q))
  double Cstar = 0.0;
};

namespace detail {

inline void require_picard_indices(const Params& prm, double q, const DerivedExponents<double>& ex) {
  if (!ex.inverseQWindow.contains(1.0 / q)) throw ParameterError("q outside the admissible window");
  if (ex.d < 1.0 || ex.k < 1.0)
    throw ParameterError("d and k must be >= 1 (supercritical regime only)");
  (void)prm;
}

}  // namespace detail

/**
 * Measures c1 for the pairs (d, q), (q/p, q), (k, q) over centred Gaussian
 * probes of log-spaced widths plus the given extra probes, at the given times
 * clipped to the pre-saturation range. Gaussian ratios depend only on t/a, so
 * those probes use every fourth time.
 */
inline PicardConstants measure_picard_constants(const Propagator& prop, const Params& prm, double q,
                                                const std::vector<Field>& extra_probes,
                                                std::vector<double> times) {
  const auto ex = derive(prm);
  detail::require_picard_indices(prm, q, ex);
  const Grid& g = prop.grid();
  const double tsat = presaturation_time(g);
  std::erase_if(times, [&](double t) { return !(t > 0.0) || t > tsat; });
  if (times.empty()) throw ConfigError("no smoothing times inside the pre-saturation range");

  std::vector<Field> gaussians;
  const double hmin = g.spacing() * g.spacing();
  for (int i = 0; i <= 24; ++i) {
    const double a = hmin * std::pow(tsat / hmin, i / 24.0);
    gaussians.push_back(heat_kernel(g, a, 1.0));
  }
  std::vector<double> sparse;
  for (std::size_t i = 0; i < times.size(); i += 4) sparse.push_back(times[i]);
  if (sparse.back() != times.back()) sparse.push_back(times.back());
  std::vector<Field> extras;
  for (const Field& f : extra_probes)
    if (lr_norm(f, kInf) > 0.0) extras.push_back(f);

  auto c1 = [&](double from) {
    double c = estimate_smoothing_constant(prop, from, q, gaussians, sparse).c1hat;
    if (!extras.empty())
      c = std::max(c, estimate_smoothing_constant(prop, from, q, extras, times).c1hat);
    return c;
  };
  PicardConstants pc;
  pc.c1Free = c1(ex.d);
  pc.c1Nonlinear = c1(q / prm.p);
  pc.c1Forcing = c1(ex.k);
  pc.c1hat = std::max({pc.c1Free, pc.c1Nonlinear, pc.c1Forcing});
  const double beta = weighted_decay_rate(prm, q);
  const int N = prm.N;
  pc.betaNonlinear = beta_function(1.0 - beta * prm.p, 1.0 - N * (prm.p - 1.0) / (2.0 * q));
  pc.betaForcing = beta_function(prm.sigma + 1.0, 1.0 - 0.5 * N * (1.0 / ex.k - 1.0 / q));
  pc.Cstar = pc.c1hat * std::max({1.0, pc.betaNonlinear, pc.betaForcing});
  return pc;
}

struct AuditRow {
  double t = 0.0;
  double free = 0.0;
  double freeBound = 0.0;
  double nonlinear = 0.0;
  double nonlinearBound = 0.0;
  double forcing = 0.0;
  double forcingBound = 0.0;
  double freeMargin() const { return freeBound - free; }
  double nonlinearMargin() const { return nonlinearBound - nonlinear; }
  double forcingMargin() const { return forcingBound - forcing; }
};

struct EstimateAudit {
  PicardConstants constants;
  double normU0d = 0.0;
  double normWk = 0.0;
  std::vector<AuditRow> rows;
  double min_margin() const {
    double m = kInf;
    for (const auto& r : rows)
      m = std::min({m, r.freeMargin(), r.nonlinearMargin(), r.forcingMargin()});
    return m;
  }
};

/**
 * Weighted sizes of the three Duhamel terms of S(u) against their bounds
 * c1·‖u0‖_d, c1·B(1-βp, ·)·δ^p and c1·B(σ+1, ·)·‖w‖_k, with each c1 measured
 * for its own index pair.
 */
inline EstimateAudit audit_estimates(const PicardOperator& op, const LadderSolution& u,
                                     const Field& u0, const ForcingSpec& w,
                                     const PicardConstants& pc) {
  const Params& prm = op.params();
  const auto ex = derive(prm);
  detail::require_picard_indices(prm, op.q(), ex);
  if (!(pc.betaNonlinear > 0.0) || !(pc.betaForcing > 0.0))
    throw ParameterError("Beta arguments nonpositive: admissibility bug");
  EstimateAudit au;
  au.constants = pc;
  au.normU0d = lr_norm(u0, ex.d);
  au.normWk = lr_norm(w.profile(), ex.k);
  const auto nl = op.nonlinear_terms(u.fields);
  const double q = op.q();
  const double beta = op.beta();
  for (std::size_t j = 0; j < op.times().size(); ++j) {
    const double t = op.times()[j];
    const double tb = std::pow(t, beta);
    AuditRow r;
    r.t = t;
    r.free = tb * lr_norm(op.free_terms()[j], q);
    r.nonlinear = tb * lr_norm(nl[j], q);
    r.forcing = tb * lr_norm(op.forcing_terms()[j], q);
    r.freeBound = pc.c1Free * au.normU0d;
    r.nonlinearBound = pc.c1Nonlinear * pc.betaNonlinear * std::pow(u.delta, prm.p);
    r.forcingBound = pc.c1Forcing * pc.betaForcing * au.normWk;
    au.rows.push_back(r);
  }
  return au;
}

inline void write_audit_csv(std::ostream& os, const EstimateAudit& au) {
  os << "t,free,free_bound,nonlinear,nonlinear_bound,forcing,forcing_bound\n";
  char buf[256];
  for (const auto& r : au.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.free,
                  r.freeBound, r.nonlinear, r.nonlinearBound, r.forcing, r.forcingBound);
    os << buf;
  }
}

inline void write_diagnostics_csv(std::ostream& os, const ContractionDiagnostics& dg) {
  os << "iterate,distance\n";
  char buf[64];
  for (std::size_t m = 0; m < dg.distances.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", m + 1, dg.distances[m]);
    os << buf;
  }
}

inline void write_ladder_csv(std::ostream& os, const LadderSolution& u) {
  os << "t,Lq,weighted\n";
  char buf[96];
  for (std::size_t j = 0; j < u.times.size(); ++j) {
    const double lq = lr_norm(u.fields[j], u.q);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", u.times[j], lq,
                  std::pow(u.times[j], u.beta) * lq);
    os << buf;
  }
}

}  // namespace critex
