#pragma once
/**
 * @file evolve.hpp
 * @brief Time integration of u_t = Δu + |u|^p + t^σ w(x) on the periodic box.
 *
 * Strang splitting between two exactly solvable flows:
 *  - the forced heat flow v_t = Δv + t^σ w, advanced per Fourier mode as
 *    e^{-λh} v̂ + ŵ ∫_a^b s^σ e^{-λ(b-s)} ds (the s^σ weight is integrated in
 *    closed form, so steps touching s = 0 lose nothing for σ in (-1, 0));
 *  - the pointwise reaction v' = |v|^p, which has an explicit solution.
 *
 * Step size is controlled by step doubling; blow-up is declared when the sup
 * norm crosses Umax, or when the step collapses below dtMin while the sup norm
 * keeps growing.
 */

#include "critex/exponents.hpp"
#include "critex/field.hpp"
#include "critex/quadrature.hpp"
#include "critex/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace critex {

/// Thrown by step() when the reaction produces non-finite values.
class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SolveConfig {
  Params params;
  double dt0 = 1e-4;
  double dtMin = 1e-12;
  double dtMax = kInf;
  /// Caps dt at max(dt0, maxStepFraction·t) so the norm record stays dense in log t.
  double maxStepFraction = 0.1;
  double Tend = 1.0;
  double Umax = 1e8;
  double tolStep = 1e-7;
  /// Keep a snapshot every this many accepted steps (0: only first and last).
  int snapshotEvery = 0;
  /// Lebesgue index for the recorded L^q norm; derived when unset.
  std::optional<double> q;
  long maxSteps = 5'000'000;
  /// Diagnostic switch: drop |u|^p to get the linear forced heat equation.
  bool nonlinearity = true;
  /// Times the stepper lands on exactly; a snapshot is kept at each.
  std::vector<double> stopTimes;

  void validate() const {
    critex::validate(params);
    if (!(dtMin > 0.0) || !(dt0 >= dtMin)) throw ConfigError("need 0 < dtMin <= dt0");
    if (!(dtMax >= dt0)) throw ConfigError("need dtMax >= dt0");
    if (!(maxStepFraction > 0.0)) throw ConfigError("maxStepFraction must be positive");
    if (!(Umax > 0.0)) throw ConfigError("Umax must be positive");
    if (!(Tend > 0.0) || !std::isfinite(Tend)) throw ConfigError("Tend must be positive");
    if (!(tolStep > 0.0)) throw ConfigError("tolStep must be positive");
    if (snapshotEvery < 0) throw ConfigError("snapshotEvery must be >= 0");
    if (q && !(*q >= 1.0)) throw ConfigError("q must be >= 1");
    if (maxSteps < 1) throw ConfigError("maxSteps must be positive");
    for (double s : stopTimes)
      if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("stop times must be positive");
  }
};

/// Lebesgue indices used for trajectory bookkeeping.
struct NormIndices {
  double q = 2.0;
  double d = 1.0;
  double beta = 0.0;
  /// True when q comes from the admissible window rather than the fallback.
  bool admissible = false;
};

/**
 * q is the window midpoint when the window is nonempty, otherwise 2·max(p, d, 1).
 * d is clamped to 1 from below (L^d is not a norm for d < 1).
 */
inline NormIndices norm_indices(const Params& prm, std::optional<double> q_override = {}) {
  const auto ex = derive(prm);
  NormIndices ni;
  ni.d = std::max(1.0, ex.d);
  if (q_override) {
    ni.q = *q_override;
    ni.admissible = ex.inverseQWindow.contains(1.0 / ni.q);
  } else if (ex.q) {
    ni.q = *ex.q;
    ni.admissible = true;
  } else {
    ni.q = 2.0 * std::max({prm.p, ex.d, 1.0});
  }
  ni.beta = weighted_decay_rate(prm, ni.q);
  return ni;
}

enum class Verdict { BlewUp, ReachedHorizon, Stalled };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::BlewUp: return "BlewUp";
    case Verdict::ReachedHorizon: return "ReachedHorizon";
    case Verdict::Stalled: return "Stalled";
  }
  return "?";
}

struct NormRecord {
  double t = 0.0;
  double linf = 0.0;
  double lq = 0.0;
  double ld = 0.0;
  /// t^β ‖u(t)‖_q
  double weighted = 0.0;
};

struct Snapshot {
  double t = 0.0;
  Field field;
};

struct Trajectory {
  std::vector<NormRecord> norms;
  std::vector<Snapshot> snapshots;
  Verdict verdict = Verdict::Stalled;
  /// Blow-up time for BlewUp, final time otherwise.
  double tEnd = 0.0;
  NormIndices indices;
  double maxShellFraction = 0.0;
  /// Set when the boundary shell carried more than 1e-6 of the L¹ mass.
  bool boundaryFlag = false;
  long acceptedSteps = 0;
  long rejectedSteps = 0;
  std::string note;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(norms.size());
    for (const auto& r : norms) t.push_back(r.t);
    return t;
  }
  const Field& final_field() const { return snapshots.back().field; }
};

namespace detail {

/// ∫_t^s r^σ dr, accurate when s - t << t.
inline double forcing_antiderivative(double sigma, double t, double s) {
  const double sp1 = sigma + 1.0;
  if (t == 0.0) return std::pow(s, sp1) / sp1;
  return std::pow(t, sp1) * std::expm1(sp1 * std::log1p((s - t) / t)) / sp1;
}

/// Exact flow of v' = |v|^p over time h, in place. Throws when a point blows
/// up inside the step.
inline void reaction_step(std::vector<double>& v, double h, double p) {
  const double pm1 = p - 1.0;
  const double expo = -1.0 / pm1;
  for (double& x : v) {
    if (x == 0.0) continue;
    const double a = std::abs(x);
    const double ap = pm1 == 1.0 ? a : std::pow(a, pm1);
    if (x > 0.0) {
      const double den = 1.0 - pm1 * h * ap;
      if (!(den > 0.0)) throw OverflowError("reaction blows up inside the step");
      x = pm1 == 1.0 ? x / den : x * std::pow(den, expo);
    } else {
      const double den = 1.0 + pm1 * h * ap;
      x = pm1 == 1.0 ? x / den : x * std::pow(den, expo);
    }
  }
}

inline void require_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) throw OverflowError("non-finite value in step");
}

}  // namespace detail

/**
 * The forced heat flow v ↦ e^{(b-a)Δ} v + ∫_a^b s^σ e^{(b-s)Δ} w ds on one grid.
 *
 * The mode weights W_λ(t) = ∫_0^t s^σ e^{-λ(t-s)} ds are evaluated once per
 * distinct |ξ|² and kept for the last few time points, since step doubling
 * revisits the same times.
 */
class ForcedHeatFlow {
 public:
  ForcedHeatFlow(const Propagator& prop, const ForcingSpec& w, double sigma)
      : prop_(prop), sigma_(sigma), cache_(std::make_shared<Cache>()) {
    if (!(w.grid() == prop.grid())) throw FieldError("grid mismatch");
    if (!(sigma > -1.0)) throw ConfigError("sigma must exceed -1");
    for (double x : w.profile().values())
      if (x != 0.0) {
        w_hat_ = prop.spectral().forward(w.profile());
        break;
      }
  }

  const Propagator& propagator() const { return prop_; }
  bool forced() const { return !w_hat_.empty(); }
  double sigma() const { return sigma_; }

  std::vector<double> advance(const std::vector<double>& v, double a, double b) const {
    if (!(b >= a) || !(a >= 0.0)) throw ConfigError("forced heat flow needs 0 <= a <= b");
    if (b == a) return v;
    const SpectralGrid& sg = prop_.spectral();
    Spectrum s = sg.forward(v);
    const auto decay = prop_.multipliers(b - a);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= (*decay)[i];
    if (forced()) {
      const auto wb = weights(b);
      const auto wa = weights(a);
      const auto& cls = sg.symbol_class();
      const double mean_increment = detail::forcing_antiderivative(sigma_, a, b);
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::uint32_t c = cls[i];
        const double inc = c == 0 ? mean_increment : (*wb)[c] - (*decay)[i] * (*wa)[c];
        s[i] += w_hat_[i] * inc;
      }
    }
    return sg.inverse_values(std::move(s));
  }

  /// W_λ(t) for every distinct λ of the grid.
  std::shared_ptr<const std::vector<double>> weights(double t) const {
    std::lock_guard lock(cache_->mutex);
    for (const auto& [key, val] : cache_->entries)
      if (key == t) return val;
    const auto& lam = prop_.spectral().distinct_symbols();
    auto out = std::make_shared<std::vector<double>>(lam.size());
    for (std::size_t c = 0; c < lam.size(); ++c)
      (*out)[c] = singular_duhamel_weight(sigma_, lam[c], t);
    cache_->entries.emplace_front(t, out);
    if (cache_->entries.size() > 8) cache_->entries.pop_back();
    return out;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::deque<std::pair<double, std::shared_ptr<const std::vector<double>>>> entries;
  };

  Propagator prop_;
  Spectrum w_hat_;
  double sigma_;
  std::shared_ptr<Cache> cache_;
};

/// One Strang step of size dt from time t (raw values).
inline std::vector<double> step_values(const ForcedHeatFlow& flow, const std::vector<double>& u,
                                       double t, double dt, double p, bool nonlinear = true) {
  if (!(dt > 0.0)) throw ConfigError("step size must be positive");
  const double mid = t + 0.5 * dt;
  std::vector<double> v = flow.advance(u, t, mid);
  if (nonlinear) detail::reaction_step(v, dt, p);
  detail::require_finite(v);
  v = flow.advance(v, mid, t + dt);
  detail::require_finite(v);
  return v;
}

/**
 * One Strang step of size dt from time t: forced heat flow over the first
 * half, exact reaction over dt, forced heat flow over the second half.
 */
inline Field step(const Propagator& prop, const Field& u, double t, double dt, const Params& prm,
                  const ForcingSpec& w, bool nonlinear = true) {
  require_same_grid(u, w.profile());
  if (!(u.grid() == prop.grid())) throw FieldError("grid mismatch");
  validate(prm);
  const ForcedHeatFlow flow(prop, w, prm.sigma);
  return Field(u.grid(), step_values(flow, u.values(), t, dt, prm.p, nonlinear));
}

namespace detail {

struct ShellMask {
  explicit ShellMask(const Grid& g, double width = 0.125) : in_shell(g.size(), false) {
    const double edge = (1.0 - width) * g.half_width();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point x = g.position(i);
      for (int a = 0; a < g.dim(); ++a)
        if (std::abs(x[a]) >= edge) in_shell[i] = true;
    }
  }
  double fraction(const std::vector<double>& v) const {
    double shell = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]);
      total += a;
      if (in_shell[i]) shell += a;
    }
    return total > 0.0 ? shell / total : 0.0;
  }
  std::vector<bool> in_shell;
};

inline NormRecord measure(const Grid& g, const std::vector<double>& v, double t,
                          const NormIndices& ni) {
  NormRecord r;
  r.t = t;
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  r.linf = m;
  if (m > 0.0) {
    const double cell = g.cell_volume();
    double aq = 0.0;
    double ad = 0.0;
    for (double x : v) {
      const double y = std::abs(x) / m;
      aq += std::pow(y, ni.q);
      ad += ni.d == 1.0 ? y : std::pow(y, ni.d);
    }
    r.lq = m * std::pow(aq * cell, 1.0 / ni.q);
    r.ld = m * std::pow(ad * cell, 1.0 / ni.d);
  }
  r.weighted = t > 0.0 ? std::pow(t, ni.beta) * r.lq : (ni.beta > 0.0 ? 0.0 : r.lq);
  return r;
}

}  // namespace detail

/// Adaptive integration from u0 up to cfg.Tend or blow-up.
inline Trajectory run(const Field& u0, const ForcingSpec& w, const SolveConfig& cfg,
                      const Propagator* shared_prop = nullptr) {
  cfg.validate();
  require_same_grid(u0, w.profile());
  const Grid& g = u0.grid();
  const Propagator prop = shared_prop ? *shared_prop : Propagator(g);
  if (!(prop.grid() == g)) throw FieldError("grid mismatch");

  Trajectory tr;
  tr.indices = norm_indices(cfg.params, cfg.q);
  const detail::ShellMask shell(g);
  const ForcedHeatFlow flow(prop, w, cfg.params.sigma);
  const double p = cfg.params.p;

  std::vector<double> u = u0.values();
  double t = 0.0;
  double dt = std::min(cfg.dt0, cfg.Tend);
  std::deque<double> recent_linf;

  auto record = [&](const std::vector<double>& v, double time) {
    tr.norms.push_back(detail::measure(g, v, time, tr.indices));
    const double frac = shell.fraction(v);
    tr.maxShellFraction = std::max(tr.maxShellFraction, frac);
    recent_linf.push_back(tr.norms.back().linf);
    if (recent_linf.size() > 11) recent_linf.pop_front();
  };
  record(u, t);
  tr.snapshots.push_back({0.0, u0});

  auto growing = [&] {
    if (recent_linf.size() < 2) return false;
    for (std::size_t i = 1; i < recent_linf.size(); ++i)
      if (!(recent_linf[i] > recent_linf[i - 1])) return false;
    return true;
  };

  std::vector<double> stops;
  for (double s : cfg.stopTimes)
    if (s < cfg.Tend) stops.push_back(s);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  std::size_t next_stop = 0;

  bool done = false;
  while (!done) {
    if (tr.acceptedSteps + tr.rejectedSteps >= cfg.maxSteps) {
      tr.verdict = Verdict::Stalled;
      tr.note = "step budget exhausted";
      break;
    }
    const double remaining = cfg.Tend - t;
    const bool last = dt >= remaining;
    double h = last ? remaining : dt;
    bool at_stop = false;
    if (next_stop < stops.size() && t + h >= stops[next_stop]) {
      h = stops[next_stop] - t;
      at_stop = true;
    }

    std::vector<double> full;
    std::vector<double> two;
    bool overflow = false;
    try {
      full = step_values(flow, u, t, h, p, cfg.nonlinearity);
      const std::vector<double> mid = step_values(flow, u, t, 0.5 * h, p, cfg.nonlinearity);
      two = step_values(flow, mid, t + 0.5 * h, 0.5 * h, p, cfg.nonlinearity);
    } catch (const OverflowError&) {
      overflow = true;
    }

    double factor;
    bool accept = false;
    if (overflow) {
      factor = 0.25;
    } else {
      double diff = 0.0;
      double scale = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        diff = std::max(diff, std::abs(two[i] - full[i]));
        scale = std::max({scale, std::abs(two[i]), std::abs(u[i])});
      }
      const double err = scale > 0.0 ? diff / (3.0 * scale) : 0.0;
      accept = err <= cfg.tolStep;
      factor = err > 0.0 ? 0.9 * std::cbrt(cfg.tolStep / err) : 4.0;
      factor = std::clamp(factor, 0.2, 4.0);
    }

    if (accept) {
      u = std::move(two);
      t = at_stop ? stops[next_stop++] : (last ? cfg.Tend : t + h);
      ++tr.acceptedSteps;
      record(u, t);
      if (at_stop || (cfg.snapshotEvery > 0 && tr.acceptedSteps % cfg.snapshotEvery == 0))
        tr.snapshots.push_back({t, Field(g, u)});
      if (tr.norms.back().linf >= cfg.Umax) {
        tr.verdict = Verdict::BlewUp;
        done = true;
      } else if (last && !at_stop) {
        tr.verdict = Verdict::ReachedHorizon;
        done = true;
      }
      // A step shortened to land on a stop time says little about the next one.
      const double base = at_stop ? std::max(h * factor, dt) : h * factor;
      dt = std::min({base, cfg.dtMax, std::max(cfg.dt0, cfg.maxStepFraction * t)});
    } else {
      ++tr.rejectedSteps;
      dt = h * factor;
      if (dt < cfg.dtMin) {
        if (growing()) {
          tr.verdict = Verdict::BlewUp;
          tr.note = "step collapse with growing sup norm";
        } else {
          tr.verdict = Verdict::Stalled;
          tr.note = "step collapse without growth";
        }
        done = true;
      }
    }
  }
  tr.tEnd = t;
  if (tr.snapshots.back().t != t) tr.snapshots.push_back({t, Field(g, u)});
  tr.boundaryFlag = tr.maxShellFraction > 1e-6;
  return tr;
}

struct WeightedSeries {
  std::vector<std::pair<double, double>> values;
  std::vector<double> runningSup;
  double sup() const { return runningSup.empty() ? 0.0 : runningSup.back(); }
};

/// (t, t^β ‖u(t)‖_q) along a trajectory, from recorded norms when q matches,
/// otherwise from the stored snapshots.
inline WeightedSeries weighted_norm_series(const Trajectory& tr, double beta, double q) {
  WeightedSeries out;
  auto push = [&](double t, double lq) {
    const double val = t > 0.0 ? std::pow(t, beta) * lq : (beta > 0.0 ? 0.0 : lq);
    out.values.emplace_back(t, val);
    out.runningSup.push_back(std::max(out.runningSup.empty() ? 0.0 : out.runningSup.back(), val));
  };
  if (q == tr.indices.q && !tr.norms.empty()) {
    for (const auto& r : tr.norms) push(r.t, r.lq);
  } else {
    if (tr.snapshots.empty()) throw ConfigError("no norms for this q and no snapshots to recompute from");
    for (const auto& s : tr.snapshots) push(s.t, lr_norm(s.field, q));
  }
  return out;
}

inline void write_norms_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,Linf,Lq,Ld,weighted\n";
  char buf[160];
  for (const auto& r : tr.norms) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.linf, r.lq, r.ld,
                  r.weighted);
    os << buf;
  }
}

}  // namespace critex
