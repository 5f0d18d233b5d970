#pragma once
/**
 * @file semigroup.hpp
 * @brief The heat semigroup e^{tΔ} on the periodic box.
 *
 * Propagation multiplies each Fourier mode by exp(-t|ξ|²). A direct
 * periodised-kernel convolution is provided as an independent check.
 */

#include "critex/field.hpp"
#include "critex/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace critex {

class Propagator {
 public:
  Propagator() = default;
  explicit Propagator(const Grid& g)
      : spectral_(std::make_shared<const SpectralGrid>(g)), cache_(std::make_shared<Cache>()) {}

  const Grid& grid() const { return spectral_->grid(); }
  const SpectralGrid& spectral() const { return *spectral_; }

  /// Multipliers exp(-t|ξ|²); cached per exact value of t.
  std::shared_ptr<const std::vector<double>> multipliers(double t) const {
    if (!(t >= 0.0)) throw FieldError("propagation time must be >= 0");
    std::lock_guard lock(cache_->mutex);
    for (const auto& [key, val] : cache_->entries)
      if (key == t) return val;
    const auto& sym = spectral_->laplacian_symbol();
    auto m = std::make_shared<std::vector<double>>(sym.size());
    for (std::size_t i = 0; i < sym.size(); ++i) (*m)[i] = std::exp(-t * sym[i]);
    cache_->entries.emplace_front(t, m);
    if (cache_->entries.size() > kCacheSize) cache_->entries.pop_back();
    return m;
  }

  /// e^{tΔ} f. t = 0 returns f unchanged.
  Field apply(const Field& f, double t) const {
    if (!(f.grid() == grid())) throw FieldError("grid mismatch");
    if (!(t >= 0.0)) throw FieldError("propagation time must be >= 0");
    if (t == 0.0) return f;
    return Field(grid(), apply_values(f.values(), t));
  }

  std::vector<double> apply_values(const std::vector<double>& values, double t) const {
    if (t == 0.0) return values;
    Spectrum s = spectral_->forward(values);
    const auto m = multipliers(t);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= (*m)[i];
    return spectral_->inverse_values(std::move(s));
  }

 private:
  static constexpr std::size_t kCacheSize = 16;
  struct Cache {
    std::mutex mutex;
    std::deque<std::pair<double, std::shared_ptr<const std::vector<double>>>> entries;
  };

  std::shared_ptr<const SpectralGrid> spectral_;
  std::shared_ptr<Cache> cache_;
};

inline Field apply(const Propagator& prop, const Field& f, double t) { return prop.apply(f, t); }

/// True iff ‖e^{tΔ}f‖_q <= ‖f‖_q (1 + 1e-12).
inline bool verify_contraction(const Propagator& prop, const Field& f, double t, double q) {
  const double before = lr_norm(f, q);
  const double after = lr_norm(prop.apply(f, t), q);
  return after <= before * (1.0 + 1e-12);
}

struct SmoothingSample {
  double t = 0.0;
  double ratio = 0.0;
};

struct SmoothingReport {
  double q = 1.0;
  double r = 1.0;
  std::vector<SmoothingSample> samples;
  double c1hat = 0.0;
};

/// Largest time for which torus smoothing ratios track free space.
inline double presaturation_time(const Grid& g) {
  const double s = g.half_width() / 8.0;
  return s * s;
}

/**
 * Empirical constant in ‖e^{tΔ}φ‖_r <= c t^{-(N/2)(1/q-1/r)} ‖φ‖_q.
 *
 * Only meaningful for t up to presaturation_time(); the caller picks times.
 */
inline SmoothingReport estimate_smoothing_constant(const Propagator& prop, double q, double r,
                                                   std::span<const Field> probes,
                                                   std::span<const double> times) {
  if (!(q >= 1.0) || !(r >= 1.0)) throw FieldError("Lebesgue indices must be >= 1");
  if (q > r) throw FieldError("smoothing estimate requires q <= r");
  const int N = prop.grid().dim();
  const double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double expo = 0.5 * N * (inv_q - inv_r);
  SmoothingReport rep{q, r, {}, 0.0};
  for (const Field& phi : probes) {
    const double base = lr_norm(phi, q);
    if (base == 0.0) throw FieldError("zero probe");
    for (double t : times) {
      if (!(t > 0.0)) throw FieldError("smoothing times must be positive");
      const double ratio = lr_norm(prop.apply(phi, t), r) * std::pow(t, expo) / base;
      rep.samples.push_back({t, ratio});
      rep.c1hat = std::max(rep.c1hat, ratio);
    }
  }
  return rep;
}

inline SmoothingReport estimate_smoothing_constant(const Grid& g, double q, double r,
                                                   std::span<const Field> probes,
                                                   std::span<const double> times) {
  return estimate_smoothing_constant(Propagator(g), q, r, probes, times);
}

/**
 * Direct summation of the periodised heat kernel against f. O(n^{2N});
 * intended for small grids as an independent check of Propagator::apply.
 */
inline Field oracle_convolve(const Field& f, double t) {
  if (!(t > 0.0)) throw FieldError("oracle convolution needs t > 0");
  const Grid& g = f.grid();
  const int N = g.dim();
  const int n = g.points_per_axis();
  const double period = 2.0 * g.half_width();
  const double h = g.spacing();
  // Images beyond distance sqrt(4t·40) contribute below e^{-40}.
  const int images = static_cast<int>(std::ceil(std::sqrt(160.0 * t) / period)) + 1;

  // The kernel is a product over axes, so tabulate the 1-D periodised factor
  // for every index offset.
  std::vector<double> k1(n);
  const double norm1 = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  for (int d = 0; d < n; ++d) {
    double acc = 0.0;
    for (int m = -images; m <= images; ++m) {
      const double x = d * h + m * period;
      acc += std::exp(-x * x / (4.0 * t));
    }
    k1[d] = norm1 * acc;
  }
  const double cell = g.cell_volume();
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto a = g.index(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (f[j] == 0.0) continue;
      const auto b = g.index(j);
      double k = 1.0;
      for (int ax = 0; ax < N; ++ax) k *= k1[((a[ax] - b[ax]) % n + n) % n];
      acc += k * f[j];
    }
    out[i] = acc * cell;
  }
  return Field(g, std::move(out));
}

}  // namespace critex
