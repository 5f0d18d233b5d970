#pragma once
/**
 * @file spectral.hpp
 * @brief Real-to-complex transforms on a Grid, backed by FFTW.
 *
 * Plans are created once per grid shape under a process-wide lock (FFTW
 * planning is not thread-safe) and executed through the new-array interface,
 * which is safe to call concurrently.
 */

#include "critex/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

namespace critex {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwPlanPair {
 public:
  explicit FftwPlanPair(const Grid& g) {
    std::vector<int> dims(g.dim(), g.points_per_axis());
    const std::size_t nreal = g.size();
    const std::size_t ncomplex = nreal / g.points_per_axis() * (g.points_per_axis() / 2 + 1);
    std::vector<double> rbuf(nreal);
    std::vector<std::complex<double>> cbuf(ncomplex);
    auto* cptr = reinterpret_cast<fftw_complex*>(cbuf.data());
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c(g.dim(), dims.data(), rbuf.data(), cptr,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_c2r(g.dim(), dims.data(), cptr, rbuf.data(),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  FftwPlanPair(const FftwPlanPair&) = delete;
  FftwPlanPair& operator=(const FftwPlanPair&) = delete;
  ~FftwPlanPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  /// Destroys `in`.
  void backward(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline std::shared_ptr<const FftwPlanPair> shared_plans(const Grid& g) {
  static std::mutex m;
  static std::map<std::tuple<int, int>, std::shared_ptr<const FftwPlanPair>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{g.dim(), g.points_per_axis()}];
  if (!slot) slot = std::make_shared<const FftwPlanPair>(g);
  return slot;
}

}  // namespace detail

/// Forward/inverse transforms plus the Laplacian symbol |ξ|² of every mode.
class SpectralGrid {
 public:
  SpectralGrid() = default;
  explicit SpectralGrid(const Grid& g) : grid_(g), plans_(detail::shared_plans(g)) {
    const int n = g.points_per_axis();
    const int half = n / 2 + 1;
    const double k0 = std::numbers::pi / g.half_width();
    symbol_.resize(g.size() / n * half);
    std::vector<long> squared(symbol_.size());
    std::size_t idx = 0;
    const int outer = g.dim() >= 3 ? n : 1;
    const int middle = g.dim() >= 2 ? n : 1;
    for (int i = 0; i < outer; ++i) {
      for (int j = 0; j < middle; ++j) {
        for (int k = 0; k < half; ++k) {
          const long ki = g.dim() >= 3 ? wavenumber(i, n) : 0;
          const long kj = g.dim() >= 2 ? wavenumber(j, n) : 0;
          squared[idx] = ki * ki + kj * kj + long(k) * long(k);
          symbol_[idx] = k0 * k0 * static_cast<double>(squared[idx]);
          ++idx;
        }
      }
    }
    // Group modes by |k|²; symbols are exact functions of it.
    std::vector<long> keys(squared);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    distinct_.reserve(keys.size());
    for (long key : keys) distinct_.push_back(k0 * k0 * static_cast<double>(key));
    symbol_class_.resize(squared.size());
    for (std::size_t m = 0; m < squared.size(); ++m)
      symbol_class_[m] = static_cast<std::uint32_t>(
          std::lower_bound(keys.begin(), keys.end(), squared[m]) - keys.begin());
  }

  const Grid& grid() const { return grid_; }
  /// |ξ|² per retained mode, ξ = (π/L)·(integer frequency).
  const std::vector<double>& laplacian_symbol() const { return symbol_; }
  std::size_t spectrum_size() const { return symbol_.size(); }
  /// Sorted distinct values of |ξ|²; distinct_symbols()[0] == 0.
  const std::vector<double>& distinct_symbols() const { return distinct_; }
  /// Index into distinct_symbols() for every mode.
  const std::vector<std::uint32_t>& symbol_class() const { return symbol_class_; }

  Spectrum forward(const Field& f) const {
    if (!(f.grid() == grid_)) throw FieldError("grid mismatch");
    return forward(f.values());
  }
  Spectrum forward(const std::vector<double>& values) const {
    std::vector<double> in(values);
    Spectrum out(symbol_.size());
    plans_->forward(in.data(), out.data());
    return out;
  }

  /// Normalised inverse; consumes the spectrum.
  std::vector<double> inverse_values(Spectrum spec) const {
    std::vector<double> out(grid_.size());
    plans_->backward(spec.data(), out.data());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (double& v : out) v *= scale;
    return out;
  }
  Field inverse(Spectrum spec) const { return Field(grid_, inverse_values(std::move(spec))); }

  /// Spectral Laplacian (diagnostic; noisy where f is tiny).
  Field laplacian(const Field& f) const {
    Spectrum s = forward(f);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= -symbol_[i];
    return inverse(std::move(s));
  }

 private:
  static long wavenumber(int i, int n) { return i < n / 2 ? i : i - n; }

  Grid grid_;
  std::shared_ptr<const detail::FftwPlanPair> plans_;
  std::vector<double> symbol_;
  std::vector<double> distinct_;
  std::vector<std::uint32_t> symbol_class_;
};

}  // namespace critex
