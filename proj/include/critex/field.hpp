#pragma once
/**
 * @file field.hpp
 * @brief Sampled real fields on the periodic box [-L, L)^N and their norms.
 *
 * The box is the discrete stand-in for R^N. Quadrature is the rectangle rule,
 * which is spectrally accurate for smooth periodic data.
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace critex {

class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Point = std::array<double, 3>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Grid {
 public:
  Grid() = default;
  Grid(int N, double L, int n) : N_(N), L_(L), n_(n) {
    if (N < 1 || N > 3) throw FieldError("grid dimension must be 1, 2 or 3");
    if (!(L > 0.0) || !std::isfinite(L)) throw FieldError("grid half-width L must be positive");
    if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n)))
      throw FieldError("points per axis must be a power of two >= 8");
  }

  int dim() const { return N_; }
  double half_width() const { return L_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return 2.0 * L_ / n_; }
  double cell_volume() const { return std::pow(spacing(), N_); }
  double volume() const { return std::pow(2.0 * L_, N_); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < N_; ++i) s *= static_cast<std::size_t>(n_);
    return s;
  }
  double coordinate(int i) const { return -L_ + i * spacing(); }

  /// Row-major multi-index of a flat index; unused axes are 0.
  std::array<int, 3> index(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = N_ - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % n_);
      flat /= n_;
    }
    return idx;
  }
  Point position(std::size_t flat) const {
    const auto idx = index(flat);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < N_; ++a) x[a] = coordinate(idx[a]);
    return x;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int N_ = 1;
  double L_ = 1.0;
  int n_ = 8;
};

inline double squared_distance(const Point& x, const Point& c, int N) {
  double r2 = 0.0;
  for (int a = 0; a < N; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
  return r2;
}

/// Immutable sampled function on a Grid. Non-finite samples are rejected.
class Field {
 public:
  Field() = default;
  Field(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw FieldError("field size does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw FieldError("field contains a non-finite value");
  }

  static Field constant(const Grid& g, double c) { return Field(g, std::vector<double>(g.size(), c)); }
  static Field zero(const Grid& g) { return constant(g, 0.0); }
  static Field sample(const Grid& g, const std::function<double(const Point&)>& fn) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g.position(i));
    return Field(g, std::move(v));
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  Field scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return Field(grid_, std::move(v));
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw FieldError("grid mismatch");
}

inline Field operator+(const Field& a, const Field& b) {
  require_same_grid(a, b);
  std::vector<double> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b[i];
  return Field(a.grid(), std::move(v));
}

inline Field operator-(const Field& a, const Field& b) {
  require_same_grid(a, b);
  std::vector<double> v(a.values());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b[i];
  return Field(a.grid(), std::move(v));
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Rectangle-rule L^r norm, r in [1, ∞]; pass kInf for the sup norm.
inline double lr_norm(const Field& f, double r) {
  if (!(r >= 1.0)) throw FieldError("Lebesgue index r must be >= 1");
  const double m = max_abs(f);
  if (std::isinf(r) || m == 0.0) return m;
  double acc = 0.0;
  if (r == 1.0) {
    for (double v : f.values()) acc += std::abs(v);
    return acc * f.grid().cell_volume();
  }
  if (r == 2.0) {
    for (double v : f.values()) acc += (v / m) * (v / m);
  } else {
    for (double v : f.values()) acc += std::pow(std::abs(v) / m, r);
  }
  return m * std::pow(acc * f.grid().cell_volume(), 1.0 / r);
}

/// Signed rectangle-rule integral h^N Σ f.
inline double integral(const Field& f) {
  double acc = 0.0;
  for (double v : f.values()) acc += v;
  return acc * f.grid().cell_volume();
}

/// L¹ fraction of f carried by the outer shell max_a |x_a| >= (1 - width) L.
inline double boundary_shell_fraction(const Field& f, double width = 0.125) {
  const Grid& g = f.grid();
  const double edge = (1.0 - width) * g.half_width();
  double shell = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    total += a;
    const Point x = g.position(i);
    double far = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) far = std::max(far, std::abs(x[ax]));
    if (far >= edge) shell += a;
  }
  return total > 0.0 ? shell / total : 0.0;
}

enum class BumpKind { Gaussian, CompactBump };

/// A sampled profile plus a note when it reaches too close to the box edge.
struct BumpProfile {
  Field field;
  std::optional<std::string> warning;
};

/**
 * Samples a bump centred at `center`.
 *
 * Gaussian: amplitude * exp(-|x-c|²/(4 scale)), i.e. `scale` plays the role
 * of heat-kernel time, so amplitude (4π scale)^{-N/2} gives unit mass.
 * CompactBump: amplitude * exp(1 - 1/(1 - |x-c|²/scale²)) inside radius
 * `scale`, zero outside.
 *
 * The support check uses radius 4·scale for the compact bump and four
 * standard deviations, 4·sqrt(2 scale), for the Gaussian.
 */
inline BumpProfile make_bump(const Grid& grid, BumpKind kind, const Point& center, double scale,
                             double amplitude) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FieldError("bump scale must be positive");
  if (!std::isfinite(amplitude)) throw FieldError("bump amplitude must be finite");
  const int N = grid.dim();
  BumpProfile out;
  if (kind == BumpKind::Gaussian) {
    out.field = Field::sample(grid, [&](const Point& x) {
      return amplitude * std::exp(-squared_distance(x, center, N) / (4.0 * scale));
    });
  } else {
    const double s2 = scale * scale;
    out.field = Field::sample(grid, [&](const Point& x) {
      const double r2 = squared_distance(x, center, N) / s2;
      if (r2 >= 1.0 || amplitude == 0.0) return 0.0;
      return amplitude * std::exp(1.0 - 1.0 / (1.0 - r2));
    });
  }
  const double reach = kind == BumpKind::Gaussian ? 4.0 * std::sqrt(2.0 * scale) : 4.0 * scale;
  double room = kInf;
  for (int a = 0; a < N; ++a)
    room = std::min(room, grid.half_width() - std::abs(center[a]));
  if (room < reach) {
    std::ostringstream msg;
    msg << "bump reaches within " << room << " of the box edge (wanted " << reach << ")";
    out.warning = msg.str();
  }
  return out;
}

/// Unit-mass heat kernel (4πa)^{-N/2} exp(-|x|²/(4a)) centred at the origin.
inline Field heat_kernel(const Grid& grid, double a, double mass = 1.0) {
  const double amp = mass * std::pow(4.0 * std::numbers::pi * a, -0.5 * grid.dim());
  return make_bump(grid, BumpKind::Gaussian, Point{0.0, 0.0, 0.0}, a, amp).field;
}

/// Spatial factor w of the forcing t^σ w(x), with its mass cached.
class ForcingSpec {
 public:
  ForcingSpec() = default;
  explicit ForcingSpec(Field profile) : profile_(std::move(profile)), mass_(integral(profile_)) {}

  const Field& profile() const { return profile_; }
  double mass() const { return mass_; }
  const Grid& grid() const { return profile_.grid(); }

 private:
  Field profile_;
  double mass_ = 0.0;
};

// ---------------------------------------------------------------------------
// Snapshot format: "CRITEX-FIELD v1 N=<N> L=<L> n=<n>\n" followed by n^N
// little-endian IEEE-754 doubles in row-major order.

inline void write_snapshot(std::ostream& os, const Field& f) {
  const Grid& g = f.grid();
  char header[160];
  std::snprintf(header, sizeof header, "CRITEX-FIELD v1 N=%d L=%.17g n=%d\n", g.dim(),
                g.half_width(), g.points_per_axis());
  os << header;
  for (double v : f.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!os) throw FieldError("snapshot write failed");
}

inline Field read_snapshot(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FieldError("snapshot: missing header");
  int N = 0;
  int n = 0;
  double L = 0.0;
  if (std::sscanf(header.c_str(), "CRITEX-FIELD v1 N=%d L=%lf n=%d", &N, &L, &n) != 3)
    throw FieldError("snapshot: malformed header '" + header + "'");
  Grid g(N, L, n);
  std::vector<double> v(g.size());
  for (double& x : v) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw FieldError("snapshot: truncated data");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    x = std::bit_cast<double>(bits);
  }
  return Field(g, std::move(v));
}

}  // namespace critex
