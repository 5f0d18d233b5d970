#pragma once
/**
 * @file exponents.hpp
 * @brief Exponent algebra for the forced semilinear heat equation
 *        u_t = Δu + |u|^p + t^σ w(x).
 *
 * Every routine is templated on the scalar so the same code runs in double
 * precision and in exact rational arithmetic (boost cpp_rational). Identity
 * checks on rational inputs are therefore exact.
 */

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace critex {

using Rational = boost::multiprecision::cpp_rational;

/// Raised on invalid (N, p, σ) or on an index outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class Scalar>
struct BasicParams {
  int N = 2;
  Scalar p = Scalar(2);
  Scalar sigma = Scalar(-1) / Scalar(2);
};

using Params = BasicParams<double>;
using ExactParams = BasicParams<Rational>;

enum class Regime { SubcriticalBlowUp, SupercriticalGlobal, ForcedBlowUp };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SubcriticalBlowUp: return "SubcriticalBlowUp";
    case Regime::SupercriticalGlobal: return "SupercriticalGlobal";
    case Regime::ForcedBlowUp: return "ForcedBlowUp";
  }
  return "?";
}

/// Open interval (lo, hi); empty when lo >= hi.
template <class Scalar>
struct OpenInterval {
  Scalar lo{};
  Scalar hi{};
  bool empty() const { return !(lo < hi); }
  bool contains(const Scalar& x) const { return lo < x && x < hi; }
  Scalar midpoint() const { return (lo + hi) / Scalar(2); }
};

template <class Scalar>
struct DerivedExponents {
  Scalar pF{};
  /// Critical exponent p*(σ); std::nullopt encodes +∞.
  std::optional<Scalar> pStar;
  Scalar d{};
  Scalar k{};
  /// Admissible values of 1/q (not q). Empty when no q exists.
  OpenInterval<Scalar> inverseQWindow;
  /// Default q: reciprocal of the window midpoint in 1/q coordinates.
  std::optional<Scalar> q;
  /// Weighted-norm decay rate at the default q.
  std::optional<Scalar> beta;
  /// False for σ = 0 or N = 1 (accepted for baseline runs only).
  bool inScope = true;

  bool pStarInfinite() const { return !pStar.has_value(); }
};

template <class Scalar>
void validate(const BasicParams<Scalar>& prm) {
  if (prm.N < 1) throw ParameterError("N must be >= 1");
  if (!(prm.p > Scalar(1))) throw ParameterError("p must be > 1");
  if (!(prm.sigma > Scalar(-1))) throw ParameterError("sigma must be > -1");
}

template <class Scalar>
bool in_scope(const BasicParams<Scalar>& prm) {
  return prm.N >= 2 && prm.sigma != Scalar(0);
}

/// Critical exponent p*(σ); std::nullopt for +∞. At σ = 0 this reproduces the
/// unforced-in-time value N/(N-2) (N >= 3) or +∞ (N <= 2).
template <class Scalar>
std::optional<Scalar> critical_exponent(int N, const Scalar& sigma) {
  if (sigma > Scalar(0)) return std::nullopt;
  const Scalar den = Scalar(N) - Scalar(2) - Scalar(2) * sigma;
  if (!(den > Scalar(0))) return std::nullopt;
  return (Scalar(N) - Scalar(2) * sigma) / den;
}

/// Decay rate β = 1/(p-1) - N/(2q).
template <class Scalar>
Scalar weighted_decay_rate(const BasicParams<Scalar>& prm, const Scalar& q) {
  return Scalar(1) / (prm.p - Scalar(1)) - Scalar(prm.N) / (Scalar(2) * q);
}

/// The admissible window for 1/q.
template <class Scalar>
OpenInterval<Scalar> inverse_q_window(const BasicParams<Scalar>& prm) {
  const Scalar N(prm.N);
  const Scalar pm1 = prm.p - Scalar(1);
  const Scalar a = Scalar(1) / (prm.p * pm1);
  const Scalar b = prm.sigma + Scalar(1) / pm1;
  const Scalar c = Scalar(2) / (N * pm1);
  const Scalar e = Scalar(1) / prm.p;
  OpenInterval<Scalar> w;
  w.lo = Scalar(2) / N * (a > b ? a : b);
  w.hi = c < e ? c : e;
  return w;
}

template <class Scalar>
DerivedExponents<Scalar> derive(const BasicParams<Scalar>& prm) {
  validate(prm);
  DerivedExponents<Scalar> out;
  const Scalar N(prm.N);
  out.pF = Scalar(1) + Scalar(2) / N;
  out.pStar = critical_exponent(prm.N, prm.sigma);
  out.d = N * (prm.p - Scalar(1)) / Scalar(2);
  out.k = out.d / (prm.p * (prm.sigma + Scalar(1)) - prm.sigma);
  out.inverseQWindow = inverse_q_window(prm);
  if (!out.inverseQWindow.empty()) {
    out.q = Scalar(1) / out.inverseQWindow.midpoint();
    out.beta = weighted_decay_rate(prm, *out.q);
  }
  out.inScope = in_scope(prm);
  return out;
}

/// Regime classification. Ties at p = p* count as supercritical.
template <class Scalar>
Regime classify_regime(const BasicParams<Scalar>& prm) {
  validate(prm);
  if (prm.sigma == Scalar(0))
    throw ParameterError("sigma = 0 is outside the supported range");
  if (prm.sigma > Scalar(0)) return Regime::ForcedBlowUp;
  const auto ps = critical_exponent(prm.N, prm.sigma);
  if (!ps || prm.p < *ps) return Regime::SubcriticalBlowUp;
  return Regime::SupercriticalGlobal;
}

/// 2σp² - (N + 2σ - 2)p + N; negative throughout the supercritical regime.
template <class Scalar>
Scalar window_quadratic(const BasicParams<Scalar>& prm) {
  const Scalar& p = prm.p;
  const Scalar& s = prm.sigma;
  return Scalar(2) * s * p * p - (Scalar(prm.N) + Scalar(2) * s - Scalar(2)) * p +
         Scalar(prm.N);
}

template <class Scalar>
struct IdentityReport {
  Scalar q{};
  Scalar beta{};
  /// β - (N/2)(1/d - 1/q)
  Scalar freeTerm{};
  /// β(1-p) + 1 - N(p-1)/(2q)
  Scalar nonlinearTerm{};
  /// β - (N/2)(1/k - 1/q) + σ + 1
  Scalar forcingTerm{};
  bool betaPositive = false;
  bool betaPBelowOne = false;
  bool qAboveP = false;
  /// q > d > k >= 1
  bool indexOrdering = false;
};

template <class Scalar>
IdentityReport<Scalar> verify_scaling_identities(const BasicParams<Scalar>& prm,
                                                 const Scalar& q) {
  validate(prm);
  const auto win = inverse_q_window(prm);
  if (!(q > Scalar(0))) throw ParameterError("q must be positive");
  const Scalar invq = Scalar(1) / q;
  if (win.empty())
    throw ParameterError("no admissible q: the 1/q window is empty");
  if (!(invq > win.lo))
    throw ParameterError("1/q must exceed the lower window bound (2/N)max{1/(p(p-1)), sigma+1/(p-1)}");
  if (!(invq < win.hi))
    throw ParameterError("1/q must stay below the upper window bound min{2/(N(p-1)), 1/p}");

  const Scalar N(prm.N);
  const Scalar half_n = N / Scalar(2);
  const Scalar d = N * (prm.p - Scalar(1)) / Scalar(2);
  const Scalar k = d / (prm.p * (prm.sigma + Scalar(1)) - prm.sigma);
  IdentityReport<Scalar> r;
  r.q = q;
  r.beta = weighted_decay_rate(prm, q);
  r.freeTerm = r.beta - half_n * (Scalar(1) / d - invq);
  r.nonlinearTerm = r.beta * (Scalar(1) - prm.p) + Scalar(1) -
                    N / (Scalar(2) * q) * (prm.p - Scalar(1));
  r.forcingTerm = r.beta - half_n * (Scalar(1) / k - invq) + prm.sigma + Scalar(1);
  r.betaPositive = r.beta > Scalar(0);
  r.betaPBelowOne = r.beta * prm.p < Scalar(1);
  r.qAboveP = q > prm.p;
  r.indexOrdering = q > d && d > k && !(k < Scalar(1));
  return r;
}

struct LocalExistenceBudget {
  double deltaInf = 0.0;
  double Tguarantee = 0.0;
};

/// Largest T <= 1 with T^{σ+1}/(σ+1) + 2^p δ^{p-1} T <= 1, by bisection.
inline LocalExistenceBudget local_existence_time(double deltaInf, const Params& prm) {
  validate(prm);
  if (!(deltaInf >= 0.0) || !std::isfinite(deltaInf))
    throw ParameterError("deltaInf must be finite and >= 0");
  const double sp1 = prm.sigma + 1.0;
  const double growth = std::pow(2.0, prm.p) * std::pow(deltaInf, prm.p - 1.0);
  auto lhs = [&](double T) { return std::pow(T, sp1) / sp1 + growth * T; };

  LocalExistenceBudget out{deltaInf, 1.0};
  if (lhs(1.0) <= 1.0) return out;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (lhs(mid) <= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  out.Tguarantee = lo;
  return out;
}

struct PicardSmallness {
  double deltaMax = 0.0;
  double dataBudget = 0.0;
};

/// Ball radius bound (1/(2C*))^{1/(p-1)} and the data budget deltaMax/(2C*).
inline PicardSmallness picard_smallness(const Params& prm, double Cstar) {
  validate(prm);
  if (!(Cstar > 0.0)) throw ParameterError("Cstar must be positive");
  PicardSmallness s;
  s.deltaMax = std::pow(1.0 / (2.0 * Cstar), 1.0 / (prm.p - 1.0));
  s.dataBudget = s.deltaMax / (2.0 * Cstar);
  return s;
}

/// Parses "a/b", an integer, or a decimal literal ("-0.45", "1e-3") exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ParameterError("empty number");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    const Rational num = parse_rational(s.substr(0, slash));
    const Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw ParameterError("zero denominator in '" + s + "'");
    return num / den;
  }
  using boost::multiprecision::cpp_int;
  bool neg = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
  cpp_int mant = 0;
  long exp10 = 0;
  bool any = false;
  bool frac = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      mant = mant * 10 + (c - '0');
      if (frac) --exp10;
      any = true;
    } else if (c == '.' && !frac) {
      frac = true;
    } else if ((c == 'e' || c == 'E') && any) {
      try {
        std::size_t used = 0;
        exp10 += std::stol(s.substr(i + 1), &used);
        if (i + 1 + used != s.size()) throw ParameterError("bad exponent");
      } catch (const std::logic_error&) {
        throw ParameterError("malformed number '" + s + "'");
      }
      break;
    } else {
      throw ParameterError("malformed number '" + s + "'");
    }
  }
  if (!any) throw ParameterError("malformed number '" + s + "'");
  Rational r(mant);
  const cpp_int scale = boost::multiprecision::pow(cpp_int(10),
                                                   static_cast<unsigned>(exp10 < 0 ? -exp10 : exp10));
  r = exp10 < 0 ? r / Rational(scale) : r * Rational(scale);
  return neg ? Rational(-r) : r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Params to_double(const ExactParams& prm) {
  return Params{prm.N, to_double(prm.p), to_double(prm.sigma)};
}

}  // namespace critex
