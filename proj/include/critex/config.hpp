#pragma once
/**
 * @file config.hpp
 * @brief Flat INI-style run configuration, its serialisation, and run manifests.
 *
 * Keys carry their unit in the name (`Tend_time`, `L_length`). Numbers are
 * written with 17 significant digits so that parse → serialise → parse is the
 * identity on the parameter record. Exponents p and σ are kept as the text
 * given, which parse_rational reads exactly.
 */

#include "critex/certificate.hpp"
#include "critex/evolve.hpp"
#include "critex/exponents.hpp"
#include "critex/field.hpp"
#include "critex/picard.hpp"
#include "critex/sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace critex {

/// Config problem, with the 1-based line it refers to (0 when not tied to a line).
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(const std::string& msg, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Raw key/value text with the line each key came from.
class IniDocument {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static IniDocument parse(std::istream& is) {
    IniDocument doc;
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(is, raw)) {
      ++lineno;
      const std::string s = trim(strip_comment(raw));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3) throw ConfigParseError("malformed section header", lineno);
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigParseError("expected key = value", lineno);
      if (section.empty()) throw ConfigParseError("key outside any section", lineno);
      const std::string key = trim(s.substr(0, eq));
      if (key.empty()) throw ConfigParseError("empty key", lineno);
      auto& sec = doc.sections_[section];
      if (sec.count(key)) throw ConfigParseError("duplicate key '" + key + "'", lineno);
      sec[key] = Entry{trim(s.substr(eq + 1)), lineno};
    }
    return doc;
  }

  static IniDocument parse(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  const std::map<std::string, Entry>* section(const std::string& s) const {
    auto it = sections_.find(s);
    return it == sections_.end() ? nullptr : &it->second;
  }
  std::vector<std::string> section_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : sections_) out.push_back(k);
    return out;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::map<std::string, Entry>> sections_;
};

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
  return out;
}

/// Profile of u0 or w before scaling.
struct DataSpec {
  std::string kind = "gaussian";  ///< gaussian | compact | constant | zero | file
  double amplitude = 1.0;
  double scale = 1.0;
  Point center{0.0, 0.0, 0.0};
  std::string file;

  bool operator==(const DataSpec&) const = default;
};

struct GridSpec {
  int N = 2;
  double L = 16.0;
  int n = 128;
  Grid grid() const { return Grid(N, L, n); }
  bool operator==(const GridSpec&) const = default;
};

struct SolverSpec {
  double dt0 = 1e-4;
  double dtMin = 1e-12;
  double dtMax = kInf;
  double maxStepFraction = 0.1;
  double Tend = 1.0;
  double Umax = 1e8;
  double tolStep = 1e-7;
  int snapshotEvery = 0;
  std::optional<double> q;
  bool nonlinearity = true;
  long maxSteps = 5'000'000;
  bool operator==(const SolverSpec&) const = default;
};

struct PicardSpec {
  double Tcap = 10.0;
  int rungs = 64;
  double minFraction = 1e-6;
  int maxIter = 60;
  double tol = 1e-9;
  std::optional<double> delta;
  std::optional<double> q;
  bool operator==(const PicardSpec&) const = default;
};

struct CertificateSpec {
  std::vector<double> Tvalues;
  std::optional<double> R;
  double xiSharpness = 1.0;
  double etaSharpness = 1.0;
  bool operator==(const CertificateSpec&) const = default;
};

struct SweepSpec {
  std::vector<double> pValues;
  std::vector<double> sigmaValues;
  std::vector<double> scales{1.0};
  double Tend = 100.0;
  double horizonMax = 1e4;
  double escalation = 10.0;
  std::vector<double> probeSigmas;
  bool operator==(const SweepSpec&) const = default;
};

/// Everything a command needs. Sections absent from the file stay unset.
struct RunConfig {
  std::string p = "2";
  std::string sigma = "-1/2";
  GridSpec grid;
  DataSpec u0;
  DataSpec w;
  SolverSpec solver;
  std::optional<PicardSpec> picard;
  std::optional<CertificateSpec> certificate;
  std::optional<SweepSpec> sweep;

  ExactParams exact_params() const {
    ExactParams e{grid.N, parse_rational(p), parse_rational(sigma)};
    validate(e);
    return e;
  }
  Params params() const { return to_double(exact_params()); }

  SolveConfig solve_config() const {
    SolveConfig c;
    c.params = params();
    c.dt0 = solver.dt0;
    c.dtMin = solver.dtMin;
    c.dtMax = solver.dtMax;
    c.maxStepFraction = solver.maxStepFraction;
    c.Tend = solver.Tend;
    c.Umax = solver.Umax;
    c.tolStep = solver.tolStep;
    c.snapshotEvery = solver.snapshotEvery;
    c.q = solver.q;
    c.nonlinearity = solver.nonlinearity;
    c.maxSteps = solver.maxSteps;
    return c;
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const IniDocument& doc, const std::string& name) : name_(name) {
    if (const auto* s = doc.section(name)) entries_ = *s;
  }
  ~SectionReader() = default;

  bool present() const { return !entries_.empty(); }
  int line() const { return line_; }

  std::optional<std::string> text(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.push_back(key);
    line_ = it->second.line;
    return it->second.value;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (auto v = text(key)) out = convert<T>(*v, key);
  }
  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (auto v = text(key)) out = convert<T>(*v, key);
  }
  void get_list(const std::string& key, std::vector<double>& out) {
    auto v = text(key);
    if (!v) return;
    out.clear();
    std::istringstream is(*v);
    std::string tok;
    while (is >> tok) out.push_back(convert<double>(tok, key));
  }
  void get_point(const std::string& key, Point& out) {
    std::vector<double> v;
    get_list(key, v);
    if (v.empty()) return;
    if (v.size() > 3) throw ConfigParseError("too many coordinates in '" + key + "'", line_);
    out = {0.0, 0.0, 0.0};
    std::copy(v.begin(), v.end(), out.begin());
  }

  /// Rejects keys this section does not define.
  void finish() const {
    for (const auto& [k, e] : entries_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw ConfigParseError("unknown key '" + k + "' in [" + name_ + "]", e.line);
  }

 private:
  template <class T>
  T convert(const std::string& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        return v;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::invalid_argument("bad bool");
      } else if constexpr (std::is_integral_v<T>) {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing text");
        return static_cast<T>(x);
      } else {
        if (v == "inf") return kInf;
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing text");
        return x;
      }
    } catch (const ConfigParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigParseError("bad value '" + v + "' for '" + key + "'", line_);
    }
  }

  std::string name_;
  std::map<std::string, IniDocument::Entry> entries_;
  std::vector<std::string> used_;
  int line_ = 0;
};

inline void read_data(SectionReader& r, const std::string& prefix, DataSpec& d) {
  r.get(prefix + "_kind", d.kind);
  r.get(prefix + "_amplitude", d.amplitude);
  r.get(prefix + "_scale_length", d.scale);
  r.get_point(prefix + "_center_length", d.center);
  r.get(prefix + "_file", d.file);
  static const char* kinds[] = {"gaussian", "compact", "constant", "zero", "file"};
  if (std::find(std::begin(kinds), std::end(kinds), d.kind) == std::end(kinds))
    throw ConfigParseError("unknown data kind '" + d.kind + "'", r.line());
}

}  // namespace detail

/// Sections understood by the parser; others (e.g. [manifest]) are skipped.
inline RunConfig parse_config(const IniDocument& doc) {
  RunConfig c;
  {
    detail::SectionReader r(doc, "params");
    r.get("N", c.grid.N);
    auto exact = [&](const char* key, std::string& out) {
      r.get(key, out);
      try {
        parse_rational(out);
      } catch (const std::exception& e) {
        throw ConfigParseError(std::string(key) + ": " + e.what(), r.line());
      }
    };
    exact("p", c.p);
    exact("sigma", c.sigma);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "grid");
    r.get("L_length", c.grid.L);
    r.get("n_points", c.grid.n);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "data");
    detail::read_data(r, "u0", c.u0);
    detail::read_data(r, "w", c.w);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "solver");
    auto& s = c.solver;
    r.get("dt0_time", s.dt0);
    r.get("dtMin_time", s.dtMin);
    r.get("dtMax_time", s.dtMax);
    r.get("maxStepFraction", s.maxStepFraction);
    r.get("Tend_time", s.Tend);
    r.get("Umax_value", s.Umax);
    r.get("tolStep", s.tolStep);
    r.get("snapshotEvery_steps", s.snapshotEvery);
    r.get("q_index", s.q);
    r.get("nonlinearity", s.nonlinearity);
    r.get("maxSteps", s.maxSteps);
    r.finish();
  }
  if (doc.has_section("picard")) {
    detail::SectionReader r(doc, "picard");
    PicardSpec s;
    r.get("Tcap_time", s.Tcap);
    r.get("rungs", s.rungs);
    r.get("minFraction", s.minFraction);
    r.get("maxIter", s.maxIter);
    r.get("tol", s.tol);
    r.get("delta_value", s.delta);
    r.get("q_index", s.q);
    r.finish();
    c.picard = s;
  }
  if (doc.has_section("certificate")) {
    detail::SectionReader r(doc, "certificate");
    CertificateSpec s;
    r.get_list("T_values_time", s.Tvalues);
    r.get("R_length", s.R);
    r.get("xiSharpness", s.xiSharpness);
    r.get("etaSharpness", s.etaSharpness);
    r.finish();
    c.certificate = s;
  }
  if (doc.has_section("sweep")) {
    detail::SectionReader r(doc, "sweep");
    SweepSpec s;
    r.get_list("p_values", s.pValues);
    r.get_list("sigma_values", s.sigmaValues);
    r.get_list("scales", s.scales);
    r.get("Tend_time", s.Tend);
    r.get("horizonMax_time", s.horizonMax);
    r.get("escalation", s.escalation);
    r.get_list("probe_sigma_values", s.probeSigmas);
    r.finish();
    c.sweep = s;
  }
  return c;
}

inline RunConfig parse_config(std::istream& is) { return parse_config(IniDocument::parse(is)); }

inline RunConfig parse_config_text(const std::string& text) {
  return parse_config(IniDocument::parse(text));
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigParseError("cannot read config file '" + path + "'", 0);
  return parse_config(is);
}

inline void write_config(std::ostream& os, const RunConfig& c) {
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto data = [&](const std::string& pre, const DataSpec& d) {
    kv(pre + "_kind", d.kind);
    kv(pre + "_amplitude", format_double(d.amplitude));
    kv(pre + "_scale_length", format_double(d.scale));
    kv(pre + "_center_length", format_list({d.center[0], d.center[1], d.center[2]}));
    if (!d.file.empty()) kv(pre + "_file", d.file);
  };
  os << "[params]\n";
  kv("N", std::to_string(c.grid.N));
  kv("p", c.p);
  kv("sigma", c.sigma);
  os << "\n[grid]\n";
  kv("L_length", format_double(c.grid.L));
  kv("n_points", std::to_string(c.grid.n));
  os << "\n[data]\n";
  data("u0", c.u0);
  data("w", c.w);
  const auto& s = c.solver;
  os << "\n[solver]\n";
  kv("dt0_time", format_double(s.dt0));
  kv("dtMin_time", format_double(s.dtMin));
  kv("dtMax_time", format_double(s.dtMax));
  kv("maxStepFraction", format_double(s.maxStepFraction));
  kv("Tend_time", format_double(s.Tend));
  kv("Umax_value", format_double(s.Umax));
  kv("tolStep", format_double(s.tolStep));
  kv("snapshotEvery_steps", std::to_string(s.snapshotEvery));
  if (s.q) kv("q_index", format_double(*s.q));
  kv("nonlinearity", s.nonlinearity ? "true" : "false");
  kv("maxSteps", std::to_string(s.maxSteps));
  if (c.picard) {
    const auto& pk = *c.picard;
    os << "\n[picard]\n";
    kv("Tcap_time", format_double(pk.Tcap));
    kv("rungs", std::to_string(pk.rungs));
    kv("minFraction", format_double(pk.minFraction));
    kv("maxIter", std::to_string(pk.maxIter));
    kv("tol", format_double(pk.tol));
    if (pk.delta) kv("delta_value", format_double(*pk.delta));
    if (pk.q) kv("q_index", format_double(*pk.q));
  }
  if (c.certificate) {
    const auto& ck = *c.certificate;
    os << "\n[certificate]\n";
    kv("T_values_time", format_list(ck.Tvalues));
    if (ck.R) kv("R_length", format_double(*ck.R));
    kv("xiSharpness", format_double(ck.xiSharpness));
    kv("etaSharpness", format_double(ck.etaSharpness));
  }
  if (c.sweep) {
    const auto& sw = *c.sweep;
    os << "\n[sweep]\n";
    kv("p_values", format_list(sw.pValues));
    kv("sigma_values", format_list(sw.sigmaValues));
    kv("scales", format_list(sw.scales));
    kv("Tend_time", format_double(sw.Tend));
    kv("horizonMax_time", format_double(sw.horizonMax));
    kv("escalation", format_double(sw.escalation));
    if (!sw.probeSigmas.empty()) kv("probe_sigma_values", format_list(sw.probeSigmas));
  }
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

/**
 * Samples a data profile. `seed` (a snapshot given on the command line)
 * replaces the shape of any non-zero, non-constant profile; the amplitude
 * still multiplies it.
 */
inline Field build_data(const Grid& g, const DataSpec& d, const std::optional<Field>& seed = {}) {
  if (d.kind == "zero") return Field::zero(g);
  if (d.kind == "constant") return Field::constant(g, d.amplitude);
  if (seed) {
    if (!(seed->grid() == g)) throw ConfigError("seed profile is on a different grid");
    return seed->scaled(d.amplitude);
  }
  if (d.kind == "file") {
    std::ifstream is(d.file, std::ios::binary);
    if (!is) throw ConfigError("cannot read snapshot '" + d.file + "'");
    Field f = read_snapshot(is);
    if (!(f.grid() == g)) throw ConfigError("snapshot '" + d.file + "' is on a different grid");
    return f.scaled(d.amplitude);
  }
  const BumpKind kind = d.kind == "compact" ? BumpKind::CompactBump : BumpKind::Gaussian;
  return make_bump(g, kind, d.center, d.scale, d.amplitude).field;
}

/// 64-bit FNV-1a over the little-endian bytes of the samples.
inline std::uint64_t fingerprint(const Field& f) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : f.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline constexpr const char* kToolVersion = "critex 0.1.0";

struct RunManifest {
  std::string command;
  std::string timestamp;
  std::string u0Hash;
  std::string wHash;
  RunConfig config;
};

/// A manifest is a config file with a leading [manifest] section, so it can be
/// fed straight back to the same command.
inline void write_manifest(std::ostream& os, const RunManifest& m) {
  const auto& g = m.config.grid;
  os << "[manifest]\n";
  os << "command = " << m.command << '\n';
  os << "tool_version = " << kToolVersion << '\n';
  os << "grid = N=" << g.N << " L=" << format_double(g.L) << " n=" << g.n << '\n';
  if (!m.u0Hash.empty()) os << "u0_fnv1a = " << m.u0Hash << '\n';
  if (!m.wHash.empty()) os << "w_fnv1a = " << m.wHash << '\n';
  os << "timestamp = " << m.timestamp << "\n\n";
  write_config(os, m.config);
}

}  // namespace critex
