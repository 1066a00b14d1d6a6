#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlwm {

/// Registered experiment names, in registry order.
inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "energy_conservation", "morawetz_identity",   "localized_limits",
      "equipartition",       "free_asymptotics",    "flux_pairing_limits",
      "l2star_decay",        "no_rate_scaling",     "kenig_merle_dichotomy",
      "scattering_profile",  "convergence_study",
  };
  return names;
}

inline std::string registry_listing() {
  std::string s;
  for (const auto& n : experiment_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

/// Error in a configuration; `key` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  std::string experiment = "energy_conservation";
  std::string data = "gaussian";
  std::string mode = "displacement";
  double amplitude = 0.5;
  double width = 1.5;
  double rho = 1.0;
  double alpha = 1.0;
  double lambda = 0.0;
  int n_dim = 3;
  double dr = 0.02;
  double dt = 0.01;
  double r_max = 150.0;
  double t_max = 50.0;
  double boundary_margin = 5.0;
  std::vector<std::string> weights = {"bracket", "cutoff"};
  int k = 4;
  double R = 10.0;
  double smoothing = 1e-3;
  std::vector<double> radii = {5.0, 10.0, 20.0, 40.0};
  double t_margin = 20.0;
  std::string out_dir = "out";
  int stride = 1;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& key, std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  if (!v.empty() && (v.front() == '"' || v.back() == '"')) {
    throw ConfigError(key, "unbalanced quotes in '" + v + "'");
  }
  return v;
}

inline double parse_real(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(b, &end);
  if (v.empty() || end != b + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ConfigError(key, "expected a finite real, got '" + v + "'");
  }
  return x;
}

inline int parse_int(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(b, &end, 10);
  if (v.empty() || end != b + v.size() || errno == ERANGE || x < INT32_MIN || x > INT32_MAX) {
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  }
  return static_cast<int>(x);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, Field>& fields() {
  auto real = [](double RunConfig::*m) {
    return Field{[m](RunConfig& c, const std::string& v) { c.*m = parse_real("", v); },
                 [m](const RunConfig& c) { return fmt_real(c.*m); }};
  };
  auto text = [](std::string RunConfig::*m) {
    return Field{[m](RunConfig& c, const std::string& v) { c.*m = v; },
                 [m](const RunConfig& c) { return c.*m; }};
  };
  static const std::map<std::string, Field> f = {
      {"experiment", text(&RunConfig::experiment)},
      {"data", text(&RunConfig::data)},
      {"mode", text(&RunConfig::mode)},
      {"amplitude", real(&RunConfig::amplitude)},
      {"width", real(&RunConfig::width)},
      {"rho", real(&RunConfig::rho)},
      {"alpha", real(&RunConfig::alpha)},
      {"lambda", real(&RunConfig::lambda)},
      {"n_dim", Field{[](RunConfig& c, const std::string& v) { c.n_dim = parse_int("", v); },
                      [](const RunConfig& c) { return std::to_string(c.n_dim); }}},
      {"dr", real(&RunConfig::dr)},
      {"dt", real(&RunConfig::dt)},
      {"r_max", real(&RunConfig::r_max)},
      {"t_max", real(&RunConfig::t_max)},
      {"boundary_margin", real(&RunConfig::boundary_margin)},
      {"weights",
       Field{[](RunConfig& c, const std::string& v) { c.weights = split_list(v); },
             [](const RunConfig& c) {
               std::string s;
               for (const auto& w : c.weights) s += (s.empty() ? "" : ", ") + w;
               return s;
             }}},
      {"k", Field{[](RunConfig& c, const std::string& v) { c.k = parse_int("", v); },
                  [](const RunConfig& c) { return std::to_string(c.k); }}},
      {"R", real(&RunConfig::R)},
      {"smoothing", real(&RunConfig::smoothing)},
      {"radii",
       Field{[](RunConfig& c, const std::string& v) {
               c.radii.clear();
               for (const auto& x : split_list(v)) c.radii.push_back(parse_real("", x));
             },
             [](const RunConfig& c) {
               std::string s;
               for (double x : c.radii) s += (s.empty() ? "" : ", ") + fmt_real(x);
               return s;
             }}},
      {"t_margin", real(&RunConfig::t_margin)},
      {"out_dir", text(&RunConfig::out_dir)},
      {"stride", Field{[](RunConfig& c, const std::string& v) { c.stride = parse_int("", v); },
                       [](const RunConfig& c) { return std::to_string(c.stride); }}},
  };
  return f;
}

}  // namespace detail

/// Keys in canonical order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "experiment", "data",  "mode",   "amplitude", "width",   "rho",
      "alpha",      "lambda", "n_dim", "dr",        "dt",      "r_max",
      "t_max",      "boundary_margin", "weights",   "k",       "R",
      "smoothing",  "radii", "t_margin", "out_dir", "stride",
  };
  return keys;
}

/// Applies one key/value pair; unknown keys and malformed values throw ConfigError.
inline void set_key(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const auto& f = detail::fields();
  const auto it = f.find(key);
  if (it == f.end()) throw ConfigError(key, "unknown key");
  const std::string v = detail::unquote(key, detail::trim(raw));
  try {
    it->second.set(cfg, v);
  } catch (const ConfigError& e) {
    throw ConfigError(key, std::string(e.what()).substr(2));
  }
}

inline std::string get_key(const RunConfig& cfg, const std::string& key) {
  const auto& f = detail::fields();
  const auto it = f.find(key);
  if (it == f.end()) throw ConfigError(key, "unknown key");
  return it->second.get(cfg);
}

/// Parses "key=value" (as given to --set).
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, "expected key=value");
  }
  set_key(cfg, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Parses the text grammar: one `key = value` per line, `#` starts a comment,
/// blank lines ignored, repeated keys rejected.
inline RunConfig parse_config_text(const std::string& text, RunConfig cfg = {}) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    if (seen.count(key)) {
      throw ConfigError(key, "repeated on line " + std::to_string(lineno) + " (first on line " +
                                 std::to_string(seen[key]) + ")");
    }
    seen[key] = lineno;
    set_key(cfg, key, line.substr(eq + 1));
  }
  return cfg;
}

/// Thrown for unreadable configuration files (I/O, not syntax).
class ConfigIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline RunConfig load_config(const std::string& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(cfg));
}

/// Canonical text form: every key in canonical order, reals as %.17g, so
/// parse_config_text(serialize(c)) == c.
inline std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& key : config_keys()) {
    std::string v = get_key(cfg, key);
    const bool needs_quotes = v.empty() || v.find('#') != std::string::npos ||
                              v.front() == ' ' || v.back() == ' ';
    if (needs_quotes) v = "\"" + v + "\"";
    out += key + " = " + v + "\n";
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Content hash of the canonical form, excluding out_dir (outputs of the same run
/// written to different directories share a hash).
inline std::string config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.out_dir.clear();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize(c))));
  return buf;
}

inline double support_of(const RunConfig& cfg) {
  if (cfg.data == "bump") return cfg.rho;
  return std::numeric_limits<double>::infinity();
}

/// Semantic checks: registry name, CFL, domain, parameter ranges.
inline void validate_config(const RunConfig& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    throw ConfigError("experiment", "unknown experiment '" + cfg.experiment +
                                        "'; registered: " + registry_listing());
  }
  if (cfg.data != "gaussian" && cfg.data != "bump" && cfg.data != "ground_state") {
    throw ConfigError("data", "expected gaussian|bump|ground_state, got '" + cfg.data + "'");
  }
  if (cfg.mode != "displacement" && cfg.mode != "velocity") {
    throw ConfigError("mode", "expected displacement|velocity, got '" + cfg.mode + "'");
  }
  if (cfg.n_dim < 3) throw ConfigError("n_dim", "must be >= 3");
  if (!(cfg.dr > 0.0)) throw ConfigError("dr", "must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (cfg.dt / cfg.dr > 0.9) {
    throw ConfigError("dt", "CFL ratio dt/dr = " + detail::fmt_real(cfg.dt / cfg.dr) +
                                " exceeds the bound 0.9");
  }
  if (!(cfg.t_max >= 0.0)) throw ConfigError("t_max", "must be non-negative");
  if (!(cfg.r_max >= 10.0 * cfg.dr)) throw ConfigError("r_max", "must be at least 10 dr");
  if (!(cfg.width > 0.0)) throw ConfigError("width", "must be positive");
  if (!(cfg.rho > 0.0)) throw ConfigError("rho", "must be positive");
  if (cfg.k < 1) throw ConfigError("k", "must be >= 1");
  if (!(cfg.R > 0.0)) throw ConfigError("R", "must be positive");
  if (!(cfg.smoothing > 0.0)) throw ConfigError("smoothing", "must be positive");
  if (!(cfg.boundary_margin >= 0.0)) throw ConfigError("boundary_margin", "must be non-negative");
  if (!(cfg.t_margin >= 0.0)) throw ConfigError("t_margin", "must be non-negative");
  if (cfg.stride < 1) throw ConfigError("stride", "must be >= 1");
  if (cfg.radii.empty()) throw ConfigError("radii", "must list at least one radius");
  for (double R : cfg.radii) {
    if (!(R > 0.0) || R > cfg.r_max) throw ConfigError("radii", "each radius must lie in (0, r_max]");
  }
  static const std::vector<std::string> known = {"bracket", "cutoff", "smoothed_abs", "abs",
                                                 "constant"};
  if (cfg.weights.empty()) throw ConfigError("weights", "must list at least one weight");
  for (const auto& w : cfg.weights) {
    if (std::find(known.begin(), known.end(), w) == known.end()) {
      throw ConfigError("weights", "unknown weight '" + w +
                                       "' (bracket|cutoff|smoothed_abs|abs|constant)");
    }
  }
  const double support = support_of(cfg);
  if (std::isfinite(support) && cfg.r_max < support + cfg.t_max + cfg.boundary_margin) {
    throw ConfigError("r_max", "must be >= support + t_max + boundary_margin = " +
                                   detail::fmt_real(support + cfg.t_max + cfg.boundary_margin));
  }
}

}  // namespace nlwm
