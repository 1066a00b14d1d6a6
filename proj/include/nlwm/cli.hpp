#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nlwm/config.hpp"
#include "nlwm/experiments.hpp"
#include "nlwm/report.hpp"

namespace nlwm {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitIo = 3 };

struct CliOptions {
  std::string config_path;
  std::string experiment;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string sweep_path;
  bool list = false;
};

/// Thrown for command-line usage errors.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parses argv; --help output goes to `out` and yields std::nullopt.
inline std::optional<CliOptions> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CliOptions o;
  CLI::App app{"Radial critical NLW Morawetz/virial experiment runner", "nlw_lab"};
  app.add_option("--config", o.config_path, "Config file (key = value lines)");
  app.add_option("--experiment", o.experiment, "Experiment name (overrides the file)");
  app.add_option("--set", o.overrides, "Override key=value (repeatable)")->take_all();
  app.add_option("--out", o.out_dir, "Output directory (overrides out_dir)");
  app.add_option("--sweep", o.sweep_path, "File listing config paths, one per line");
  app.add_flag("--list", o.list, "Print the experiment registry");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (!o.sweep_path.empty() && !o.config_path.empty()) {
    throw UsageError("--sweep and --config are mutually exclusive");
  }
  return o;
}

/// Config from file (if any), then --experiment, --out and --set in order, validated.
inline RunConfig resolve_config(const CliOptions& o, const std::string& config_path) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  if (!o.experiment.empty()) cfg.experiment = o.experiment;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  for (const auto& kv : o.overrides) apply_override(cfg, kv);
  validate_config(cfg);
  return cfg;
}

/// Runs one validated config and writes its report; returns the exit code.
inline int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ExperimentReport rep;
  try {
    rep = run(cfg);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  WrittenReport files;
  try {
    files = write_report(rep, cfg);
  } catch (const ReportIoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  std::ostringstream s;
  for (const auto& v : rep.verdicts) {
    s << (v.pass ? "PASS " : "FAIL ") << v.label << "  measured=" << v.measured
      << " tolerance=" << v.tolerance << "\n";
  }
  s << rep.name << ": " << (rep.passed() ? "pass" : "FAIL") << " (" << rep.verdicts.size()
    << " verdicts, " << rep.runtime_seconds << " s) -> " << files.json.string() << "\n";
  out << s.str();
  return rep.passed() ? kExitPass : kExitFail;
}

/// Config paths listed in a sweep file; relative paths resolve against its directory.
inline std::vector<std::string> read_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot read sweep file " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<std::string> paths;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::filesystem::path p(line);
    paths.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  return paths;
}

/// Worker count for sweeps: NLW_THREADS if set, else hardware concurrency.
inline unsigned sweep_threads(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NLW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Worst exit code: I/O beats usage beats verdict failure.
inline int combine_exit(int a, int b) {
  auto rank = [](int c) { return c == kExitIo ? 3 : c == kExitUsage ? 2 : c == kExitFail ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

inline int run_sweep(const CliOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> paths;
  try {
    paths = read_sweep(o.sweep_path);
  } catch (const ConfigIoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  std::vector<int> codes(paths.size(), kExitPass);
  std::vector<std::string> outs(paths.size()), errs(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      std::ostringstream so, se;
      try {
        codes[i] = execute(resolve_config(o, paths[i]), so, se);
      } catch (const ConfigIoError& e) {
        se << "error: " << e.what() << "\n";
        codes[i] = kExitIo;
      } catch (const std::invalid_argument& e) {
        se << "error: " << paths[i] << ": " << e.what() << "\n";
        codes[i] = kExitUsage;
      }
      outs[i] = so.str();
      errs[i] = se.str();
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = sweep_threads(paths.size());
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  int code = kExitPass;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    out << outs[i];
    err << errs[i];
    code = combine_exit(code, codes[i]);
  }
  return code;
}

/// Entry point shared by the binary and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<CliOptions> opts;
  try {
    opts = parse_args(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!opts) return kExitPass;
  if (opts->list) {
    for (const auto& name : experiment_names()) out << name << "\n";
    return kExitPass;
  }
  if (!opts->sweep_path.empty()) return run_sweep(*opts, out, err);
  RunConfig cfg;
  try {
    cfg = resolve_config(*opts, opts->config_path);
  } catch (const ConfigIoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  return execute(cfg, out, err);
}

}  // namespace nlwm
