#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlwm/config.hpp"
#include "nlwm/experiments.hpp"

namespace nlwm {

inline constexpr int kReportSchemaVersion = 1;

/// Raised when report files cannot be written.
class ReportIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json to_json(const ExperimentReport& rep, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["name"] = rep.name;
  j["anchor"] = rep.anchor;
  j["config_hash"] = config_hash(cfg);
  j["passed"] = rep.passed();
  j["runtime_seconds"] = rep.runtime_seconds;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.params) params[k] = v;
  j["params"] = params;
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
  for (const auto& v : rep.verdicts) {
    verdicts.push_back({{"label", v.label},
                        {"pass", v.pass},
                        {"measured", v.measured},
                        {"tolerance", v.tolerance},
                        {"metric", v.metric}});
  }
  j["verdicts"] = verdicts;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::array();
  for (const auto& s : rep.metrics) {
    metrics.push_back({{"label", s.label}, {"x", s.x}, {"value", s.y}});
  }
  j["metrics"] = metrics;
  return j;
}

/// First line of every CSV file.
inline std::string csv_metadata_line(const std::string& experiment, const std::string& hash) {
  return "# nlw-morawetz " + experiment + " " + hash;
}

inline constexpr const char* kCsvHeader = "x,value";

/// CSV text for one series: metadata line, header, then every `stride`-th row.
inline std::string csv_text(const Series& s, const std::string& experiment,
                            const std::string& hash, std::size_t stride = 1) {
  std::string out = csv_metadata_line(experiment, hash) + "\n" + kCsvHeader + "\n";
  char buf[64];
  for (std::size_t i = 0; i < s.x.size(); i += std::max<std::size_t>(stride, 1)) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.x[i], s.y[i]);
    out += buf;
  }
  return out;
}

/// File-name-safe form of a metric label.
inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '=' || c == '+' || c == '.';
    out += ok ? c : '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "metric" : out;
}

struct WrittenReport {
  std::filesystem::path json;
  std::vector<std::filesystem::path> csv;
};

inline std::string report_stem(const RunConfig& cfg) {
  return cfg.experiment + "-" + config_hash(cfg);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportIoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw ReportIoError("write failed for " + path.string());
}

/// Writes <out_dir>/<experiment>-<hash>.report.json and one CSV per metric,
/// <out_dir>/<experiment>-<hash>.<label>.csv.
inline WrittenReport write_report(const ExperimentReport& rep, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ReportIoError("cannot create output directory " + dir.string() +
                        (ec ? ": " + ec.message() : ""));
  }
  const std::string stem = report_stem(cfg);
  const std::string hash = config_hash(cfg);
  WrittenReport w;
  w.json = dir / (stem + ".report.json");
  write_file(w.json, to_json(rep, cfg).dump(2) + "\n");
  std::set<std::string> used;
  for (const auto& s : rep.metrics) {
    std::string name = sanitize_label(s.label);
    for (int k = 2; used.count(name); ++k) name = sanitize_label(s.label) + "-" + std::to_string(k);
    used.insert(name);
    const fs::path p = dir / (stem + "." + name + ".csv");
    write_file(p, csv_text(s, cfg.experiment, hash, static_cast<std::size_t>(cfg.stride)));
    w.csv.push_back(p);
  }
  return w;
}

}  // namespace nlwm
