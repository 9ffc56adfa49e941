#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrba/cli/config.hpp"
#include "vrba/diag/record.hpp"

namespace vrba::cli {

struct ReportRow {
  std::string run;    // directory name
  std::string group;  // problem / mode / potential
  std::uint64_t seed = 0;
  std::string status;
  double rel_l2 = diag::kNaN;
  double variance = diag::kNaN;
};

struct GroupStats {
  std::string group;
  std::size_t n = 0;
  double median = diag::kNaN;
  double q1 = diag::kNaN;
  double q3 = diag::kNaN;
};

/// Linear-interpolation quantile of a sample (the usual "type 7" definition).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return diag::kNaN;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

inline double json_number(const json& j, const char* key) {
  return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : diag::kNaN;
}

inline ReportRow read_run(const std::filesystem::path& dir) {
  const json s = load_json_file((dir / "summary.json").string());
  ReportRow r;
  r.run = dir.filename().string();
  if (r.run.empty()) r.run = dir.parent_path().filename().string();
  r.seed = s.value("seed", std::uint64_t{0});
  r.status = s.value("status", std::string("unknown"));
  r.group = s.value("problem", std::string("?")) + "/" + s.value("mode", std::string("?")) + "/" +
            s.value("potential", std::string("?"));
  r.rel_l2 = json_number(s, "rel_l2");
  r.variance = json_number(s, "variance");
  return r;
}

inline std::vector<ReportRow> collect_runs(const std::vector<std::string>& dirs) {
  std::vector<ReportRow> rows;
  rows.reserve(dirs.size());
  for (const auto& d : dirs) rows.push_back(read_run(d));
  return rows;
}

/// Median and interquartile range of rel. L2 per group, over finite values only.
inline std::vector<GroupStats> group_stats(const std::vector<ReportRow>& rows) {
  std::map<std::string, std::vector<double>> by;
  for (const auto& r : rows) {
    auto& v = by[r.group];
    if (std::isfinite(r.rel_l2)) v.push_back(r.rel_l2);
  }
  std::vector<GroupStats> out;
  for (const auto& [g, v] : by) out.push_back({g, v.size(), median(v), quantile(v, 0.25), quantile(v, 0.75)});
  return out;
}

inline std::string sci(double v) {
  if (!std::isfinite(v)) return diag::format_double(v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

/// Markdown table: one row per run, then a median and an IQR row per group.
inline std::string format_report(const std::vector<ReportRow>& rows) {
  std::string s = "| run | group | seed | status | rel. L2 | variance |\n|---|---|---|---|---|---|\n";
  auto sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ReportRow& a, const ReportRow& b) {
    return a.group != b.group ? a.group < b.group : a.seed < b.seed;
  });
  for (const auto& r : sorted) {
    s += "| " + r.run + " | " + r.group + " | " + std::to_string(r.seed) + " | " + r.status + " | " + sci(r.rel_l2) +
         " | " + sci(r.variance) + " |\n";
  }
  for (const auto& g : group_stats(rows)) {
    s += "| median | " + g.group + " | n=" + std::to_string(g.n) + " |  | " + sci(g.median) + " |  |\n";
    s += "| IQR | " + g.group + " |  |  | " + sci(g.q1) + " - " + sci(g.q3) + " |  |\n";
  }
  return s;
}

}  // namespace vrba::cli
