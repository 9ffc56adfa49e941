#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "vrba/errors.hpp"

namespace vrba::diag {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One logged row of a training run. Inactive quantities hold NaN.
struct RunRecord {
  long iter = 0;
  double loss_E = kNaN;
  double loss_B = kNaN;
  double loss_D = kNaN;
  double rel_l2 = kNaN;
  double l_inf = kNaN;
  double variance = kNaN;
  double snr = kNaN;
  double epsilon = kNaN;
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader = "iter,loss_E,loss_B,loss_D,rel_l2,l_inf,variance,snr,epsilon,wall_ms";

/// %.17g with literal inf / -inf / nan so logs round-trip and compare byte for byte.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_row(const RunRecord& r) {
  std::string s = std::to_string(r.iter);
  for (double v : {r.loss_E, r.loss_B, r.loss_D, r.rel_l2, r.l_inf, r.variance, r.snr, r.epsilon, r.wall_ms}) {
    s += ',';
    s += format_double(v);
  }
  return s;
}

class CsvLog {
 public:
  CsvLog() = default;
  explicit CsvLog(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open log file: " + path);
    out_ << kCsvHeader << '\n';
  }

  void write(const RunRecord& r) {
    if (out_.is_open()) out_ << csv_row(r) << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

}  // namespace vrba::diag
