#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace vrba::diag {

/// Descriptive split of an SNR trace into fitting / transition / diffusion phases.
struct Stages {
  long fitting_end = -1;     // iteration where the smoothed log-SNR first drops one e-fold below its start
  long diffusion_start = -1; // iteration of the smoothed minimum after the drop
};

/// Moving-average smoothing of log(SNR) with half-width `w`, then two change points.
/// Infinite or non-positive SNR values are skipped.
inline Stages detect_stages(const std::vector<long>& iters, const std::vector<double>& snr, int w = 2) {
  std::vector<long> it;
  std::vector<double> ls;
  for (std::size_t i = 0; i < snr.size() && i < iters.size(); ++i) {
    if (std::isfinite(snr[i]) && snr[i] > 0.0) {
      it.push_back(iters[i]);
      ls.push_back(std::log(snr[i]));
    }
  }
  Stages s;
  if (ls.size() < 3) return s;
  const auto n = static_cast<long>(ls.size());
  std::vector<double> sm(ls.size());
  for (long i = 0; i < n; ++i) {
    const long a = std::max(0L, i - w), b = std::min(n - 1, i + w);
    double acc = 0.0;
    for (long j = a; j <= b; ++j) acc += ls[static_cast<std::size_t>(j)];
    sm[static_cast<std::size_t>(i)] = acc / static_cast<double>(b - a + 1);
  }
  long drop = -1;
  for (long i = 1; i < n; ++i) {
    if (sm[static_cast<std::size_t>(i)] < sm[0] - 1.0) {
      drop = i;
      break;
    }
  }
  if (drop < 0) return s;
  s.fitting_end = it[static_cast<std::size_t>(drop)];
  const auto mn = std::min_element(sm.begin() + drop, sm.end());
  s.diffusion_start = it[static_cast<std::size_t>(mn - sm.begin())];
  return s;
}

}  // namespace vrba::diag
