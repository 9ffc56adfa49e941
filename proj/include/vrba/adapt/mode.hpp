#pragma once

#include <string>

#include "vrba/errors.hpp"

namespace vrba::adapt {

enum class Mode { Baseline, Weighting, Sampling, Hybrid };

inline Mode mode_from_name(const std::string& s) {
  if (s == "baseline") return Mode::Baseline;
  if (s == "vrba_weighting" || s == "weighting") return Mode::Weighting;
  if (s == "vrba_sampling" || s == "sampling") return Mode::Sampling;
  if (s == "vrba_hybrid" || s == "hybrid") return Mode::Hybrid;
  throw ConfigError("unknown mode '" + s + "'");
}

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Baseline: return "baseline";
    case Mode::Weighting: return "vrba_weighting";
    case Mode::Sampling: return "vrba_sampling";
    case Mode::Hybrid: return "vrba_hybrid";
  }
  return "baseline";
}

}  // namespace vrba::adapt
