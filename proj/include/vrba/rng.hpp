#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vrba {

/// Seeded generator that hands out independent, reproducible streams per consumer.
///
/// Every stream is derived from (parent stream, consumer tag, index) through std::seed_seq,
/// so the sequence a consumer sees does not depend on how many other consumers exist
/// or in which order they draw.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : seed_(seed), stream_(seed), engine_(make_engine(seed, 0, 0)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  engine_type& engine() noexcept { return engine_; }

  /// Independent stream for `tag` (and an optional index, e.g. a function id).
  Rng split(std::string_view tag, std::uint64_t index = 0) const {
    Rng child(seed_);
    child.stream_ = mix(mix(stream_ ^ hash(tag)) + index);
    child.engine_ = make_engine(stream_, hash(tag), index);
    return child;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

 private:
  static std::uint64_t hash(std::string_view s) {
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static engine_type make_engine(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                         static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return engine_type(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace vrba
