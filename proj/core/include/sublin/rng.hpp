#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace sublin {

// Identifier of the pseudo-random pipeline, stored in artifacts so a run can
// be reproduced bit-for-bit: per-path mt19937_64 streams keyed by
// splitmix64(seed, path index), normals via an explicit Box-Muller transform
// (std::normal_distribution is implementation-defined and not portable).
inline constexpr const char* kRngId = "mt19937_64/splitmix64-keying/box-muller";

// splitmix64 step; mixes a seed and a stream index into an independent key.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t stream_key(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

// One deterministic random stream (one per path): sign flips and standard
// normals with explicit, platform-independent constructions.
class PathRng {
 public:
  explicit PathRng(uint64_t key) : engine_(key) {}

  // +1 or -1 with equal probability (top bit of the raw draw).
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

  // Uniform in (0, 1) (midpoint offset keeps both endpoints out).
  double uniform() { return (static_cast<double>(engine_()) + 0.5) * 0x1p-64; }

  // Standard normal via Box-Muller on two uniforms in (0, 1]; the spare value
  // is cached so consecutive calls consume draws at a fixed rate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // (raw + 1) / 2^64 lies in (0, 1], so the log argument never vanishes.
    const double u1 = (static_cast<double>(engine_()) + 1.0) * 0x1p-64;
    const double u2 = static_cast<double>(engine_()) * 0x1p-64;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sublin
