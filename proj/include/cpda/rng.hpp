#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace cpda {

/// splitmix64. Self-contained so sampled values are stable across standard
/// libraries and releases; each (seed, node, purpose) pair gets its own
/// stream, which keeps sample prefixes stable when other nodes are added and
/// when the per-node sample count grows.
class Rng {
 public:
  Rng(std::uint64_t seed, int node_index, const std::string& purpose) {
    state_ = mix(seed ^ 0x9e3779b97f4a7c15ULL);
    state_ = mix(state_ + static_cast<std::uint64_t>(node_index) * 0xbf58476d1ce4e5b9ULL);
    for (char c : purpose) state_ = mix(state_ + static_cast<unsigned char>(c));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// uniform in [0, 1)
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// uniform integer in [lo, hi] inclusive
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  /// Box-Muller; one value per call (the pair's second half is discarded so
  /// the stream position stays one-draw-per-sample)
  double next_gaussian(double mean, double stddev) {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
};

/// FNV-1a, used for content-addressed caching of analysis artifacts.
inline std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace cpda
