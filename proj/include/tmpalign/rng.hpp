#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace tmpalign {

namespace detail {

// SplitMix64 finalizer (Stafford mix13). Full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_u64(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ v);
}

// Uniform double in [0, 1), 53 mantissa bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Counter-based generator. Every sample is a pure function of
/// (seed, frame, pixel, path, index), so evaluation order and thread count
/// cannot change the stream and any draw can be replayed in isolation.
class RngStream {
 public:
  enum class Path : std::uint64_t { Obj = 1, Cam = 2, Init = 3, Scratch = 4, Scene = 5 };

  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::int64_t frame, std::uint64_t pixel, Path path,
                     std::uint64_t index, std::uint64_t lane) const {
    std::uint64_t h = detail::mix64(seed_);
    h = detail::hash_u64(h, static_cast<std::uint64_t>(frame));
    h = detail::hash_u64(h, pixel);
    h = detail::hash_u64(h, static_cast<std::uint64_t>(path));
    h = detail::hash_u64(h, index);
    h = detail::hash_u64(h, lane);
    return h;
  }

  /// Independent standard-normal pair via Box-Muller.
  std::pair<double, double> normal2(std::int64_t frame, std::uint64_t pixel, Path path,
                                    std::uint64_t index) const {
    const double u1 = 1.0 - detail::to_unit(bits(frame, pixel, path, index, 0));  // (0, 1]
    const double u2 = detail::to_unit(bits(frame, pixel, path, index, 1));        // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Uniform pair in [0, 1) x [0, 1).
  std::pair<double, double> uniform2(std::int64_t frame, std::uint64_t pixel, Path path,
                                     std::uint64_t index) const {
    return {detail::to_unit(bits(frame, pixel, path, index, 0)),
            detail::to_unit(bits(frame, pixel, path, index, 1))};
  }

 private:
  std::uint64_t seed_ = 0;
};

}  // namespace tmpalign
