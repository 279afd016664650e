#pragma once

#include <cmath>
#include <cstdint>

namespace scorefusion {

/// Counter-based splittable random stream (SplitMix64 core).
///
/// Every stochastic operation in this library takes an explicit stream; there
/// is no global RNG. Substreams are derived purely from the parent's identity,
/// so disjoint substreams can be consumed concurrently and the draw sequence of
/// any stream is independent of evaluation order elsewhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : base_(mix(seed ^ 0x5bf0f2b3a1c4e8d6ULL)), state_(base_) {}

  /// Independent child stream; the parent is not advanced.
  RngStream substream(std::uint64_t index) const {
    return RngStream(mix(base_ + (2 * index + 1) * 0xd2b74407b1ce6e93ULL), derived_tag{});
  }

  /// Stream identity, usable as a derived seed for external components.
  std::uint64_t id() const { return base_; }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform draw in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform draw in (0, 1]; safe as a log argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
  double gaussian() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double theta = 6.283185307179586476925286766559 * uniform();
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  struct derived_tag {};
  RngStream(std::uint64_t derived, derived_tag) : base_(derived), state_(derived) {}

  // Stafford mix13 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t base_;
  std::uint64_t state_;
};

}  // namespace scorefusion
