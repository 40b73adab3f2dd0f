#ifndef CISNET_RNG_HPP
#define CISNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string>

#include "cisnet/common.hpp"

namespace cisnet {

/// Counter-based pseudo-random stream.
///
/// Every draw is a pure function of (key, counter), so independent streams can
/// be split off a single master seed by tag without any shared state, and a
/// stream can be checkpointed by storing its counter. The mixer is the
/// splitmix64 finalizer over key + counter * golden-ratio increment.
class Rng {
public:
  explicit Rng(uint64_t key, uint64_t counter = 0) : key_(key), counter_(counter) {}

  /// Stream keyed by (master seed, tag). Distinct tags give independent streams.
  static Rng stream(uint64_t master_seed, const std::string& tag) {
    return Rng(mix64(master_seed ^ fnv1a64(tag)));
  }
  static Rng stream(uint64_t master_seed, const std::string& tag, uint64_t index) {
    return Rng(mix64(mix64(master_seed ^ fnv1a64(tag)) + index));
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

  uint64_t next_u64() { return at(counter_++); }

  /// Draw at an explicit counter without advancing the stream. Lets callers
  /// index draws by content (e.g. pixel id) for order-independent determinism.
  uint64_t at(uint64_t counter) const {
    return mix64(key_ + counter * 0x9e3779b97f4a7c15ull);
  }

  /// Uniform in the open interval (0, 1).
  double uniform() { return to_unit(next_u64()); }
  double uniform_at(uint64_t counter) const { return to_unit(at(counter)); }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

private:
  static uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static double to_unit(uint64_t x) {
    // 53-bit mantissa, offset by half a step: never exactly 0 or 1.
    return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  uint64_t key_;
  uint64_t counter_;
};

}  // namespace cisnet

#endif
