#pragma once

#include <cstdint>

namespace coinvest {

namespace detail {

// SplitMix64 finalizer (Vigna's fixed-increment variant of Steele et al.).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

// Counter-based stream keyed by (seed, episode, substream). Draws are a pure
// function of the key and the draw index, so batches reproduce bit-exactly
// under any parallel schedule and any worker count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t episode, std::uint64_t substream)
      : key_(detail::mix64(
            detail::mix64(detail::mix64(seed + detail::kGamma) +
                          (episode + 1) * detail::kGamma) +
            (substream + 1) * 0xD1B54A32D192ED03ULL)) {}

  std::uint64_t next_u64() {
    counter_ += detail::kGamma;
    return detail::mix64(key_ + counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Substream roles used by the simulator.
enum class StreamRole : std::uint64_t {
  PlayerOneSignals = 0,
  PlayerTwoSignals = 1,
  Nature = 2,
};

}  // namespace coinvest
