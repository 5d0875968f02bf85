#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace htsgd {

/// A reproducible random stream: the pair (seed, stream_id) fully determines
/// the variate sequence. Streams that differ only in stream_id walk disjoint
/// regions of the counter space, so they never overlap.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Child stream for replicate `index`. Keeps the parent id in the high
  /// 32 bits, so parents are expected to use ids below 2^32.
  [[nodiscard]] RngStream replicate(std::uint32_t index) const {
    return {seed, (stream_id << 32) | index};
  }

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is split into a 64-bit block index and the 64-bit
/// stream id; the key is the seed. Satisfies UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  explicit PhiloxEngine(RngStream stream) : stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (cursor_ == 2) {
      refill();
    }
    const auto lo = static_cast<std::uint64_t>(buffer_[2 * cursor_]);
    const auto hi = static_cast<std::uint64_t>(buffer_[2 * cursor_ + 1]);
    ++cursor_;
    return (hi << 32) | lo;
  }

  [[nodiscard]] RngStream stream() const { return stream_; }

  /// One raw Philox4x32-10 evaluation; exposed for known-answer tests.
  static Block bijection(Block counter, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return counter;
  }

 private:
  void refill() {
    const Block counter = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                           static_cast<std::uint32_t>(stream_.stream_id),
                           static_cast<std::uint32_t>(stream_.stream_id >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(stream_.seed),
                                              static_cast<std::uint32_t>(stream_.seed >> 32)};
    buffer_ = bijection(counter, key);
    ++block_;
    cursor_ = 0;
  }

  RngStream stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int cursor_ = 2;
};

/// Uniform on the open interval (0, 1) with 53-bit resolution.
template <class Engine>
inline double uniform_open(Engine& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// Exp(1) by inversion; never returns 0 or infinity.
template <class Engine>
inline double standard_exponential(Engine& engine) {
  return -std::log(uniform_open(engine));
}

/// Standard normal via Box-Muller, one variate per call (no hidden cache, so
/// the consumed draw count is fixed per variate).
template <class Engine>
inline double standard_normal(Engine& engine) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double u1 = uniform_open(engine);
  const double u2 = uniform_open(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace htsgd
