#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace crt {

__extension__ using uint128_t = unsigned __int128;

/// Seeded xoshiro256** stream. Substreams are keyed by a path of integers
/// hashed through splitmix64, so (master seed, task id) always yields the
/// same stream no matter which thread runs the task.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  /// Stream for the task at `path` below `master`.
  static RandomStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);

  /// Child stream keyed by `index`; does not advance this stream.
  RandomStream substream(std::uint64_t index) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    uint128_t m = static_cast<uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<uint128_t>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t seed_key() const noexcept { return key_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t key_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace crt
