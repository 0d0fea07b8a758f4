#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace ppdtd {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Stateless: maps (counter, key) to four 32-bit words.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// SplitMix64 finalizer; used to derive independent stream identifiers.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based random stream.
///
/// A stream is identified by (seed, stream id); the n-th draw is a pure
/// function of those two values and n, so results never depend on platform
/// or on the order in which sibling streams are consumed. All sampling
/// helpers are implemented here rather than through <random> distributions,
/// whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  /// Independent child stream. Does not advance this stream.
  [[nodiscard]] Rng split(std::uint64_t stream_id) const noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n). Unbiased (rejection). n must be > 0.
  std::size_t uniform_index(std::size_t n) noexcept;
  bool bernoulli(double p) noexcept;
  double normal() noexcept;
  /// Inverse-CDF draw from a (not necessarily normalized) weight vector.
  std::size_t categorical(std::span<const double> weights) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  /// Number of 32-bit words consumed so far.
  std::uint64_t position() const noexcept { return block_ == 0 ? 0 : (block_ - 1) * 4 + used_; }

  friend bool operator==(const Rng& a, const Rng& b) noexcept {
    return a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.position() == b.position();
  }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  unsigned used_ = 4;
};

}  // namespace ppdtd
