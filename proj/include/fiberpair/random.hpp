#pragma once

// Counter-based random streams.
//
// Generator: Philox4x64-10 (Salmon, Moraes, Dror, Shaw 2011), identical to
// numpy.random.Philox. A stream is keyed by (seed, stream_index) and walks a
// 256-bit counter, so any gate block can be regenerated independently of the
// order in which blocks are processed. Algorithm version is pinned by
// kRandomStreamVersion; changing it changes every simulated count.

#include <array>
#include <cstdint>
#include <limits>

namespace fiberpair {

inline constexpr const char* kRandomStreamVersion = "philox4x64-10/v1";

namespace detail {

using Philox4x64Block = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

/// The Philox4x64 bijection with 10 rounds.
inline Philox4x64Block philox4x64_10(Philox4x64Block ctr, Philox4x64Key key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo64(kMul0, ctr[0], hi0, lo0);
    mulhilo64(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

}  // namespace detail

/// Reproducible stream of 64-bit words keyed by (seed, stream_index).
///
/// Satisfies UniformRandomBitGenerator. Each instance owns its position, so
/// concurrent workers need one stream each.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_index)
      : seed_(seed), stream_index_(stream_index) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  void refill() {
    ++counter_[0];
    if (counter_[0] == 0) ++counter_[1];
    buffer_ = detail::philox4x64_10(counter_, {seed_, stream_index_});
    used_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_index_;
  detail::Philox4x64Block counter_{};
  detail::Philox4x64Block buffer_{};
  int used_ = 4;
};

/// Stream index for block `block` of independent task `task`.
/// Blocks below 2^32 per task keep indices unique.
constexpr std::uint64_t derived_stream_index(std::uint64_t task, std::uint64_t block) noexcept {
  return (task << 32) ^ block;
}

}  // namespace fiberpair
