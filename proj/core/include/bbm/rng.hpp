#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bbm {

/// Philox4x64-10 counter-based generator.
///
/// The 128-bit key holds the master seed; the counter's upper words hold
/// the stream index, the lower word the block number. Streams with
/// different indices therefore never overlap, and each stream has a period
/// of 2^64 blocks (2^66 outputs). Satisfies UniformRandomBitGenerator, so
/// it plugs into <random> and Boost.Random distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t master_seed() const noexcept { return key_[0]; }
  std::uint64_t stream_index() const noexcept { return counter_[2]; }

  /// Raw block function; exposed for known-answer tests.
  static Block philox(Block counter, Key key) noexcept;

 private:
  void refill() noexcept;

  Key key_;
  Block counter_;
  Block buffer_{};
  unsigned pos_ = 4;
};

/// Reserved stream-index ranges. Replication r of an ensemble uses stream r;
/// auxiliary consumers (independent oracles, self-tests) draw from disjoint
/// high ranges so enabling or disabling one never perturbs another.
namespace stream_range {
inline constexpr std::uint64_t kOracleBase = std::uint64_t{1} << 62;
inline constexpr std::uint64_t kSelfTestBase = std::uint64_t{1} << 63;
inline constexpr std::uint64_t kOracleStride = std::uint64_t{1} << 40;
}  // namespace stream_range

}  // namespace bbm
