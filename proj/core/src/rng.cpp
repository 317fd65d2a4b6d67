#include "bbm/rng.hpp"

namespace bbm {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

__extension__ typedef unsigned __int128 uint128;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) noexcept {
  const uint128 p = static_cast<uint128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed,
                     std::uint64_t stream_index) noexcept
    : key_{master_seed, 0}, counter_{0, 0, stream_index, 0} {}

RngStream::Block RngStream::philox(Block c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

void RngStream::refill() noexcept {
  // Block numbers start at 1, matching the reference implementations that
  // increment before generating.
  if (++counter_[0] == 0) ++counter_[1];
  buffer_ = philox(counter_, key_);
  pos_ = 0;
}

}  // namespace bbm
