#pragma once
// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every
// (key, counter) pair maps to four independent 32-bit words, so parallel
// streams are reproducible regardless of scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace critdrift {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Sequential normal/uniform draws from one Philox stream: key = seed,
/// counter = (block index, stream id).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  /// Uniform on (0, 1) with 53-bit resolution (never exactly 0 or 1).
  double uniform() {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  /// Standard normal by Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    const PhiloxCounter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), stream_lo_,
                            stream_hi_};
    ++block_;
    const PhiloxCounter out = philox4x32_10(ctr, key_);
    // Two doubles per block, stored so they are consumed in draw order.
    buffer_[1] = to_unit(out[0], out[1]);
    buffer_[0] = to_unit(out[2], out[3]);
    buffered_ = 2;
  }

  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t block_ = 0;
  double buffer_[2] = {0.0, 0.0};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace critdrift
