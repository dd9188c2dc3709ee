#ifndef MARGSIM_RNG_HPP_
#define MARGSIM_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

namespace margsim {

// Philox4x32-10 counter-based generator. A (key, stream) pair names an
// independent stream; replicate k of a run with seed s uses key s and
// stream k, so replicate outcomes do not depend on scheduling.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t key, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  result_type operator()() {
    if (index_ == 4) {
      buffer_ = bijection(counter_, key_);
      if (++counter_[0] == 0) ++counter_[1];
      index_ = 0;
    }
    return buffer_[index_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // The raw ten-round Philox4x32 function.
  static Block bijection(Block counter, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  Block counter_;
  Block buffer_{};
  int index_ = 4;
};

using Rng = Philox4x32;

}  // namespace margsim

#endif  // MARGSIM_RNG_HPP_
