#pragma once

#include <array>
#include <cstdint>

namespace ionaddr {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). The
/// output is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += kWeyl0;
        k[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  /// Two doubles in [0, 1) with 53 random bits each.
  constexpr std::array<double, 2> uniforms(Counter ctr) const {
    const Counter r = (*this)(ctr);
    const auto to_unit = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
      return static_cast<double>(bits) * 0x1.0p-53;
    };
    return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  Key key_;
};

}  // namespace ionaddr
