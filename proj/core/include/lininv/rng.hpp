#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace lininv::rng {

// Philox4x32-10 counter-based generator. Stateless: every draw is a pure
// function of (key, stream, counter), so replications are order-insensitive
// and safe to evaluate from any thread.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t stream,
                                            std::uint64_t counter) {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
  }
};

inline std::uint64_t bits64(std::uint64_t key, std::uint64_t stream, std::uint64_t counter) {
  auto b = Philox4x32::block(key, stream, counter);
  return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

// Uniform in the open interval (0,1); never returns 0 or 1 exactly.
inline double uniform01(std::uint64_t key, std::uint64_t stream, std::uint64_t counter) {
  return (static_cast<double>(bits64(key, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// One standard normal per counter (Box-Muller, second uniform from the same block).
inline double standard_normal(std::uint64_t key, std::uint64_t stream, std::uint64_t counter) {
  auto b = Philox4x32::block(key, stream, counter);
  std::uint64_t u = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  std::uint64_t v = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  double u1 = (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
  double u2 = (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform index in [0, n) via 128-bit multiply (bias < n / 2^64).
inline std::uint64_t uniform_index(std::uint64_t key, std::uint64_t stream, std::uint64_t counter,
                                   std::uint64_t n) {
  unsigned __int128 wide = static_cast<unsigned __int128>(bits64(key, stream, counter)) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

// Stream-id domains. Index draws, noise draws and derived seeds must never
// collide even under the same key.
inline constexpr std::uint64_t kNoiseStream = 0x4E4F495345ull;   // "NOISE"
inline constexpr std::uint64_t kDeriveStream = 0x5345454435ull;  // seed derivation
inline constexpr std::uint64_t kPerturbStream = 0x5045525455ull;

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return bits64(base, kDeriveStream, index);
}

}  // namespace lininv::rng
