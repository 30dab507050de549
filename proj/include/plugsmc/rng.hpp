#ifndef PLUGSMC_RNG_HPP
#define PLUGSMC_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace plugsmc {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key holds the master seed and the upper half of the 128-bit
/// counter holds a stream id, so every (seed, stream) pair is an independent
/// sequence that can be created anywhere without coordination. This is what
/// makes the samplers reproducible regardless of how work is scheduled.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using block_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (used_ == kBatch * 2) {
      refill();
    }
    return buffer_[static_cast<std::size_t>(used_++)];
  }

  /// Ten rounds of the Philox bijection applied to one counter block.
  static block_type bijection(block_type ctr, key_type key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr int kBatch = 16;

  // Evaluates kBatch consecutive counter blocks at once; the output order
  // matches one-block-at-a-time evaluation.
  void refill() noexcept;

  key_type key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2 * kBatch> buffer_{};
  int used_ = 2 * kBatch;
};

/// Mixes a tuple of integers into one stream id (splitmix64 finalizer chain).
constexpr std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                      std::uint64_t d = 0) noexcept {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(a + 0x9E3779B97F4A7C15ull);
  h = mix(h ^ (b + 0x9E3779B97F4A7C15ull));
  h = mix(h ^ (c + 0x3C6EF372FE94F82Aull));
  h = mix(h ^ (d + 0xDAA66D2C7DDF743Full));
  return h;
}

/// Purposes for derived streams. Keeping them distinct guarantees that two
/// consumers never share a sequence.
enum class StreamPurpose : std::uint64_t {
  simulate = 1,
  filter_init,
  filter_step,
  theta_init,
  theta_resample,
  move,
  predict,
  pmmh,
  abc,
  smc,
  replicate,
  test = 99,
};

/// Random source handed explicitly to every sampling routine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(seed, stream) {}

  /// Stream for a (purpose, i, j, k) tuple under the given master seed.
  static Rng stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t i = 0, std::uint64_t j = 0,
                    std::uint64_t k = 0) {
    return Rng(seed, derive_stream(static_cast<std::uint64_t>(purpose), i, j, k));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  Philox4x32& engine() { return engine_; }

 private:
  Philox4x32 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace plugsmc

#endif  // PLUGSMC_RNG_HPP
