#include "plugsmc/rng.hpp"

namespace plugsmc {

void Philox4x32::refill() noexcept {
  constexpr std::uint64_t lo = 0xFFFFFFFFull;
  alignas(64) std::array<std::uint64_t, kBatch> c0, c1, c2, c3;
  for (int b = 0; b < kBatch; ++b) {
    const std::uint64_t ctr = block_ + static_cast<std::uint64_t>(b);
    c0[b] = ctr & lo;
    c1[b] = ctr >> 32;
    c2[b] = stream_ & lo;
    c3[b] = stream_ >> 32;
  }
  std::uint64_t k0 = key_[0];
  std::uint64_t k1 = key_[1];
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 = (k0 + kWeyl0) & lo;
      k1 = (k1 + kWeyl1) & lo;
    }
    for (int b = 0; b < kBatch; ++b) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(static_cast<std::uint32_t>(c0[b])) * kMul0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(static_cast<std::uint32_t>(c2[b])) * kMul1;
      c0[b] = (p1 >> 32) ^ c1[b] ^ k0;
      c1[b] = p1 & lo;
      c2[b] = (p0 >> 32) ^ c3[b] ^ k1;
      c3[b] = p0 & lo;
    }
  }
  for (int b = 0; b < kBatch; ++b) {
    buffer_[static_cast<std::size_t>(2 * b)] = (c1[b] << 32) | c0[b];
    buffer_[static_cast<std::size_t>(2 * b + 1)] = (c3[b] << 32) | c2[b];
  }
  block_ += kBatch;
  used_ = 0;
}

}  // namespace plugsmc
