#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by (master_seed, stream_id). The master seed is the
// Philox key and the stream id occupies the upper half of the 128-bit counter,
// so the draw at position k of a stream is a pure function of
// (master_seed, stream_id, k). Replication r of a simulation uses stream r,
// which makes results independent of how replications are spread over threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include <boost/random/normal_distribution.hpp>

namespace oprisk {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Ten-round Philox4x32 bijection of `counter` under `key`.
constexpr PhiloxBlock philox4x32(PhiloxBlock counter, PhiloxKey key) noexcept {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * counter[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * counter[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : master_seed_(master_seed), stream_id_(stream_id) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Number of 128-bit blocks consumed so far.
  std::uint64_t position() const noexcept { return block_; }

  /// Jump to block `block`; discards buffered words.
  void seek(std::uint64_t block) noexcept {
    block_ = block;
    word_ = kWords;
  }

  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    if (word_ == kWords) refill();
    return buffer_[word_++];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (ziggurat).
  double normal() noexcept { return boost::random::normal_distribution<double>{}(*this); }

  double exponential() noexcept { return -std::log(uniform()); }

  void fill_normal(std::span<double> out) noexcept {
    for (double& x : out) x = normal();
  }

 private:
  static constexpr int kBlocks = 4;  // blocks per refill, computed side by side
  static constexpr int kWords = 2 * kBlocks;

  // Same rounds as philox4x32, with the blocks laid out lane by lane so the
  // compiler can interleave (and vectorize) them.
  void refill() noexcept {
    std::uint32_t c0[kBlocks], c1[kBlocks], c2[kBlocks], c3[kBlocks];
    for (int b = 0; b < kBlocks; ++b) {
      const std::uint64_t block = block_ + static_cast<std::uint64_t>(b);
      c0[b] = static_cast<std::uint32_t>(block);
      c1[b] = static_cast<std::uint32_t>(block >> 32);
      c2[b] = static_cast<std::uint32_t>(stream_id_);
      c3[b] = static_cast<std::uint32_t>(stream_id_ >> 32);
    }
    std::uint32_t k0 = static_cast<std::uint32_t>(master_seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(master_seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      for (int b = 0; b < kBlocks; ++b) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0[b];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2[b];
        const auto n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[b] ^ k0;
        const auto n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[b] ^ k1;
        c1[b] = static_cast<std::uint32_t>(p1);
        c3[b] = static_cast<std::uint32_t>(p0);
        c0[b] = n0;
        c2[b] = n2;
      }
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    for (int b = 0; b < kBlocks; ++b) {
      buffer_[2 * b] = (std::uint64_t{c1[b]} << 32) | c0[b];
      buffer_[2 * b + 1] = (std::uint64_t{c3[b]} << 32) | c2[b];
    }
    block_ += kBlocks;
    word_ = 0;
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, kWords> buffer_{};
  int word_ = kWords;
};

}  // namespace oprisk
