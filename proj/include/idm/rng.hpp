#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace idm {

// Counter-based random numbers (Philox4x32-10, Salmon et al., SC'11).
//
// A stream is identified by (seed, stream_id); the i-th 128-bit block of a
// stream is a pure function of (seed, stream_id, i). Samplers open one stream
// per sample index, so output never depends on batch size or thread count.

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Mixes a seed with a purpose tag and an index into a fresh 64-bit seed
/// (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept;

class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_pos() noexcept;
  /// Unbiased integer in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace idm
