#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace milestone {

/// Counter-based stream (Philox-4x32-10). The key is the global seed; the counter carries the
/// stream id and a block index, so any (seed, stream) pair is an independent, reproducible
/// sequence and streams never need to be advanced to reach each other.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  /// Child stream whose id is a hash of (this id, k); same seed.
  RngStream substream(std::uint64_t k) const;

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace milestone
