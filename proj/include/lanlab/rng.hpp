#pragma once

#include <array>
#include <cstdint>
#include <cstring>

#include "lanlab/core.hpp"
#include "lanlab/stats.hpp"

namespace lanlab {

namespace detail {

// Philox-4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
    const std::array<std::uint32_t, 4> next = {
        std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
        std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    ctr = next;
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent master seed for a named purpose (experiment phase).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::splitmix64(seed ^ detail::splitmix64(tag));
}

/// Counter-based random stream. A stream is fully determined by
/// (seed, stream id); draws are independent of any other stream and of
/// execution order, which makes replication-parallel runs reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        stream_lo_(std::uint32_t(stream_id)),
        stream_hi_(std::uint32_t(stream_id >> 32)) {}

  /// Stream for interval `interval` of replication `rep`.
  static RngStream for_interval(std::uint64_t seed, std::uint64_t rep,
                                std::uint64_t interval) {
    return RngStream(derive_seed(seed, rep), interval);
  }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  /// Uniform draw in the open interval (0,1).
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal by inverse-CDF; one uniform per variate.
  double normal() { return normal_quantile(uniform()); }

  /// Poisson by CDF inversion; intended for small to moderate means.
  int poisson(double mean) {
    if (mean < 0.0) throw invalid_parameter_error("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 600.0) throw invalid_parameter_error("poisson: mean too large for inversion");
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 100000) {
      ++k;
      p *= mean / double(k);
      cdf += p;
    }
    return k;
  }

 private:
  void refill() {
    const auto out = detail::philox4x32(
        {std::uint32_t(counter_), std::uint32_t(counter_ >> 32), stream_lo_, stream_hi_},
        key_);
    ++counter_;
    buf_[0] = (std::uint64_t(out[1]) << 32) | out[0];
    buf_[1] = (std::uint64_t(out[3]) << 32) | out[2];
    have_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int have_ = 0;
};

}  // namespace lanlab
