#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lfi::nd {

// Counter-based random stream. Each draw hashes (seed, stream_id, counter),
// so streams can be split arbitrarily and simulations scheduled in any order
// reproduce bit-identical results. Distinct stream_ids enter the hash
// nonlinearly, which keeps streams from being shifted copies of one another.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), counter_(0) {
    base_ = mix(mix(seed + 0x632BE59BD9B4E019ULL) ^ mix(stream_id + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  // Derived stream, independent of this one and of siblings with other keys.
  RngStream substream(std::uint64_t key) const {
    return RngStream(seed_, mix(stream_id_ + 0x94D049BB133111EBULL) ^ mix(key));
  }

  std::uint64_t next_u64() { return mix(base_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  // Uniform in (0, 1); never returns exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without caching the spare: two uniforms per draw, so the
  // sequence depends only on the counter.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  std::vector<double> normal_vec(int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = normal();
    return out;
  }

  // Integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free multiply-shift; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_;
  std::uint64_t base_;
};

// Sample m distinct indices from [0, n) in ascending probe order. Work is
// O(m) expected, independent of n, so minibatching never scans the dataset.
std::vector<int> sample_without_replacement(int n, int m, RngStream& rng);

}  // namespace lfi::nd
