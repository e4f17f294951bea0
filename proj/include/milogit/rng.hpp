#pragma once

#include <cstdint>
#include <cmath>

#include "milogit/error.hpp"

namespace milogit {

// Counter-based random stream.
//
// A stream is identified by a 64-bit key; output number j of the stream is
// mix64(key + (j+1)*GOLDEN) where mix64 is the splitmix64 finalizer.
// substream(a, b) derives a new key from (key, a, b) only, so the draws of a
// substream depend on neither the parent's position nor on any other
// substream.  This is what makes imputation reproducible per (record, v) and
// simulation replications reproducible per replication index, independent of
// traversal order or worker count.
class RngStream {
public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const {
    std::uint64_t k = mix64(key_ ^ (a + 0x9e3779b97f4a7c15ULL));
    k = mix64(k ^ (b + 0xd1b54a32d192ed03ULL));
    return RngStream(k);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Inverse-CDF draw over probs[0..k-1]: first index whose cumulative sum
  // reaches the uniform draw.  Matches the donor-pool tie-break convention.
  int discrete(const double* probs, int k) {
    double u = uniform();
    double cum = 0.0;
    for (int j = 0; j < k; ++j) {
      cum += probs[j];
      if (u <= cum) return j;
    }
    return k - 1;
  }

  std::uint64_t key() const { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// Documented substream tags (arbitrary distinct constants).
namespace rng_tag {
inline constexpr std::uint64_t replication = 0x7265706c;  // per-replication stream
inline constexpr std::uint64_t covariates = 0x636f7661;   // complete-data generation
inline constexpr std::uint64_t missingness = 0x6d697373;  // pattern assignment
inline constexpr std::uint64_t impute_mi1 = 0x696d7031;   // MI1 imputation draws
inline constexpr std::uint64_t impute_mi2 = 0x696d7032;   // MI2 imputation draws
}  // namespace rng_tag

}  // namespace milogit
