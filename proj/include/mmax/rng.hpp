#pragma once

#include <cstdint>
#include <string_view>

namespace mmax {

// 64-bit FNV-1a. Used for stream keys and content fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Counter-based generator: draw i of a stream is splitmix64(key + i * golden).
// The stream is fully described by (key, counter), so it can be saved,
// restored, or forked without touching any other stream.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  // Named sub-stream of a master seed ("init", "dropout", "shuffle", "oov").
  static Rng stream(std::uint64_t master_seed, std::string_view name);

  // Independent child stream keyed by an arbitrary label.
  Rng fork(std::string_view label) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  bool operator==(const Rng&) const = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mmax
