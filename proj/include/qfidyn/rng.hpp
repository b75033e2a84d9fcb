#pragma once

#include <cstdint>

namespace qfidyn {

// Splitmix64 generator. Cheap, counter-based, and fully specified, so ensembles
// are bit-reproducible across platforms. Realization k of a run draws from a
// stream derived from (master_seed, k): streams are decorrelated by the mixer,
// and results do not depend on worker scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t master_seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();  // (0, 1], 53-bit mantissa
  double normal();   // standard normal via Box-Muller (pairs cached)

  // the state the (master_seed, stream) constructor starts from, so manifests
  // can record one plain seed per realization
  static std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream);

 private:
  std::uint64_t state_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace qfidyn
