#include "qfidyn/rng.hpp"

#include <cmath>

namespace qfidyn {

namespace {

// Steele/Lea/Burton splitmix64 mixer
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream)
    : Rng(stream_seed(master_seed, stream)) {}

std::uint64_t Rng::stream_seed(std::uint64_t master_seed, std::uint64_t stream) {
  // a mixing round decouples nearby (seed, stream) pairs
  return mix(master_seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix(state_);
}

double Rng::uniform() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

}  // namespace qfidyn
