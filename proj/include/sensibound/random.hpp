#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sensibound {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view tag);

/// Stream seed derived from (master seed, dgp id, purpose tag). Independent of
/// call order, so parallel workers see the same streams as a serial run.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t dgp_id, std::string_view tag);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t dgp_id, std::string_view tag) {
  return Rng(derive_seed(master, dgp_id, tag));
}

/// One-dimensional Sobol sequence (Gray-code order) with a random digital shift.
class Sobol1D {
 public:
  explicit Sobol1D(std::uint64_t seed);
  /// Next point, strictly inside (0, 1).
  double next();
  void reset();

 private:
  std::uint64_t shift_;
  std::uint64_t state_ = 0;
  std::uint64_t index_ = 0;
};

struct LatentSampler {
  enum class Kind { PseudoRandom, Sobol };
  Kind kind = Kind::Sobol;
  std::uint64_t seed = 123;

  /// k uniforms in (0, 1); the same sampler always yields the same stream.
  std::vector<double> uniforms(std::size_t k) const;
  /// k standard-normal draws via the inverse CDF of uniforms(k).
  std::vector<double> normals(std::size_t k) const;
};

}  // namespace sensibound
