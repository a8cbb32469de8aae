#include "sensibound/random.hpp"

#include <bit>

#include "sensibound/errors.hpp"
#include "sensibound/normal.hpp"

namespace sensibound {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t dgp_id, std::string_view tag) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ dgp_id);
  return splitmix64(h ^ fnv1a(tag));
}

Sobol1D::Sobol1D(std::uint64_t seed) : shift_(splitmix64(seed ^ 0x50b01ULL)) {}

void Sobol1D::reset() {
  state_ = 0;
  index_ = 0;
}

double Sobol1D::next() {
  // Direction numbers for the first dimension are v_j = 2^-j, i.e. bit (63 - j).
  if (index_ > 0) {
    const int c = std::countr_one(index_ - 1);
    state_ ^= 1ULL << (63 - c);
  }
  ++index_;
  const std::uint64_t bits = (state_ ^ shift_) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1p-53;
}

std::vector<double> LatentSampler::uniforms(std::size_t k) const {
  std::vector<double> out(k);
  if (kind == Kind::Sobol) {
    Sobol1D sob(seed);
    for (auto& v : out) v = sob.next();
  } else {
    Rng rng(splitmix64(seed));
    for (auto& v : out) {
      v = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    }
  }
  return out;
}

std::vector<double> LatentSampler::normals(std::size_t k) const {
  auto out = uniforms(k);
  for (auto& v : out) v = normal::quantile(v);
  return out;
}

}  // namespace sensibound
