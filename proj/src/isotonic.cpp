#include "sensibound/isotonic.hpp"

#include "sensibound/errors.hpp"

namespace sensibound {

std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& weights, bool increasing) {
  const std::size_t n = y.size();
  if (!weights.empty() && weights.size() != n) throw InputError("isotonic weights must match values");
  const double sign = increasing ? 1.0 : -1.0;
  struct Block {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w > 0.0)) throw InputError("isotonic weights must be positive");
    blocks.push_back({sign * y[i], w, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double tw = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / tw;
      a.weight = tw;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& b : blocks) out.insert(out.end(), b.count, sign * b.mean);
  return out;
}

}  // namespace sensibound
