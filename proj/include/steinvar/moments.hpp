#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace steinvar {

/// Single-pass mean/variance accumulator (Welford) with the Chan et al.
/// pairwise merge, so partial results combine without precision loss.
struct RunningMoments {
  std::int64_t count = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const RunningMoments& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    mean = (na * mean + nb * other.mean) / (na + nb);
    m2 += other.m2 + delta * delta * (na * nb / (na + nb));
    count += other.count;
  }

  double variance_sample() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }

  double std_error() const {
    return count > 0 ? std::sqrt(variance_sample() / static_cast<double>(count)) : 0.0;
  }
};

/// Reduce per-block accumulators over a balanced binary tree fixed by block
/// index. The merge order never depends on which worker filled a block, so
/// results are bit-identical across thread counts.
template <typename Acc>
Acc reduce_pairwise(std::vector<Acc> blocks) {
  if (blocks.empty()) return Acc{};
  while (blocks.size() > 1) {
    std::size_t out = 0;
    for (std::size_t i = 0; i + 1 < blocks.size(); i += 2) {
      blocks[i].merge(blocks[i + 1]);
      blocks[out++] = blocks[i];
    }
    if (blocks.size() % 2 == 1) blocks[out++] = blocks.back();
    blocks.resize(out);
  }
  return blocks.front();
}

}  // namespace steinvar
