#pragma once

#include "mfoc/types.hpp"

#include <span>

namespace mfoc {

// Pairwise tree reduction with a fixed split rule (first half = ceil(n/2)).
// The summation tree depends only on n, never on thread count or traversal
// order, so reductions are bit-reproducible.

inline double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return v[0] + v[1];
  const std::size_t m = (v.size() + 1) / 2;
  return pairwise_sum(v.subspan(0, m)) + pairwise_sum(v.subspan(m));
}

inline Vector pairwise_sum(std::span<const Vector> v) {
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return v[0] + v[1];
  const std::size_t m = (v.size() + 1) / 2;
  return pairwise_sum(v.subspan(0, m)) + pairwise_sum(v.subspan(m));
}

}  // namespace mfoc
