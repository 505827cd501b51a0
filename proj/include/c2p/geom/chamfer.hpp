#pragma once

#include <cmath>

#include "c2p/geom/kdtree.hpp"

namespace c2p {

/// Mean over `from` of the (non-squared) distance to the nearest point of `to`.
inline double directed_mean_distance(PointSpan from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest(p).distance;
  return sum / static_cast<double>(from.size());
}

/// Symmetric Chamfer distance with plain Euclidean (not squared) terms:
/// mean_a min_b |a - b| + mean_b min_a |a - b|.
inline double chamfer_distance(PointSpan a, PointSpan b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyCloud, "chamfer_distance needs non-empty sets");
  const KdTree ta(a);
  const KdTree tb(b);
  return directed_mean_distance(a, tb) + directed_mean_distance(b, ta);
}

}  // namespace c2p
