#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "c2p/geom/pca.hpp"
#include "c2p/geom/types.hpp"
#include "c2p/rng.hpp"
#include "c2p/synthgen/params.hpp"

namespace c2p::synthgen {

struct PartialSample {
  LabeledCloud cloud;
  std::vector<std::size_t> source_indices;  // row i of cloud came from this deformed point
  double visible_ratio = 0.0;
  double requested_ratio = 0.0;
};

/// Depth of each structure centroid behind the canal-wall front plane.
///
/// The canal axis runs from the canal centroid towards the membrane
/// centroid; the front plane is orthogonal to it through the most lateral
/// canal point.
inline std::vector<double> structure_depths(const LabeledCloud& cloud) {
  const int canal = cloud.find_structure("ear_canal");
  const int membrane = cloud.find_structure("tympanic_membrane");
  std::vector<double> depth(static_cast<std::size_t>(cloud.structure_count()), 0.0);
  if (canal < 0 || membrane < 0) return depth;
  auto structure_points = [&](int k) {
    Points pts;
    for (std::size_t i : cloud.indices_of(k)) pts.push_back(cloud.points[i]);
    return pts;
  };
  const Points canal_pts = structure_points(canal);
  const Points membrane_pts = structure_points(membrane);
  if (canal_pts.empty() || membrane_pts.empty()) return depth;
  const Vec3 axis = (centroid(membrane_pts) - centroid(canal_pts)).normalized();
  double front = std::numeric_limits<double>::infinity();
  for (const auto& p : canal_pts) front = std::min(front, axis.dot(p));
  for (int k = 0; k < cloud.structure_count(); ++k) {
    const Points pts = structure_points(k);
    if (!pts.empty()) depth[static_cast<std::size_t>(k)] = std::max(0.0, axis.dot(centroid(pts)) - front);
  }
  return depth;
}

/// Partial, noisy view of a complete deformed cloud.
///
/// Each point gets keep-score alpha * (1 - d / d_max) + (1 - alpha) * g,
/// where d is the distance to its structure's support point and g a clipped
/// Gaussian around 0.5. The top-scoring fraction (drawn from the visible
/// ratio range) survives; posterior structures are then thinned by
/// exp(-rate * depth) * U(random factor range), and survivors are jittered
/// uniformly per coordinate.
inline PartialSample sample_partial(const LabeledCloud& deformed, const SamplingParams& p) {
  p.validate();
  deformed.validate();
  if (deformed.empty()) throw Error(ErrorCode::EmptyCloud, "cannot sample an empty cloud");
  Rng rng(derive_seed(p.seed, 0x5a3));
  const std::size_t n = deformed.size();
  const int k_count = deformed.structure_count();

  std::vector<double> d_max(static_cast<std::size_t>(k_count), 0.0);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(deformed.labels[i]);
    dist[i] = (deformed.points[i] - deformed.support_points[k]).norm();
    d_max[k] = std::max(d_max[k], dist[i]);
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dm = d_max[static_cast<std::size_t>(deformed.labels[i])];
    const double closeness = dm > 0.0 ? 1.0 - dist[i] / dm : 1.0;
    const double g = std::clamp(rng.normal(0.5, p.score_spread), 0.0, 1.0);
    score[i] = p.support_weight * closeness + (1.0 - p.support_weight) * g;
  }

  PartialSample out;
  out.requested_ratio = rng.uniform(p.visible_ratio_range[0], p.visible_ratio_range[1]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  const auto keep_count = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(out.requested_ratio * static_cast<double>(n))));
  std::vector<char> kept(n, 0);
  for (std::size_t r = 0; r < keep_count; ++r) kept[order[r]] = 1;

  if (p.depth_attenuation > 0.0) {
    const auto depth = structure_depths(deformed);
    for (const auto& name : p.posterior_structures) {
      const int k = deformed.find_structure(name);
      if (k < 0) continue;
      const double factor = std::exp(-p.depth_attenuation * depth[static_cast<std::size_t>(k)]) *
                            rng.uniform(p.random_factor_range[0], p.random_factor_range[1]);
      std::vector<std::size_t> members;  // kept points of k, best score first
      for (std::size_t i : order)
        if (kept[i] && deformed.labels[i] == k) members.push_back(i);
      const auto retain = static_cast<std::size_t>(
          std::llround(std::clamp(factor, 0.0, 1.0) * static_cast<double>(members.size())));
      for (std::size_t r = retain; r < members.size(); ++r) kept[members[r]] = 0;
    }
  }

  out.cloud.structure_names = deformed.structure_names;
  out.cloud.support_points = deformed.support_points;
  out.cloud.landmarks = deformed.landmarks;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i]) continue;
    Vec3 q = deformed.points[i];
    if (p.jitter > 0.0)
      for (int c = 0; c < 3; ++c) q[c] += rng.uniform(-p.jitter, p.jitter);
    out.cloud.points.push_back(q);
    out.cloud.labels.push_back(deformed.labels[i]);
    out.source_indices.push_back(i);
  }
  if (out.cloud.empty()) throw Error(ErrorCode::EmptyResult, "partial sampling kept no points");
  out.visible_ratio = static_cast<double>(out.cloud.size()) / static_cast<double>(n);
  return out;
}

}  // namespace c2p::synthgen
