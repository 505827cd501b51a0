#pragma once

#include <limits>
#include <span>
#include <vector>

#include "c2p/geom/kdtree.hpp"

namespace c2p::eval {

/// Mean per-point Euclidean norm of est - gt.
inline double mde(const DisplacementField& est, const DisplacementField& gt) {
  if (est.size() != gt.size())
    throw Error(ErrorCode::ShapeMismatch, "mde: field lengths differ (" + std::to_string(est.size()) + " vs " +
                                              std::to_string(gt.size()) + ")");
  if (est.size() == 0) throw Error(ErrorCode::EmptyCloud, "mde: empty fields");
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) s += (est.vectors[i] - gt.vectors[i]).norm();
  return s / static_cast<double>(est.size());
}

/// Dataset-level value: mean of per-sample values.
inline double dataset_mean(std::span<const double> per_sample) {
  if (per_sample.empty()) return 0.0;
  double s = 0.0;
  for (double v : per_sample) s += v;
  return s / static_cast<double>(per_sample.size());
}

struct LandmarkResult {
  double error = 0.0;
  std::size_t evaluated = 0;
  std::vector<int> skipped_structures;
};

/// For each source landmark, the distance to the closest target landmark of
/// the same structure, averaged. Structures with no target landmark are skipped.
inline LandmarkResult landmark_error(std::span<const Landmark> source, std::span<const Landmark> target) {
  LandmarkResult r;
  double sum = 0.0;
  for (const auto& a : source) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : target)
      if (b.structure == a.structure) best = std::min(best, (a.position - b.position).norm());
    if (std::isinf(best)) {
      if (std::find(r.skipped_structures.begin(), r.skipped_structures.end(), a.structure) ==
          r.skipped_structures.end())
        r.skipped_structures.push_back(a.structure);
      continue;
    }
    sum += best;
    ++r.evaluated;
  }
  if (r.evaluated == 0) throw Error(ErrorCode::EmptyLandmarks, "no landmark has a same-structure target landmark");
  r.error = sum / static_cast<double>(r.evaluated);
  return r;
}

/// Inverse-distance weighted field value at q from the k nearest points.
/// A query that coincides with a point takes that point's vector exactly.
inline Vec3 interpolate_field(const KdTree& tree, const DisplacementField& field, const Vec3& q, std::size_t k = 4) {
  if (tree.size() != field.size()) throw Error(ErrorCode::ShapeMismatch, "field and point counts differ");
  const auto nbs = tree.knn(q, k);
  if (nbs.empty()) throw Error(ErrorCode::EmptyCloud, "interpolate_field on an empty cloud");
  if (nbs.front().distance == 0.0) return field.vectors[nbs.front().index];
  Vec3 v = Vec3::Zero();
  double w = 0.0;
  for (const auto& nb : nbs) {
    const double wi = 1.0 / nb.distance;
    v += wi * field.vectors[nb.index];
    w += wi;
  }
  return v / w;
}

/// Landmarks moved by a dense field defined on `points`.
inline std::vector<Landmark> deform_landmarks(std::span<const Landmark> landmarks, PointSpan points,
                                              const DisplacementField& field) {
  const KdTree tree(points);
  std::vector<Landmark> out(landmarks.begin(), landmarks.end());
  for (auto& l : out) l.position += interpolate_field(tree, field, l.position);
  return out;
}

}  // namespace c2p::eval
