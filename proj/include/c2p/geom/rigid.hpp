#pragma once

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "c2p/geom/types.hpp"

namespace c2p {

inline LabeledCloud apply_rigid(const RigidTransform& t, const LabeledCloud& cloud) {
  if (!t.is_valid()) throw Error(ErrorCode::InvalidTransform, "rotation is not a proper orthonormal matrix");
  LabeledCloud out = cloud;
  if (t.rotation == Mat3::Identity() && t.translation == Vec3::Zero()) return out;
  for (auto& p : out.points) p = t.apply(p);
  for (auto& s : out.support_points) s = t.apply(s);
  for (auto& lm : out.landmarks) lm.position = t.apply(lm.position);
  return out;
}

inline Points apply_rigid(const RigidTransform& t, PointSpan points) {
  Points out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(t.apply(p));
  return out;
}

inline RigidTransform rotation_about(const Vec3& pivot, const Mat3& rotation) {
  return {rotation, pivot - rotation * pivot};
}

/// Rotation from an axis-angle vector (radians * unit axis).
inline Mat3 rotation_from_vector(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

/// Least-squares rigid fit of `source` onto `target` over paired rows
/// (Kabsch with reflection correction). Weights are optional.
inline RigidTransform fit_rigid(PointSpan source, PointSpan target, std::span<const double> weights = {}) {
  const std::size_t n = source.size();
  if (n != target.size()) throw Error(ErrorCode::ShapeMismatch, "paired point sets differ in length");
  if (!weights.empty() && weights.size() != n) throw Error(ErrorCode::ShapeMismatch, "weight count mismatch");
  if (n < 3) throw Error(ErrorCode::DegenerateCorrespondences, "need at least 3 pairs");

  double wsum = 0.0;
  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum += w;
    cs += w * source[i];
    ct += w * target[i];
  }
  if (!(wsum > 0.0)) throw Error(ErrorCode::DegenerateCorrespondences, "weights sum to zero");
  cs /= wsum;
  ct /= wsum;

  Mat3 cov = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const Vec3 a = source[i] - cs;
    cov += w * (target[i] - ct) * a.transpose();
    spread += w * a * a.transpose();
  }

  // Collinear (or coincident) sources leave the rotation about their line free.
  Eigen::JacobiSVD<Mat3> spread_svd(spread);
  const Vec3 sv = spread_svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-10 * sv[0])
    throw Error(ErrorCode::DegenerateCorrespondences, "source points are collinear or coincident");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  t.translation = ct - t.rotation * cs;
  return t;
}

inline RigidTransform estimate_rigid_from_correspondences(PointSpan source, PointSpan target,
                                                          const CorrespondenceSet& corr) {
  if (corr.size() < 3) throw Error(ErrorCode::DegenerateCorrespondences, "need at least 3 correspondence pairs");
  Points a;
  Points b;
  a.reserve(corr.size());
  b.reserve(corr.size());
  for (const auto& c : corr.pairs) {
    if (c.source >= source.size() || c.target >= target.size())
      throw Error(ErrorCode::InvalidConfig, "correspondence index out of range");
    a.push_back(source[c.source]);
    b.push_back(target[c.target]);
  }
  return fit_rigid(a, b);
}

}  // namespace c2p
