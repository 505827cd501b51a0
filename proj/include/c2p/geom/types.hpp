#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "c2p/error.hpp"

namespace c2p {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;
using PointSpan = std::span<const Vec3>;

inline bool is_finite(const Vec3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

struct Landmark {
  int structure = 0;
  Vec3 position = Vec3::Zero();
};

/// A point set in millimetres with per-point structure labels.
///
/// Templates have every structure populated; partial (in-vivo) clouds may
/// leave some structures empty. Support points and landmarks travel with the
/// cloud through every transform.
struct LabeledCloud {
  Points points;
  std::vector<int> labels;
  std::vector<std::string> structure_names;
  Points support_points;
  std::vector<Landmark> landmarks;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  int structure_count() const { return static_cast<int>(structure_names.size()); }

  /// Indices of the points carrying `structure`.
  std::vector<std::size_t> indices_of(int structure) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == structure) out.push_back(i);
    return out;
  }

  int find_structure(const std::string& name) const {
    for (int k = 0; k < structure_count(); ++k)
      if (structure_names[k] == name) return k;
    return -1;
  }

  /// Throws InvalidConfig when the structural invariants do not hold.
  /// `complete` additionally requires every structure to own a point.
  void validate(bool complete = false) const {
    if (labels.size() != points.size())
      throw Error(ErrorCode::InvalidConfig, "labels and points differ in length");
    const int k = structure_count();
    if (static_cast<int>(support_points.size()) != k)
      throw Error(ErrorCode::InvalidConfig, "one support point per structure required");
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= k)
        throw Error(ErrorCode::InvalidConfig, "label out of range at point " + std::to_string(i));
      if (!is_finite(points[i]))
        throw Error(ErrorCode::InvalidConfig, "non-finite coordinate at point " + std::to_string(i));
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (const auto& lm : landmarks)
      if (lm.structure < 0 || lm.structure >= k)
        throw Error(ErrorCode::InvalidConfig, "landmark references unknown structure");
    if (complete)
      for (int s = 0; s < k; ++s)
        if (counts[static_cast<std::size_t>(s)] == 0)
          throw Error(ErrorCode::InvalidConfig, "structure '" + structure_names[s] + "' is empty");
  }
};

/// Element of SE(3): p -> rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// `this` after `first`: p -> this(first(p)).
  RigidTransform compose(const RigidTransform& first) const {
    return {rotation * first.rotation, rotation * first.translation + translation};
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_valid(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// Geodesic angle between two rotations, radians. atan2 form stays accurate
/// near zero, where acos of the trace loses half the digits.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 r = a.transpose() * b;
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

struct Correspondence {
  std::size_t source = 0;
  std::size_t target = 0;
  double score = 1.0;
};

/// Sparse (source index, target index) pairs with confidences in [0, 1].
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  /// Distinct source indices in ascending order.
  std::vector<std::size_t> source_indices() const {
    std::vector<std::size_t> out;
    out.reserve(pairs.size());
    for (const auto& c : pairs) out.push_back(c.source);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void validate(std::size_t source_size, std::size_t target_size) const {
    std::vector<std::pair<std::size_t, std::size_t>> seen;
    seen.reserve(pairs.size());
    for (const auto& c : pairs) {
      if (c.source >= source_size || c.target >= target_size)
        throw Error(ErrorCode::InvalidConfig, "correspondence index out of range");
      if (!(c.score >= 0.0 && c.score <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "correspondence score outside [0,1]");
      seen.emplace_back(c.source, c.target);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      throw Error(ErrorCode::InvalidConfig, "duplicate correspondence pair");
  }
};

/// One displacement vector per source point (mm).
struct DisplacementField {
  Points vectors;

  DisplacementField() = default;
  explicit DisplacementField(std::size_t n) : vectors(n, Vec3::Zero()) {}
  explicit DisplacementField(Points v) : vectors(std::move(v)) {}

  std::size_t size() const { return vectors.size(); }

  /// Field that moves `from[i]` onto `to[i]`.
  static DisplacementField between(PointSpan from, PointSpan to) {
    if (from.size() != to.size())
      throw Error(ErrorCode::ShapeMismatch, "field endpoints differ in length");
    DisplacementField f(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) f.vectors[i] = to[i] - from[i];
    return f;
  }

  double mean_norm() const {
    if (vectors.empty()) return 0.0;
    double s = 0.0;
    for (const auto& v : vectors) s += v.norm();
    return s / static_cast<double>(vectors.size());
  }
};

}  // namespace c2p
