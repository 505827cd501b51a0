#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "c2p/geom/kdtree.hpp"

namespace c2p::ndp {

struct LossResult {
  double loss = 0.0;
  Points gradient;  // d loss / d point, one per input point
};

/// Chamfer distance between `a` and `b` (plain Euclidean terms) and its
/// gradient with respect to the points of `a`, nearest neighbours held
/// fixed. Coincident pairs contribute a zero subgradient.
inline LossResult chamfer_with_gradient(PointSpan a, const KdTree& b_tree) {
  if (a.empty() || b_tree.empty()) throw Error(ErrorCode::EmptyCloud, "Chamfer loss needs non-empty sets");
  const PointSpan b(b_tree.points());
  LossResult r;
  r.gradient.assign(a.size(), Vec3::Zero());
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Neighbor nb = b_tree.nearest(a[i]);
    r.loss += wa * nb.distance;
    if (nb.distance > 0.0) r.gradient[i] += wa * (a[i] - b[nb.index]) / nb.distance;
  }
  const KdTree a_tree(a);
  double back = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Neighbor nb = a_tree.nearest(b[j]);
    back += nb.distance;
    if (nb.distance > 0.0) r.gradient[nb.index] += wb * (a[nb.index] - b[j]) / nb.distance;
  }
  r.loss += wb * back;
  return r;
}

/// Masked Chamfer loss: Chamfer distance between the source points named in
/// sigma and the full target. The gradient has one entry per source point
/// (zero for unmasked points).
inline LossResult correspondence_loss(PointSpan deformed_source, const CorrespondenceSet& sigma,
                                      const KdTree& target_tree) {
  if (sigma.empty()) throw Error(ErrorCode::NoCorrespondences, "correspondence loss needs a non-empty sigma");
  const auto mask = sigma.source_indices();
  Points masked;
  masked.reserve(mask.size());
  for (std::size_t u : mask) {
    if (u >= deformed_source.size()) throw Error(ErrorCode::InvalidConfig, "sigma index out of range");
    masked.push_back(deformed_source[u]);
  }
  LossResult sub = chamfer_with_gradient(masked, target_tree);
  LossResult r;
  r.loss = sub.loss;
  r.gradient.assign(deformed_source.size(), Vec3::Zero());
  for (std::size_t m = 0; m < mask.size(); ++m) r.gradient[mask[m]] = sub.gradient[m];
  return r;
}

inline LossResult correspondence_loss(PointSpan deformed_source, const CorrespondenceSet& sigma, PointSpan target) {
  return correspondence_loss(deformed_source, sigma, KdTree(target));
}

using Edge = std::pair<std::size_t, std::size_t>;

/// Motion coherence: mean over edges of |phi_i - phi_j|^2.
inline LossResult regularization_loss(PointSpan field, const std::vector<Edge>& edges) {
  LossResult r;
  r.gradient.assign(field.size(), Vec3::Zero());
  if (edges.empty()) return r;
  const double w = 1.0 / static_cast<double>(edges.size());
  for (const auto& [i, j] : edges) {
    const Vec3 d = field[i] - field[j];
    r.loss += w * d.squaredNorm();
    r.gradient[i] += 2.0 * w * d;
    r.gradient[j] -= 2.0 * w * d;
  }
  return r;
}

}  // namespace c2p::ndp

namespace c2p::ndp {

/// Chamfer loss where nearest neighbours are searched among points of the
/// same structure label. A label present on one side only falls back to the
/// whole other set. Normalisation matches the plain Chamfer loss.
class LabeledChamfer {
 public:
  LabeledChamfer(PointSpan target, std::span<const int> target_labels) : all_(target) {
    target_.assign(target.begin(), target.end());
    labels_.assign(target_labels.begin(), target_labels.end());
    int k = 0;
    for (int l : labels_) k = std::max(k, l + 1);
    trees_.resize(static_cast<std::size_t>(k));
    maps_.resize(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) {
      Points pts;
      for (std::size_t j = 0; j < labels_.size(); ++j)
        if (labels_[j] == l) {
          pts.push_back(target_[j]);
          maps_[static_cast<std::size_t>(l)].push_back(j);
        }
      trees_[static_cast<std::size_t>(l)] = KdTree(pts);
    }
  }

  LossResult evaluate(PointSpan a, std::span<const int> a_labels) const {
    if (a.empty() || target_.empty()) throw Error(ErrorCode::EmptyCloud, "Chamfer loss needs non-empty sets");
    LossResult r;
    r.gradient.assign(a.size(), Vec3::Zero());
    const double wa = 1.0 / static_cast<double>(a.size());
    const double wb = 1.0 / static_cast<double>(target_.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Neighbor nb = nearest_target(a[i], a_labels[i]);
      r.loss += wa * nb.distance;
      if (nb.distance > 0.0) r.gradient[i] += wa * (a[i] - target_[nb.index]) / nb.distance;
    }
    // per-label source trees for the reverse term
    int k = static_cast<int>(trees_.size());
    for (int l : a_labels) k = std::max(k, l + 1);
    std::vector<Points> pts(static_cast<std::size_t>(k));
    std::vector<std::vector<std::size_t>> ids(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a_labels[i] < 0) continue;
      pts[static_cast<std::size_t>(a_labels[i])].push_back(a[i]);
      ids[static_cast<std::size_t>(a_labels[i])].push_back(i);
    }
    std::vector<KdTree> src(static_cast<std::size_t>(k));
    for (int l = 0; l < k; ++l) src[static_cast<std::size_t>(l)] = KdTree(pts[static_cast<std::size_t>(l)]);
    const KdTree src_all(a);
    for (std::size_t j = 0; j < target_.size(); ++j) {
      const int l = labels_[j];
      Neighbor nb;
      if (l >= 0 && l < k && !src[static_cast<std::size_t>(l)].empty()) {
        nb = src[static_cast<std::size_t>(l)].nearest(target_[j]);
        nb.index = ids[static_cast<std::size_t>(l)][nb.index];
      } else {
        nb = src_all.nearest(target_[j]);
      }
      r.loss += wb * nb.distance;
      if (nb.distance > 0.0) r.gradient[nb.index] += wb * (a[nb.index] - target_[j]) / nb.distance;
    }
    return r;
  }

 private:
  Neighbor nearest_target(const Vec3& q, int l) const {
    if (l >= 0 && static_cast<std::size_t>(l) < trees_.size() && !trees_[static_cast<std::size_t>(l)].empty()) {
      Neighbor nb = trees_[static_cast<std::size_t>(l)].nearest(q);
      nb.index = maps_[static_cast<std::size_t>(l)][nb.index];
      return nb;
    }
    return all_.nearest(q);
  }

  Points target_;
  std::vector<int> labels_;
  KdTree all_;
  std::vector<KdTree> trees_;
  std::vector<std::vector<std::size_t>> maps_;
};

}  // namespace c2p::ndp
