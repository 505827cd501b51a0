#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "c2p/coarse/descriptors.hpp"
#include "c2p/coarse/matching.hpp"
#include "c2p/coarse/ransac.hpp"
#include "c2p/geom/chamfer.hpp"

namespace c2p::coarse {

struct PolishConfig {
  int iterations = 30;
  double robust_scale = 0.5;   // mm, Cauchy weight scale
  double score_cap = 2.0;      // mm, truncation of the alignment score
  double tolerance = 1e-7;     // stop when the pose update is below this (rad / mm)
};

struct GuidedConfig {
  double reverse_radius = 0.5;  // mm; source points this close to the target are paired too (0 disables)
  double radius = 1.5;            // mm; pairs farther apart after alignment are dropped
  std::size_t max_pairs = 2048;   // cap by score
};

struct CoarseConfig {
  DescriptorConfig descriptors;
  MatchConfig matching;
  RansacConfig ransac;
  PolishConfig polish;
  GuidedConfig guided;
  /// Also consider the unmoved pose as a hypothesis (clouds acquired in
  /// roughly the same frame). The better-scoring hypothesis wins.
  bool identity_hypothesis = true;
  /// Restrict geometric nearest neighbours to matching structure labels.
  bool use_labels = true;
};

struct CoarseResult {
  RigidTransform transform;           // tau: template frame -> target frame
  CorrespondenceSet correspondences;  // sigma, full-cloud indices
  std::size_t candidate_pairs = 0;    // voted descriptor matches
  std::size_t ransac_inliers = 0;
  double inlier_ratio = 0.0;
  bool low_confidence = false;
  std::string hypothesis;            // "ransac" or "identity"
  std::string descriptor_failure;    // why the descriptor path produced no pose, if it did not
  double alignment_score = 0.0;      // truncated target->source mean distance, mm
  double initial_chamfer = 0.0;      // Chamfer(tau(P_exv), P_inv), mm
};

/// Nearest-neighbour lookup into a moved source cloud, restricted to the
/// query's structure label when the source has points of that label.
class LabeledIndex {
 public:
  LabeledIndex(const LabeledCloud& source, const RigidTransform& t, bool use_labels) {
    const Points moved = apply_rigid(t, PointSpan(source.points));
    all_ = KdTree(moved);
    if (!use_labels) return;
    const int k = source.structure_count();
    trees_.resize(static_cast<std::size_t>(k));
    maps_.resize(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
      Points pts;
      for (std::size_t i : source.indices_of(s)) {
        pts.push_back(moved[i]);
        maps_[static_cast<std::size_t>(s)].push_back(i);
      }
      trees_[static_cast<std::size_t>(s)] = KdTree(pts);
    }
  }

  Neighbor nearest(const Vec3& q, int label) const {
    if (label >= 0 && static_cast<std::size_t>(label) < trees_.size() &&
        !trees_[static_cast<std::size_t>(label)].empty()) {
      Neighbor nb = trees_[static_cast<std::size_t>(label)].nearest(q);
      nb.index = maps_[static_cast<std::size_t>(label)][nb.index];
      return nb;
    }
    return all_.nearest(q);
  }

 private:
  KdTree all_;
  std::vector<KdTree> trees_;
  std::vector<std::vector<std::size_t>> maps_;
};

inline int label_of(const LabeledCloud& c, std::size_t i) { return c.labels.empty() ? -1 : c.labels[i]; }

/// Mean over target points of min(distance to the moved source, cap).
inline double alignment_score(const LabeledCloud& source, const LabeledCloud& target, const RigidTransform& t,
                              double cap, bool use_labels) {
  const LabeledIndex index(source, t, use_labels);
  double s = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j)
    s += std::min(index.nearest(target.points[j], label_of(target, j)).distance, cap);
  return s / static_cast<double>(target.size());
}

/// Robust rigid refinement for a partial target: every target point pulls
/// on its nearest moved source point with a Cauchy weight.
inline RigidTransform polish_rigid(const LabeledCloud& source, const LabeledCloud& target, RigidTransform t,
                                   const PolishConfig& cfg, bool use_labels) {
  Points a(target.size());
  std::vector<double> w(target.size());
  const double c2 = cfg.robust_scale * cfg.robust_scale;
  for (int it = 0; it < cfg.iterations; ++it) {
    const LabeledIndex index(source, t, use_labels);
    for (std::size_t j = 0; j < target.size(); ++j) {
      const Neighbor nb = index.nearest(target.points[j], label_of(target, j));
      a[j] = source.points[nb.index];
      w[j] = 1.0 / (1.0 + nb.distance * nb.distance / c2);
    }
    RigidTransform next;
    try {
      next = fit_rigid(a, target.points, w);
    } catch (const Error&) {
      break;
    }
    const double dr = rotation_angle_between(next.rotation, t.rotation);
    const double dt = (next.translation - t.translation).norm();
    t = next;
    if (dr < cfg.tolerance && dt < cfg.tolerance) break;
  }
  return t;
}

/// Pairs every target point with its nearest aligned source point, keeps
/// pairs within the radius, one per source point (the closest), scored
/// 1 - d / radius.
inline CorrespondenceSet guided_correspondences(const LabeledCloud& source, const LabeledCloud& target,
                                                const RigidTransform& t, const GuidedConfig& cfg, bool use_labels) {
  const LabeledIndex index(source, t, use_labels);
  std::vector<std::optional<Correspondence>> best(source.size());
  std::vector<double> best_d(source.size(), 0.0);
  for (std::size_t j = 0; j < target.size(); ++j) {
    const Neighbor nb = index.nearest(target.points[j], label_of(target, j));
    if (nb.distance > cfg.radius) continue;
    if (!best[nb.index] || nb.distance < best_d[nb.index]) {
      best[nb.index] = Correspondence{nb.index, j, std::clamp(1.0 - nb.distance / cfg.radius, 0.0, 1.0)};
      best_d[nb.index] = nb.distance;
    }
  }
  if (cfg.reverse_radius > 0.0) {
    const LabeledIndex back(target, RigidTransform::identity(), use_labels);
    const Points moved = apply_rigid(t, PointSpan(source.points));
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (best[i]) continue;
      const Neighbor nb = back.nearest(moved[i], label_of(source, i));
      if (nb.distance > cfg.reverse_radius) continue;
      best[i] = Correspondence{i, nb.index, std::clamp(1.0 - nb.distance / cfg.radius, 0.0, 1.0)};
    }
  }
  CorrespondenceSet out;
  for (const auto& c : best)
    if (c) out.pairs.push_back(*c);
  if (cfg.max_pairs > 0 && out.size() > cfg.max_pairs) {
    std::stable_sort(out.pairs.begin(), out.pairs.end(),
                     [](const Correspondence& a, const Correspondence& b) { return a.score > b.score; });
    out.pairs.resize(cfg.max_pairs);
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const Correspondence& a, const Correspondence& b) { return a.source < b.source; });
  }
  return out;
}

/// Rigid alignment tau and sparse correspondences sigma between a complete
/// template and a partial target.
///
/// Descriptors at every radius are matched with cross-scale voting and fed
/// to RANSAC. The RANSAC pose (and optionally the unmoved pose) is polished
/// against the whole target and the best-scoring one is kept; sigma is then
/// re-derived by guided nearest-neighbour matching under that pose.
inline CoarseResult coarse_register(const LabeledCloud& source, const LabeledCloud& target,
                                    const CoarseConfig& cfg = {}) {
  if (source.size() < 30 || target.size() < 30)
    throw Error(ErrorCode::InvalidConfig, "coarse registration needs >= 30 points per cloud");
  CoarseResult out;
  std::vector<std::pair<std::string, RigidTransform>> hypotheses;
  try {
    const DescriptorSet ds = compute_descriptors(source, cfg.descriptors);
    const DescriptorSet dt = compute_descriptors(target, cfg.descriptors);
    const CorrespondenceSet candidates = match_correspondences(ds, dt, cfg.matching);
    out.candidate_pairs = candidates.size();
    const RansacResult rr = ransac_rigid(source.points, target.points, candidates, cfg.ransac);
    out.ransac_inliers = rr.inliers.size();
    out.inlier_ratio = rr.inlier_ratio;
    out.low_confidence = rr.low_confidence;
    hypotheses.emplace_back("ransac", rr.transform);
  } catch (const Error& e) {
    const bool recoverable = e.code() == ErrorCode::NoCorrespondences || e.code() == ErrorCode::RegistrationFailed ||
                             e.code() == ErrorCode::InsufficientDensity;
    if (!recoverable || !cfg.identity_hypothesis) throw;
    out.descriptor_failure = e.what();
    out.low_confidence = true;
  }
  if (cfg.identity_hypothesis) hypotheses.emplace_back("identity", RigidTransform::identity());

  double best_score = std::numeric_limits<double>::infinity();
  for (const auto& [name, pose] : hypotheses) {
    const RigidTransform polished = polish_rigid(source, target, pose, cfg.polish, cfg.use_labels);
    const double score = alignment_score(source, target, polished, cfg.polish.score_cap, cfg.use_labels);
    if (score < best_score) {
      best_score = score;
      out.transform = polished;
      out.hypothesis = name;
    }
  }
  out.alignment_score = best_score;
  out.correspondences = guided_correspondences(source, target, out.transform, cfg.guided, cfg.use_labels);
  if (out.correspondences.size() < 3)
    throw Error(ErrorCode::RegistrationFailed, "fewer than 3 correspondences survive alignment");
  out.initial_chamfer = chamfer_distance(apply_rigid(out.transform, PointSpan(source.points)), target.points);
  return out;
}

}  // namespace c2p::coarse
