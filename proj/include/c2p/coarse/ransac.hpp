#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "c2p/geom/rigid.hpp"
#include "c2p/rng.hpp"

namespace c2p::coarse {

struct RansacConfig {
  int iterations = 4000;
  double inlier_threshold = 0.75;  // mm
  int refinement_rounds = 10;
  double low_confidence_ratio = 0.05;
  std::uint64_t seed = 0;
};

struct RansacResult {
  RigidTransform transform;
  CorrespondenceSet inliers;
  double inlier_ratio = 0.0;
  bool low_confidence = false;
  int best_iteration = -1;
};

namespace detail {

inline std::vector<std::size_t> inlier_indices(PointSpan src, PointSpan tgt, const CorrespondenceSet& corr,
                                               const RigidTransform& t, double threshold) {
  std::vector<std::size_t> out;
  const double t2 = threshold * threshold;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const auto& c = corr.pairs[i];
    if ((t.apply(src[c.source]) - tgt[c.target]).squaredNorm() < t2) out.push_back(i);
  }
  return out;
}

inline RigidTransform fit_subset(PointSpan src, PointSpan tgt, const CorrespondenceSet& corr,
                                 const std::vector<std::size_t>& subset) {
  Points a;
  Points b;
  for (std::size_t i : subset) {
    a.push_back(src[corr.pairs[i].source]);
    b.push_back(tgt[corr.pairs[i].target]);
  }
  return fit_rigid(a, b);
}

}  // namespace detail

/// Three-pair hypotheses scored by inlier count (ties keep the earliest
/// iteration), then refined on the consensus set until it stops changing.
inline RansacResult ransac_rigid(PointSpan src, PointSpan tgt, const CorrespondenceSet& corr,
                                 const RansacConfig& cfg = {}) {
  if (corr.size() < 3) throw Error(ErrorCode::RegistrationFailed, "RANSAC needs at least 3 pairs");
  corr.validate(src.size(), tgt.size());
  Rng rng(derive_seed(cfg.seed, 0x4a5));
  const std::size_t n = corr.size();

  std::size_t best_count = 0;
  RigidTransform best;
  RansacResult result;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::size_t pick[3];
    pick[0] = rng.index(n);
    do pick[1] = rng.index(n); while (pick[1] == pick[0]);
    do pick[2] = rng.index(n); while (pick[2] == pick[0] || pick[2] == pick[1]);
    // Rigid motions preserve pairwise distances; reject inconsistent triples early.
    bool consistent = true;
    for (int a = 0; a < 3 && consistent; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const auto& ca = corr.pairs[pick[a]];
        const auto& cb = corr.pairs[pick[b]];
        const double ds = (src[ca.source] - src[cb.source]).norm();
        const double dt = (tgt[ca.target] - tgt[cb.target]).norm();
        if (std::abs(ds - dt) > 2.0 * cfg.inlier_threshold) {
          consistent = false;
          break;
        }
      }
    if (!consistent) continue;
    RigidTransform hyp;
    try {
      hyp = detail::fit_subset(src, tgt, corr, {pick[0], pick[1], pick[2]});
    } catch (const Error&) {
      continue;  // collinear triple
    }
    const std::size_t count = detail::inlier_indices(src, tgt, corr, hyp, cfg.inlier_threshold).size();
    if (count > best_count) {
      best_count = count;
      best = hyp;
      result.best_iteration = it;
    }
  }
  if (best_count < 3) throw Error(ErrorCode::RegistrationFailed, "best RANSAC hypothesis has fewer than 3 inliers");

  std::vector<std::size_t> inliers = detail::inlier_indices(src, tgt, corr, best, cfg.inlier_threshold);
  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    RigidTransform refined;
    try {
      refined = detail::fit_subset(src, tgt, corr, inliers);
    } catch (const Error&) {
      break;
    }
    auto next = detail::inlier_indices(src, tgt, corr, refined, cfg.inlier_threshold);
    if (next.size() < inliers.size()) break;  // refinement may not lose consensus
    best = refined;
    if (next == inliers) break;
    inliers = std::move(next);
  }

  result.transform = best;
  for (std::size_t i : inliers) result.inliers.pairs.push_back(corr.pairs[i]);
  result.inlier_ratio = static_cast<double>(inliers.size()) / static_cast<double>(n);
  result.low_confidence = result.inlier_ratio < cfg.low_confidence_ratio;
  return result;
}

}  // namespace c2p::coarse
