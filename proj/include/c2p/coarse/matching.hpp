#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <vector>

#include "c2p/coarse/descriptors.hpp"

namespace c2p::coarse {

struct MatchConfig {
  int min_votes = 2;               // scales that must agree on a mutual pair
  bool within_structure = true;    // only pair keypoints with the same label
  std::size_t max_pairs = 512;     // cap, by score then descriptor distance
};

namespace detail {

/// Row-wise best column under squared L2, ties to the lowest column.
inline std::vector<Eigen::Index> best_columns(const Eigen::MatrixXd& dist) {
  std::vector<Eigen::Index> best(static_cast<std::size_t>(dist.rows()), -1);
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    double b = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < dist.cols(); ++j)
      if (dist(i, j) < b) b = dist(i, j), best[static_cast<std::size_t>(i)] = j;
  }
  return best;
}

inline Eigen::MatrixXd descriptor_distances(const std::vector<Descriptor>& a, const std::vector<Descriptor>& b,
                                            const std::vector<int>& la, const std::vector<int>& lb,
                                            bool within_structure) {
  Eigen::MatrixXd A(kDescriptorSize, static_cast<Eigen::Index>(a.size()));
  Eigen::MatrixXd B(kDescriptorSize, static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = a[i];
  for (std::size_t j = 0; j < b.size(); ++j) B.col(static_cast<Eigen::Index>(j)) = b[j];
  Eigen::MatrixXd d = (-2.0 * A.transpose() * B).colwise() + A.colwise().squaredNorm().transpose();
  d.rowwise() += B.colwise().squaredNorm();
  d = d.cwiseMax(0.0);
  if (within_structure)
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        if (la[static_cast<std::size_t>(i)] != lb[static_cast<std::size_t>(j)])
          d(i, j) = std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace detail

/// Mutual-nearest descriptor matching per scale, kept when at least
/// `min_votes` scales agree. Pair score = voting fraction of scales.
/// Indices in the result refer to the described clouds (not keypoint slots).
inline CorrespondenceSet match_correspondences(const DescriptorSet& src, const DescriptorSet& tgt,
                                               const MatchConfig& cfg = {}) {
  if (src.radii != tgt.radii) throw Error(ErrorCode::InvalidConfig, "descriptor sets use different radii");
  if (src.features.size() != src.radii.size() || tgt.features.size() != tgt.radii.size())
    throw Error(ErrorCode::InvalidConfig, "descriptor set is incomplete");
  const std::size_t scales = src.radii.size();
  const int needed = std::min<int>(cfg.min_votes, static_cast<int>(scales));
  const auto ns = src.keypoints.size();
  const auto nt = tgt.keypoints.size();

  std::vector<int> votes(ns * nt, 0);
  std::vector<double> dist_sum(ns * nt, 0.0);
  std::vector<std::size_t> touched;
  for (std::size_t s = 0; s < scales; ++s) {
    const Eigen::MatrixXd d = detail::descriptor_distances(src.features[s], tgt.features[s], src.keypoint_labels,
                                                           tgt.keypoint_labels, cfg.within_structure);
    const auto fwd = detail::best_columns(d);
    const auto bwd = detail::best_columns(d.transpose());
    for (std::size_t i = 0; i < ns; ++i) {
      const Eigen::Index j = fwd[i];
      if (j < 0 || bwd[static_cast<std::size_t>(j)] != static_cast<Eigen::Index>(i)) continue;
      if (!std::isfinite(d(static_cast<Eigen::Index>(i), j))) continue;
      const std::size_t cell = i * nt + static_cast<std::size_t>(j);
      if (votes[cell] == 0) touched.push_back(cell);
      ++votes[cell];
      dist_sum[cell] += d(static_cast<Eigen::Index>(i), j);
    }
  }

  struct Candidate {
    std::size_t cell;
    double score;
    double dist;
  };
  std::vector<Candidate> accepted;
  for (std::size_t cell : touched)
    if (votes[cell] >= needed)
      accepted.push_back({cell, static_cast<double>(votes[cell]) / static_cast<double>(scales),
                          dist_sum[cell] / votes[cell]});
  std::sort(accepted.begin(), accepted.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.cell < b.cell;
  });
  if (cfg.max_pairs > 0 && accepted.size() > cfg.max_pairs) accepted.resize(cfg.max_pairs);
  if (accepted.empty()) throw Error(ErrorCode::NoCorrespondences, "no mutual descriptor matches survived voting");

  CorrespondenceSet out;
  for (const auto& c : accepted)
    out.pairs.push_back({src.keypoints[c.cell / nt], tgt.keypoints[c.cell % nt], c.score});
  std::sort(out.pairs.begin(), out.pairs.end(), [](const Correspondence& a, const Correspondence& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  return out;
}

}  // namespace c2p::coarse
