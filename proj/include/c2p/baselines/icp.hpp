#pragma once

#include <cmath>
#include <vector>

#include "c2p/geom/kdtree.hpp"
#include "c2p/geom/rigid.hpp"

namespace c2p::baselines {

struct IcpConfig {
  int max_iterations = 100;
  double tolerance = 1e-6;  // mm, on the RMS residual
};

struct IcpResult {
  RigidTransform transform;
  std::vector<double> residuals;  // RMS nearest-neighbour distance per iteration, mm
  int iterations = 0;
  bool converged = false;
};

/// Point-to-point rigid ICP from the identity pose.
inline IcpResult icp(PointSpan source, PointSpan target, const IcpConfig& cfg = {}) {
  if (source.size() < 3 || target.size() < 3)
    throw Error(ErrorCode::DegenerateCorrespondences, "ICP needs >= 3 points per cloud");
  const KdTree tree(target);
  IcpResult r;
  RigidTransform t = RigidTransform::identity();
  Points matched(source.size());
  auto residual = [&](const RigidTransform& pose) {
    double s = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Neighbor nb = tree.nearest(pose.apply(source[i]));
      matched[i] = target[nb.index];
      s += nb.distance * nb.distance;
    }
    return std::sqrt(s / static_cast<double>(source.size()));
  };
  r.residuals.push_back(residual(t));
  for (int it = 0; it < cfg.max_iterations; ++it) {
    RigidTransform next;
    try {
      next = fit_rigid(source, matched);
    } catch (const Error& e) {
      throw Error(ErrorCode::RegistrationFailed, std::string("ICP estimation failed: ") + e.what());
    }
    const Points keep = matched;
    const double res = residual(next);
    ++r.iterations;
    if (res > r.residuals.back()) {  // rounding noise at the fixed point
      matched = keep;
      r.converged = true;
      break;
    }
    t = next;
    const double change = r.residuals.back() - res;
    r.residuals.push_back(res);
    if (change < cfg.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.transform = t;
  return r;
}

}  // namespace c2p::baselines
