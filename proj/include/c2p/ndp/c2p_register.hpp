#pragma once

#include <chrono>
#include <string>

#include "c2p/coarse/coarse_register.hpp"
#include "c2p/ndp/pyramid.hpp"

namespace c2p {

struct C2PConfig {
  coarse::CoarseConfig coarse;
  ndp::PyramidConfig pyramid;
  bool allow_identity_init = false;
};

struct C2PDiagnostics {
  double initial_rigid_chamfer = 0.0;  // Chamfer(tau(P_exv), P_inv), mm
  double final_chamfer = 0.0;          // Chamfer(full map(P_exv), P_inv), mm
  std::string hypothesis;
  std::string stage1_failure;
  std::size_t correspondences = 0;
  std::size_t active_points = 0;
  std::vector<ndp::LevelTrace> trace;
  double coarse_seconds = 0.0;
  double ndp_seconds = 0.0;
};

struct C2PResult {
  RigidTransform tau;
  CorrespondenceSet sigma;
  DisplacementField phi_est;   // stage-2 motion after tau, per source point
  DisplacementField combined;  // x -> NDP(R x + t) minus x
  Points mapped;               // NDP(R x + t)
  C2PDiagnostics diagnostics;
};

/// Full two-stage registration of the complete template onto a partial scan.
inline C2PResult c2p_register(const LabeledCloud& source, const LabeledCloud& target, const C2PConfig& cfg = {}) {
  source.validate(false);
  target.validate(false);
  using clock = std::chrono::steady_clock;
  C2PResult r;
  const auto t0 = clock::now();
  try {
    const coarse::CoarseResult cr = coarse::coarse_register(source, target, cfg.coarse);
    r.tau = cr.transform;
    r.sigma = cr.correspondences;
    r.diagnostics.hypothesis = cr.hypothesis;
    r.diagnostics.stage1_failure = cr.descriptor_failure;
  } catch (const Error& e) {
    if (!cfg.allow_identity_init || e.code() == ErrorCode::InvalidConfig) throw;
    r.tau = RigidTransform::identity();
    r.diagnostics.hypothesis = "identity-init";
    r.diagnostics.stage1_failure = e.what();
    const auto ds = coarse::compute_descriptors(source, cfg.coarse.descriptors);
    const auto dt = coarse::compute_descriptors(target, cfg.coarse.descriptors);
    r.sigma = coarse::match_correspondences(ds, dt, cfg.coarse.matching);
  }
  const LabeledCloud aligned = apply_rigid(r.tau, source);
  r.diagnostics.initial_rigid_chamfer = chamfer_distance(aligned.points, target.points);
  r.diagnostics.correspondences = r.sigma.size();
  const auto t1 = clock::now();

  ndp::PyramidResult pr = ndp::ndp_register(aligned, target, r.sigma, cfg.pyramid);
  r.phi_est = std::move(pr.field);
  r.diagnostics.trace = std::move(pr.trace);
  r.diagnostics.active_points = pr.active_points;
  const auto t2 = clock::now();

  const std::size_t n = source.size();
  r.mapped.resize(n);
  r.combined.vectors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.mapped[i] = aligned.points[i] + r.phi_est.vectors[i];
    r.combined.vectors[i] = r.mapped[i] - source.points[i];
  }
  r.diagnostics.final_chamfer = chamfer_distance(r.mapped, target.points);
  r.diagnostics.coarse_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.diagnostics.ndp_seconds = std::chrono::duration<double>(t2 - t1).count();
  return r;
}

}  // namespace c2p
