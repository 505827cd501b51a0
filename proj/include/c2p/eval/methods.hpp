#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "c2p/baselines/cpd.hpp"
#include "c2p/baselines/icp.hpp"
#include "c2p/baselines/nicp.hpp"
#include "c2p/geom/chamfer.hpp"
#include "c2p/ndp/c2p_register.hpp"

namespace c2p::eval {

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"icp", "nicp", "cpd", "c2p"};
  return names;
}

inline bool is_method(const std::string& m) {
  for (const auto& n : method_names())
    if (n == m) return true;
  return false;
}

struct MethodConfigs {
  C2PConfig c2p;
  baselines::IcpConfig icp;
  baselines::NicpConfig nicp;
  baselines::CpdConfig cpd;
};

struct MethodOutput {
  DisplacementField field;  // per source point, in the source's original coordinates
  Points mapped;
  RigidTransform transform;  // rigid part (identity for the purely non-rigid baselines)
  CorrespondenceSet sigma;   // c2p only
  double initial_rigid_chamfer = 0.0;
  nlohmann::json diagnostics;
};

/// Registers `source` onto `target` with one of method_names().
inline MethodOutput run_method(const std::string& method, const LabeledCloud& source, const LabeledCloud& target,
                               const MethodConfigs& cfg) {
  MethodOutput out;
  if (method == "c2p") {
    C2PResult r = c2p_register(source, target, cfg.c2p);
    out.field = std::move(r.combined);
    out.mapped = std::move(r.mapped);
    out.transform = r.tau;
    out.sigma = std::move(r.sigma);
    out.initial_rigid_chamfer = r.diagnostics.initial_rigid_chamfer;
    const auto& d = r.diagnostics;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : d.trace)
      levels.push_back({{"level", l.level}, {"entry_loss", l.entry_loss}, {"exit_loss", l.exit_loss},
                        {"iterations", l.iterations}});
    out.diagnostics = {{"hypothesis", d.hypothesis},
                       {"stage1_failure", d.stage1_failure},
                       {"correspondences", d.correspondences},
                       {"active_points", d.active_points},
                       {"initial_rigid_chamfer_mm", d.initial_rigid_chamfer},
                       {"final_chamfer_mm", d.final_chamfer},
                       {"levels", levels},
                       {"coarse_seconds", d.coarse_seconds},
                       {"ndp_seconds", d.ndp_seconds}};
  } else if (method == "icp") {
    const auto r = baselines::icp(source.points, target.points, cfg.icp);
    out.transform = r.transform;
    out.mapped = apply_rigid(r.transform, PointSpan(source.points));
    out.field = DisplacementField::between(source.points, out.mapped);
    out.initial_rigid_chamfer = chamfer_distance(out.mapped, target.points);
    out.diagnostics = {{"iterations", r.iterations}, {"converged", r.converged}, {"residuals_mm", r.residuals}};
  } else if (method == "nicp") {
    auto r = baselines::nicp(source.points, target.points, cfg.nicp);
    out.mapped = std::move(r.mapped);
    out.field = std::move(r.field);
    out.initial_rigid_chamfer = chamfer_distance(source.points, target.points);
    out.diagnostics = {{"solves", r.solves}, {"energies", r.energies}, {"warnings", r.warnings},
                       {"stiffness", cfg.nicp.stiffness}};
  } else if (method == "cpd") {
    auto r = baselines::cpd_nonrigid(source.points, target.points, cfg.cpd);
    out.mapped = std::move(r.mapped);
    out.field = std::move(r.field);
    out.initial_rigid_chamfer = chamfer_distance(source.points, target.points);
    out.diagnostics = {{"iterations", r.iterations}, {"objective", r.objective}, {"sigma2_mm2", r.sigma2},
                       {"beta", cfg.cpd.beta}, {"lambda", cfg.cpd.lambda}, {"w", cfg.cpd.w}};
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown method '" + method + "' (valid: icp, nicp, cpd, c2p)");
  }
  return out;
}

}  // namespace c2p::eval
