#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "c2p/error.hpp"

namespace c2p::synthgen {

/// Structure order of the generated middle-ear template.
inline const std::array<std::string, 5> kStructureNames = {
    "tympanic_membrane", "malleus", "incus", "stapes", "ear_canal"};

struct TemplateConfig {
  // Point counts in kStructureNames order.
  std::array<int, 5> points_per_structure = {700, 350, 350, 250, 1000};
  double scale = 1.0;  // multiplies every template dimension
  std::uint64_t seed = 7;

  void validate() const {
    for (int n : points_per_structure)
      if (n < 50) throw Error(ErrorCode::InvalidConfig, "each structure needs at least 50 points");
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw Error(ErrorCode::InvalidConfig, "template scale must be positive");
  }
};

/// Lattice deformation parameters. Index 0/1/2 of the per-group arrays are
/// the length/width/thickness axes of each structure's principal frame.
struct NonRigidParams {
  std::array<int, 3> lattice_resolution = {4, 4, 4};
  std::array<double, 3> displacement_bounds = {2.0, 2.0, 1.4};  // mm, per axis group
  std::array<double, 2> scale_bounds = {0.82, 1.18};
  std::uint64_t seed = 0;

  bool is_null() const {
    return displacement_bounds == std::array<double, 3>{0.0, 0.0, 0.0} && scale_bounds[0] == 1.0 &&
           scale_bounds[1] == 1.0;
  }

  void validate() const {
    for (int r : lattice_resolution)
      if (r < 2) throw Error(ErrorCode::InvalidConfig, "lattice resolution must be >= 2 per axis");
    for (double b : displacement_bounds)
      if (!std::isfinite(b) || b < 0.0) throw Error(ErrorCode::InvalidConfig, "displacement bounds must be finite, >= 0");
    if (!(scale_bounds[0] > 0.0) || !(scale_bounds[0] <= scale_bounds[1]) || !std::isfinite(scale_bounds[1]))
      throw Error(ErrorCode::InvalidConfig, "scale bounds must be positive and ordered");
  }
};

/// Armature parameters. The global pose moves the whole ear; each chain
/// bone (membrane, malleus, incus, stapes) then rotates about its
/// articulation pivot relative to its parent. Angles are drawn per axis.
struct RigidParams {
  double root_rotation_bound = 0.05;     // rad
  double root_translation_bound = 1.0;   // mm
  std::array<double, 4> bone_rotation_bounds = {0.075, 0.15, 0.15, 0.18};  // rad
  std::uint64_t seed = 0;

  bool is_null() const {
    return root_rotation_bound == 0.0 && root_translation_bound == 0.0 &&
           bone_rotation_bounds == std::array<double, 4>{0.0, 0.0, 0.0, 0.0};
  }

  void validate() const {
    constexpr double half_pi = 1.5707963267948966;
    auto check_angle = [](double b) {
      if (!std::isfinite(b) || b < 0.0 || b >= half_pi)
        throw Error(ErrorCode::InvalidConfig, "rotation bounds must lie in [0, pi/2)");
    };
    check_angle(root_rotation_bound);
    for (double b : bone_rotation_bounds) check_angle(b);
    if (!std::isfinite(root_translation_bound) || root_translation_bound < 0.0)
      throw Error(ErrorCode::InvalidConfig, "translation bound must be finite, >= 0");
  }
};

struct SamplingParams {
  std::array<double, 2> visible_ratio_range = {0.3, 0.9};
  double support_weight = 0.6;    // alpha
  double score_spread = 0.15;     // stddev of the Gaussian score term
  double depth_attenuation = 0.15;  // per mm; 0 disables posterior thinning
  std::array<double, 2> random_factor_range = {0.2, 1.0};
  double jitter = 0.05;           // mm, per-coordinate uniform amplitude
  std::vector<std::string> posterior_structures = {"incus", "stapes"};
  std::uint64_t seed = 0;

  void validate() const {
    auto ordered = [](const std::array<double, 2>& r) { return std::isfinite(r[0]) && std::isfinite(r[1]) && r[0] <= r[1]; };
    if (!ordered(visible_ratio_range) || visible_ratio_range[0] <= 0.0 || visible_ratio_range[1] > 1.0)
      throw Error(ErrorCode::InvalidConfig, "visible ratio range must be ordered within (0, 1]");
    if (!ordered(random_factor_range) || random_factor_range[0] < 0.0)
      throw Error(ErrorCode::InvalidConfig, "random factor range must be ordered and non-negative");
    if (!(support_weight >= 0.0 && support_weight <= 1.0))
      throw Error(ErrorCode::InvalidConfig, "support weight must lie in [0, 1]");
    if (!(score_spread >= 0.0) || !(depth_attenuation >= 0.0) || !(jitter >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "spread, attenuation and jitter must be >= 0");
  }
};

struct GeneratorConfig {
  TemplateConfig template_config;
  NonRigidParams nonrigid;
  RigidParams rigid;
  SamplingParams sampling;

  void validate() const {
    template_config.validate();
    nonrigid.validate();
    rigid.validate();
    sampling.validate();
  }
};

/// Rigid-only variant: lattice and articulations switched off, the global
/// pose drawn from wider bounds.
inline GeneratorConfig rigid_only(GeneratorConfig cfg, double rotation_bound = 0.35, double translation_bound = 2.0) {
  cfg.nonrigid.displacement_bounds = {0.0, 0.0, 0.0};
  cfg.nonrigid.scale_bounds = {1.0, 1.0};
  cfg.rigid.bone_rotation_bounds = {0.0, 0.0, 0.0, 0.0};
  cfg.rigid.root_rotation_bound = rotation_bound;
  cfg.rigid.root_translation_bound = translation_bound;
  return cfg;
}

}  // namespace c2p::synthgen
