#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "c2p/geom/pca.hpp"
#include "c2p/geom/rigid.hpp"
#include "c2p/rng.hpp"
#include "c2p/synthgen/params.hpp"

namespace c2p::synthgen {

struct Bone {
  int structure = -1;
  int parent = -1;  // index into Armature::bones, -1 for the chain root
  Vec3 pivot = Vec3::Zero();
};

/// Kinematic chain membrane -> malleus -> incus -> stapes. Structures that
/// are not bones (the canal wall) move with the global pose only.
struct Armature {
  std::vector<Bone> bones;
  Vec3 root_pivot = Vec3::Zero();  // centre of the global-pose rotation
};

namespace detail {

/// Midpoint of the closest point pair between two structures.
inline Vec3 contact_point(const LabeledCloud& cloud, int a, int b) {
  const auto ia = cloud.indices_of(a);
  const auto ib = cloud.indices_of(b);
  double best = std::numeric_limits<double>::infinity();
  Vec3 mid = Vec3::Zero();
  for (std::size_t i : ia)
    for (std::size_t j : ib) {
      const double d = (cloud.points[i] - cloud.points[j]).squaredNorm();
      if (d < best) {
        best = d;
        mid = 0.5 * (cloud.points[i] + cloud.points[j]);
      }
    }
  return mid;
}

}  // namespace detail

/// Articulation pivots sit where neighbouring structures come closest; the
/// membrane hinges where it meets the canal wall.
inline Armature build_armature(const LabeledCloud& tmpl) {
  const std::array<const char*, 4> chain = {"tympanic_membrane", "malleus", "incus", "stapes"};
  const int canal = tmpl.find_structure("ear_canal");
  Armature arm;
  arm.root_pivot = centroid(tmpl.points);
  int prev_structure = canal;
  for (std::size_t b = 0; b < chain.size(); ++b) {
    const int s = tmpl.find_structure(chain[b]);
    if (s < 0) throw Error(ErrorCode::InvalidConfig, std::string("template lacks structure '") + chain[b] + "'");
    Bone bone;
    bone.structure = s;
    bone.parent = static_cast<int>(b) - 1;
    bone.pivot = prev_structure >= 0 ? detail::contact_point(tmpl, prev_structure, s) : centroid(tmpl.points);
    arm.bones.push_back(bone);
    prev_structure = s;
  }
  return arm;
}

/// World transforms drawn for one sample: the global pose and one
/// cumulative transform per bone.
struct ArmaturePose {
  RigidTransform root;
  std::vector<RigidTransform> bones;

  /// Transform moving the points of `structure`.
  RigidTransform for_structure(const Armature& arm, int structure) const {
    for (std::size_t b = 0; b < arm.bones.size(); ++b)
      if (arm.bones[b].structure == structure) return bones[b];
    return root;
  }
};

inline Vec3 random_vector(Rng& rng, double bound) {
  return {rng.uniform(-bound, bound), rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
}

inline ArmaturePose draw_pose(const Armature& arm, const RigidParams& p) {
  p.validate();
  Rng rng(derive_seed(p.seed, 0xa2a));
  ArmaturePose pose;
  const Mat3 root_rot = rotation_from_vector(random_vector(rng, p.root_rotation_bound));
  const Vec3 root_shift = random_vector(rng, p.root_translation_bound);
  pose.root = rotation_about(arm.root_pivot, root_rot);
  pose.root.translation += root_shift;
  for (std::size_t b = 0; b < arm.bones.size(); ++b) {
    const Bone& bone = arm.bones[b];
    const double bound = b < p.bone_rotation_bounds.size() ? p.bone_rotation_bounds[b] : 0.0;
    const RigidTransform local = rotation_about(bone.pivot, rotation_from_vector(random_vector(rng, bound)));
    const RigidTransform& parent = bone.parent < 0 ? pose.root : pose.bones[static_cast<std::size_t>(bone.parent)];
    pose.bones.push_back(parent.compose(local));
  }
  return pose;
}

/// Moves each structure rigidly by its bone's cumulative transform.
inline LabeledCloud apply_pose(const LabeledCloud& cloud, const Armature& arm, const ArmaturePose& pose) {
  LabeledCloud out = cloud;
  std::vector<RigidTransform> per_structure;
  for (int k = 0; k < cloud.structure_count(); ++k) per_structure.push_back(pose.for_structure(arm, k));
  auto is_identity = [](const RigidTransform& t) {
    return t.rotation == Mat3::Identity() && t.translation == Vec3::Zero();
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& t = per_structure[static_cast<std::size_t>(cloud.labels[i])];
    if (!is_identity(t)) out.points[i] = t.apply(cloud.points[i]);
  }
  for (std::size_t k = 0; k < out.support_points.size(); ++k)
    if (!is_identity(per_structure[k])) out.support_points[k] = per_structure[k].apply(cloud.support_points[k]);
  for (auto& lm : out.landmarks) {
    const auto& t = per_structure[static_cast<std::size_t>(lm.structure)];
    if (!is_identity(t)) lm.position = t.apply(lm.position);
  }
  return out;
}

inline LabeledCloud simulate_rigid(const LabeledCloud& cloud, const Armature& arm, const RigidParams& p) {
  return apply_pose(cloud, arm, draw_pose(arm, p));
}

}  // namespace c2p::synthgen
