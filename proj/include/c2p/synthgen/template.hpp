#pragma once

#include <cmath>
#include <numbers>

#include <limits>

#include "c2p/geom/pca.hpp"
#include "c2p/geom/rigid.hpp"
#include "c2p/geom/types.hpp"
#include "c2p/rng.hpp"
#include "c2p/synthgen/params.hpp"

namespace c2p::synthgen {

namespace detail {

inline Vec3 any_orthogonal(const Vec3& d) {
  const Vec3 helper = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return d.cross(helper).normalized();
}

/// Bent tube with a varying elliptic cross-section and rounded ends: the
/// ossicle primitive. The axis is a quadratic Bezier curve a -> ctrl -> b.
struct Tube {
  Vec3 a, ctrl, b;
  double r0, r_mid, r1;   // radius at start, middle and end
  double ellipticity = 1.0;  // minor/major ratio of the cross-section

  Vec3 center(double t) const { return (1 - t) * (1 - t) * a + 2 * (1 - t) * t * ctrl + t * t * b; }
  Vec3 tangent(double t) const { return 2 * (1 - t) * (ctrl - a) + 2 * t * (b - ctrl); }
  double radius(double t) const {
    // Quadratic through (0, r0), (0.5, r_mid), (1, r1).
    return r0 * (1 - t) * (1 - 2 * t) + 4 * r_mid * t * (1 - t) + r1 * t * (2 * t - 1);
  }
};

inline Vec3 sample_tube(Rng& rng, const Tube& tube) {
  // Rejection against the local area element |c'(t)| * r(t) (plus end caps).
  double max_side = 0.0;
  for (int i = 0; i <= 32; ++i) {
    const double t = i / 32.0;
    max_side = std::max(max_side, tube.tangent(t).norm() * tube.radius(t));
  }
  const double cap_weight = 2.0 * (tube.r0 * tube.r0 + tube.r1 * tube.r1);
  const double side_weight = 2.0 * std::numbers::pi * max_side * 0.8;
  const Vec3 ref = any_orthogonal((tube.b - tube.a).normalized());
  if (rng.uniform() * (side_weight + cap_weight) < cap_weight) {
    const bool start = rng.uniform() * (tube.r0 * tube.r0 + tube.r1 * tube.r1) < tube.r0 * tube.r0;
    const double t = start ? 0.0 : 1.0;
    const double r = start ? tube.r0 : tube.r1;
    const Vec3 d = (start ? -1.0 : 1.0) * tube.tangent(t).normalized();
    const Vec3 u = (ref - ref.dot(d) * d).normalized();
    const Vec3 v = d.cross(u);
    const double z = rng.uniform();
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double q = std::sqrt(std::max(0.0, 1.0 - z * z));
    return tube.center(t) + r * (q * std::cos(phi) * u + tube.ellipticity * q * std::sin(phi) * v + z * d);
  }
  for (;;) {
    const double t = rng.uniform();
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double accept = rng.uniform() * max_side;
    const Vec3 tan = tube.tangent(t);
    if (accept > tan.norm() * tube.radius(t)) continue;
    const Vec3 d = tan.normalized();
    const Vec3 u = (ref - ref.dot(d) * d).normalized();
    const Vec3 v = d.cross(u);
    return tube.center(t) + tube.radius(t) * (std::cos(phi) * u + tube.ellipticity * std::sin(phi) * v);
  }
}

}  // namespace detail

/// Synthetic middle ear in millimetres. The z axis points medially (away
/// from the external ear); the canal wall opens at z = -2 * scale.
///
/// Structures, in label order: tympanic membrane (elliptic conical shell),
/// malleus, incus and stapes (capsules forming a chain) and a partial
/// ear-canal cylinder. Support points are structure centroids; landmarks
/// are the extreme points along each structure's two dominant axes.
inline LabeledCloud build_template(const TemplateConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0x7e3a));
  const double s = config.scale;
  LabeledCloud cloud;
  cloud.structure_names.assign(kStructureNames.begin(), kStructureNames.end());

  auto add = [&](int label, const Vec3& p) {
    cloud.points.push_back(p * s);
    cloud.labels.push_back(label);
  };

  // Tympanic membrane: tilted elliptic cone, umbo drawn 1.5 mm medially,
  // with a shallow three-lobed ripple.
  {
    const Mat3 tilt = Eigen::AngleAxisd(0.3, Vec3::UnitX()).toRotationMatrix();
    for (int i = 0; i < config.points_per_structure[0]; ++i) {
      const double r = std::sqrt(rng.uniform());
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double depth = 1.5 * std::pow(1.0 - r, 1.3) + 0.6 * std::sin(3.0 * phi + 0.4) * r * (1.0 - r);
      const Vec3 p(4.2 * r * std::cos(phi), 3.6 * r * std::sin(phi), depth);
      add(0, tilt * p);
    }
  }
  // Ossicles: bent, tapered tubes.
  const detail::Tube bones[3] = {
      // malleus: slender manubrium along the membrane, bulbous head
      {{0.0, -0.3, 2.1}, {-0.4, 1.8, 2.2}, {0.4, 3.6, 3.3}, 0.25, 0.45, 0.9, 0.75},
      // incus: wide body tapering into a curved long process
      {{0.8, 3.9, 3.8}, {1.9, 2.4, 4.0}, {1.2, 0.9, 5.2}, 0.95, 0.55, 0.3, 0.7},
      // stapes: narrow head widening to an elliptic footplate
      {{1.2, 0.6, 5.5}, {1.5, 0.5, 6.2}, {1.3, 0.2, 7.0}, 0.3, 0.45, 0.75, 0.5},
  };
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < config.points_per_structure[static_cast<std::size_t>(k + 1)]; ++i)
      add(k + 1, detail::sample_tube(rng, bones[k]));
  // Ear canal wall: open 288-degree tube, z in [-2, 0], with a non-circular
  // cross-section that narrows towards the membrane.
  {
    auto wall_radius = [](double phi, double z) {
      return 4.0 * (1.0 + 0.1 * std::cos(2.0 * phi + 0.5) + 0.06 * std::sin(3.0 * phi)) * (1.0 - 0.04 * z);
    };
    const double r_max = 4.0 * 1.16 * 1.12;
    for (int i = 0; i < config.points_per_structure[4];) {
      const double phi = rng.uniform(0.0, 1.6 * std::numbers::pi);
      const double z = rng.uniform(-2.0, 0.0);
      const double r = wall_radius(phi, z);
      if (rng.uniform() * r_max > r) continue;
      add(4, Vec3(r * std::cos(phi), r * std::sin(phi), z));
      ++i;
    }
  }

  const int k_count = cloud.structure_count();
  cloud.support_points.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    Points pts;
    for (std::size_t i : cloud.indices_of(k)) pts.push_back(cloud.points[i]);
    const PrincipalFrame frame = principal_frame(pts);
    cloud.support_points[static_cast<std::size_t>(k)] = frame.center;
    for (int axis = 0; axis < 2; ++axis) {
      std::size_t lo = 0;
      std::size_t hi = 0;
      double vlo = std::numeric_limits<double>::infinity();
      double vhi = -vlo;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double v = frame.axes.col(axis).dot(pts[j] - frame.center);
        if (v < vlo) vlo = v, lo = j;
        if (v > vhi) vhi = v, hi = j;
      }
      cloud.landmarks.push_back({k, pts[lo]});
      cloud.landmarks.push_back({k, pts[hi]});
    }
  }
  cloud.validate(true);
  return cloud;
}

inline double bounding_box_diagonal(PointSpan points) {
  if (points.empty()) return 0.0;
  Vec3 lo = points.front();
  Vec3 hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace c2p::synthgen
