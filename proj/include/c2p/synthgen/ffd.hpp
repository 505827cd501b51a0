#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "c2p/geom/pca.hpp"
#include "c2p/geom/types.hpp"
#include "c2p/rng.hpp"
#include "c2p/synthgen/params.hpp"

namespace c2p::synthgen {

/// Regular control lattice over an oriented box with piecewise-trilinear
/// interpolation of control-point displacements.
class Lattice {
 public:
  Lattice(const Vec3& origin, const Mat3& axes, const Vec3& extent, std::array<int, 3> resolution)
      : origin_(origin), axes_(axes), extent_(extent), res_(resolution) {
    for (int r : res_)
      if (r < 2) throw Error(ErrorCode::InvalidConfig, "lattice resolution must be >= 2 per axis");
    for (int a = 0; a < 3; ++a)
      if (!(extent_[a] > 0.0)) throw Error(ErrorCode::InvalidConfig, "lattice box has zero extent");
    rest_.resize(static_cast<std::size_t>(res_[0] * res_[1] * res_[2]));
    for (int i = 0; i < res_[0]; ++i)
      for (int j = 0; j < res_[1]; ++j)
        for (int k = 0; k < res_[2]; ++k) {
          const Vec3 local(extent_[0] * i / (res_[0] - 1), extent_[1] * j / (res_[1] - 1),
                           extent_[2] * k / (res_[2] - 1));
          rest_[index(i, j, k)] = origin_ + axes_ * local;
        }
    displacement_.assign(rest_.size(), Vec3::Zero());
  }

  /// Box fitted to `points` in their principal frame with a relative margin.
  static Lattice fit(PointSpan points, std::array<int, 3> resolution, double margin = 0.05) {
    const PrincipalFrame frame = principal_frame(points);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : points) {
      const Vec3 q = frame.axes.transpose() * (p - frame.center);
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const Vec3 size = hi - lo;
    const double floor = 0.05 * size.maxCoeff();
    Vec3 pad;
    for (int a = 0; a < 3; ++a) pad[a] = std::max(margin * size[a], floor);
    if (!(size.maxCoeff() > 0.0)) throw Error(ErrorCode::InvalidConfig, "structure has zero extent");
    lo -= pad;
    hi += pad;
    return Lattice(frame.center + frame.axes * lo, frame.axes, hi - lo, resolution);
  }

  std::array<int, 3> resolution() const { return res_; }
  const Mat3& axes() const { return axes_; }
  const Vec3& extent() const { return extent_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>((i * res_[1] + j) * res_[2] + k);
  }

  const Vec3& rest_position(int i, int j, int k) const { return rest_[index(i, j, k)]; }
  Vec3& displacement(int i, int j, int k) { return displacement_[index(i, j, k)]; }
  const Points& displacements() const { return displacement_; }
  const Points& rest_positions() const { return rest_; }

  /// Moves control point (i,j,k) so that it sits at `target`.
  void set_position(int i, int j, int k, const Vec3& target) {
    displacement_[index(i, j, k)] = target - rest_[index(i, j, k)];
  }

  bool contains(const Vec3& p, double tol = 1e-9) const {
    const Vec3 q = axes_.transpose() * (p - origin_);
    for (int a = 0; a < 3; ++a)
      if (q[a] < -tol * extent_[a] || q[a] > extent_[a] * (1.0 + tol)) return false;
    return true;
  }

  /// Interpolated displacement at p.
  Vec3 displacement_at(const Vec3& p) const {
    const Vec3 q = axes_.transpose() * (p - origin_);
    std::array<int, 3> cell{};
    std::array<double, 3> frac{};
    for (int a = 0; a < 3; ++a) {
      const double u = q[a] / extent_[a] * (res_[a] - 1);
      if (u < -1e-9 || u > (res_[a] - 1) + 1e-9)
        throw Error(ErrorCode::Internal, "point lies outside its deformation lattice");
      const int c = std::clamp(static_cast<int>(std::floor(u)), 0, res_[a] - 2);
      cell[a] = c;
      frac[a] = std::clamp(u - c, 0.0, 1.0);
    }
    Vec3 d = Vec3::Zero();
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                           (dk ? frac[2] : 1.0 - frac[2]);
          d += w * displacement_[index(cell[0] + di, cell[1] + dj, cell[2] + dk)];
        }
    return d;
  }

  Vec3 deform(const Vec3& p) const { return p + displacement_at(p); }

  double max_control_displacement() const {
    double m = 0.0;
    for (const auto& d : displacement_) m = std::max(m, d.norm());
    return m;
  }

 private:
  Vec3 origin_;
  Mat3 axes_;
  Vec3 extent_;
  std::array<int, 3> res_;
  Points rest_;
  Points displacement_;
};

/// Randomizes one structure's lattice: each principal axis is a group that
/// receives a scale about the box centre plus a displacement profile shared
/// by its layers of control points. The profile is a random offset, shear and
/// bend along the axis, so neighbouring layers move coherently; every
/// component stays within the axis bound.
inline void randomize_lattice(Lattice& lattice, const NonRigidParams& p, Rng& rng) {
  const auto res = lattice.resolution();
  std::array<double, 3> scale{};
  std::array<std::vector<Vec3>, 3> layer_offsets;
  for (int a = 0; a < 3; ++a) {
    scale[static_cast<std::size_t>(a)] = rng.uniform(p.scale_bounds[0], p.scale_bounds[1]);
    const double b = p.displacement_bounds[static_cast<std::size_t>(a)];
    Vec3 c0, c1, c2;
    for (int c = 0; c < 3; ++c) {
      c0[c] = rng.uniform(-b, b) / 3.0;
      c1[c] = rng.uniform(-b, b) / 3.0;
      c2[c] = rng.uniform(-b, b) / 3.0;
    }
    const int n = res[static_cast<std::size_t>(a)];
    for (int layer = 0; layer < n; ++layer) {
      const double s = n > 1 ? 2.0 * layer / (n - 1) - 1.0 : 0.0;
      const Vec3 local = c0 + s * c1 + (s * s - 1.0 / 3.0) * c2;
      layer_offsets[static_cast<std::size_t>(a)].push_back(lattice.axes() * local);
    }
  }
  const Vec3 half = 0.5 * lattice.extent();
  for (int i = 0; i < res[0]; ++i)
    for (int j = 0; j < res[1]; ++j)
      for (int k = 0; k < res[2]; ++k) {
        const std::array<int, 3> ijk = {i, j, k};
        Vec3 local_scale;
        for (int a = 0; a < 3; ++a) {
          const double coord = lattice.extent()[a] * ijk[static_cast<std::size_t>(a)] / (res[static_cast<std::size_t>(a)] - 1);
          local_scale[a] = (scale[static_cast<std::size_t>(a)] - 1.0) * (coord - half[a]);
        }
        Vec3 d = lattice.axes() * local_scale;
        for (int a = 0; a < 3; ++a) d += layer_offsets[static_cast<std::size_t>(a)][static_cast<std::size_t>(ijk[static_cast<std::size_t>(a)])];
        lattice.displacement(i, j, k) = d;
      }
}

/// Per-structure lattice deformation. Labels, structure names and point
/// order are preserved; support points and landmarks follow their
/// structure's lattice.
inline LabeledCloud simulate_nonrigid(const LabeledCloud& cloud, const NonRigidParams& params) {
  params.validate();
  cloud.validate(true);
  LabeledCloud out = cloud;
  Rng rng(derive_seed(params.seed, 0xffd));
  for (int k = 0; k < cloud.structure_count(); ++k) {
    const auto idx = cloud.indices_of(k);
    Points pts;
    pts.reserve(idx.size());
    for (std::size_t i : idx) pts.push_back(cloud.points[i]);
    Lattice lattice = Lattice::fit(pts, params.lattice_resolution);
    randomize_lattice(lattice, params, rng);
    for (std::size_t i : idx) out.points[i] = lattice.deform(cloud.points[i]);
    auto& sp = out.support_points[static_cast<std::size_t>(k)];
    sp = lattice.deform(sp);
    for (auto& lm : out.landmarks)
      if (lm.structure == k) lm.position = lattice.deform(lm.position);
  }
  return out;
}

}  // namespace c2p::synthgen
