#pragma once

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "c2p/geom/kdtree.hpp"
#include "c2p/geom/pca.hpp"

namespace c2p::coarse {

inline constexpr int kBinsPerFeature = 11;
inline constexpr int kDescriptorSize = 3 * kBinsPerFeature;
using Descriptor = Eigen::Matrix<double, kDescriptorSize, 1>;

/// Histogram descriptors at several radii for a keypoint subset.
struct DescriptorSet {
  std::vector<double> radii;                  // mm, ascending
  std::vector<std::size_t> keypoints;         // indices into the described cloud
  std::vector<int> keypoint_labels;           // structure label per keypoint
  std::vector<std::vector<Descriptor>> features;  // [scale][keypoint], each L1-normalised
  Points points;                              // keypoint coordinates
};

struct DescriptorConfig {
  std::vector<double> radii = {0.75, 1.5, 3.0};
  double keypoint_fraction = 0.3;
};

namespace detail {

/// Smooth radial falloff; zero at the radius so neighbourhood membership
/// never changes a descriptor discontinuously.
inline double falloff(double d, double r) {
  const double t = d / r;
  if (t >= 1.0) return 0.0;
  const double u = 1.0 - t * t;
  return u * u;
}

/// Adds `weight` to a histogram with linear interpolation between the two
/// nearest bin centres. Circular features wrap around.
inline void soft_bin(Descriptor& h, int offset, double value, double lo, double hi, double weight, bool circular) {
  const double pos = (value - lo) / (hi - lo) * kBinsPerFeature - 0.5;
  const double f = std::floor(pos);
  const double frac = pos - f;
  int b0 = static_cast<int>(f);
  int b1 = b0 + 1;
  if (circular) {
    b0 = ((b0 % kBinsPerFeature) + kBinsPerFeature) % kBinsPerFeature;
    b1 = ((b1 % kBinsPerFeature) + kBinsPerFeature) % kBinsPerFeature;
  } else {
    b0 = std::clamp(b0, 0, kBinsPerFeature - 1);
    b1 = std::clamp(b1, 0, kBinsPerFeature - 1);
  }
  h[offset + b0] += weight * (1.0 - frac);
  h[offset + b1] += weight * frac;
}

/// Darboux-frame angle triple of an oriented point pair (the point-feature
/// histogram pair features, with the canonical source choice).
inline std::array<double, 3> pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2) {
  Vec3 dp = p2 - p1;
  const double d = dp.norm();
  if (d == 0.0) return {0.0, 0.0, 0.0};
  dp /= d;
  Vec3 ns = n1;
  Vec3 nt = n2;
  double f3 = n1.dot(dp);
  const double a2 = n2.dot(dp);
  if (std::acos(std::min(1.0, std::abs(f3))) > std::acos(std::min(1.0, std::abs(a2)))) {
    ns = n2;
    nt = n1;
    dp = -dp;
    f3 = -a2;
  }
  Vec3 v = dp.cross(ns);
  const double vn = v.norm();
  if (vn == 0.0) return {0.0, 0.0, f3};
  v /= vn;
  const Vec3 w = ns.cross(v);
  return {std::atan2(w.dot(nt), ns.dot(nt)), v.dot(nt), f3};
}

}  // namespace detail

/// Normals from a falloff-weighted local plane fit, oriented away from the
/// cloud centroid (ties fall back to a fixed component-sign convention).
inline Points estimate_normals(PointSpan points, const KdTree& tree, double radius) {
  const Vec3 c = centroid(points);
  Points normals(points.size(), Vec3::UnitZ());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nbrs = tree.radius(points[i], radius);
    Vec3 mean = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t j : nbrs) {
      const double w = detail::falloff((points[j] - points[i]).norm(), radius);
      mean += w * points[j];
      wsum += w;
    }
    if (wsum <= 0.0 || nbrs.size() < 3) continue;
    mean /= wsum;
    Mat3 cov = Mat3::Zero();
    for (std::size_t j : nbrs) {
      const double w = detail::falloff((points[j] - points[i]).norm(), radius);
      const Vec3 d = points[j] - mean;
      cov += w * d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 n = eig.eigenvectors().col(0);
    const double side = n.dot(points[i] - c);
    if (std::abs(side) > 1e-9 * radius) {
      if (side < 0.0) n = -n;
    } else {
      Eigen::Index arg = 0;
      n.cwiseAbs().maxCoeff(&arg);
      if (n[arg] < 0.0) n = -n;
    }
    normals[i] = n;
  }
  return normals;
}

inline std::vector<std::size_t> select_keypoints(std::size_t n, double fraction) {
  std::vector<std::size_t> out;
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  for (std::size_t j = 0; j < count; ++j) {
    const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(j) / fraction));
    if (idx < n) out.push_back(idx);
  }
  return out;
}

/// Fast-point-feature-histogram style descriptors at each radius.
///
/// Each scale builds a simplified histogram (SPFH) per point from its
/// neighbours, then blends neighbouring SPFHs with inverse-distance
/// weights. Histograms use soft bins and a smooth radial falloff so that a
/// rigid motion of the cloud leaves them unchanged to rounding error.
inline DescriptorSet compute_descriptors(const LabeledCloud& cloud, const DescriptorConfig& cfg) {
  if (cloud.size() < 30) throw Error(ErrorCode::InvalidConfig, "descriptors need at least 30 points");
  if (cfg.radii.empty()) throw Error(ErrorCode::InvalidConfig, "no descriptor radii given");
  for (std::size_t r = 0; r < cfg.radii.size(); ++r)
    if (!(cfg.radii[r] > 0.0) || (r > 0 && !(cfg.radii[r] > cfg.radii[r - 1])))
      throw Error(ErrorCode::InvalidConfig, "descriptor radii must be positive and ascending");
  if (!(cfg.keypoint_fraction > 0.0 && cfg.keypoint_fraction <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "keypoint fraction must lie in (0, 1]");

  const PointSpan pts(cloud.points);
  const KdTree tree(pts);
  DescriptorSet out;
  out.radii = cfg.radii;
  out.keypoints = select_keypoints(pts.size(), cfg.keypoint_fraction);
  if (out.keypoints.empty()) throw Error(ErrorCode::InvalidConfig, "keypoint fraction selects no points");
  for (std::size_t k : out.keypoints) {
    out.points.push_back(pts[k]);
    out.keypoint_labels.push_back(cloud.labels[k]);
  }

  const double r0 = cfg.radii.front();
  std::size_t sparse = 0;
  for (std::size_t k : out.keypoints)
    if (tree.radius(pts[k], r0).size() < 6) ++sparse;  // the point itself + 5 neighbours
  if (2 * sparse > out.keypoints.size())
    throw Error(ErrorCode::InsufficientDensity,
                "radius " + std::to_string(r0) + " mm captures < 5 neighbours for most keypoints");

  const Points normals = estimate_normals(pts, tree, r0);

  for (double r : cfg.radii) {
    // SPFH is needed for keypoints and their neighbours only.
    std::vector<char> needed(pts.size(), 0);
    std::vector<std::vector<std::size_t>> key_nbrs;
    key_nbrs.reserve(out.keypoints.size());
    for (std::size_t k : out.keypoints) {
      key_nbrs.push_back(tree.radius(pts[k], r));
      for (std::size_t j : key_nbrs.back()) needed[j] = 1;
    }
    std::vector<Descriptor> spfh(pts.size(), Descriptor::Zero());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!needed[i]) continue;
      Descriptor h = Descriptor::Zero();
      double wsum = 0.0;
      for (std::size_t j : tree.radius(pts[i], r)) {
        if (j == i) continue;
        const double w = detail::falloff((pts[j] - pts[i]).norm(), r);
        if (w <= 0.0) continue;
        const auto f = detail::pair_features(pts[i], normals[i], pts[j], normals[j]);
        detail::soft_bin(h, 0, f[0], -std::numbers::pi, std::numbers::pi, w, true);
        detail::soft_bin(h, kBinsPerFeature, f[1], -1.0, 1.0, w, false);
        detail::soft_bin(h, 2 * kBinsPerFeature, f[2], -1.0, 1.0, w, false);
        wsum += w;
      }
      if (wsum > 0.0) h /= wsum;
      spfh[i] = h;
    }
    std::vector<Descriptor> scale_features;
    scale_features.reserve(out.keypoints.size());
    for (std::size_t q = 0; q < out.keypoints.size(); ++q) {
      const std::size_t k = out.keypoints[q];
      Descriptor h = spfh[k];
      Descriptor blend = Descriptor::Zero();
      double wsum = 0.0;
      for (std::size_t j : key_nbrs[q]) {
        if (j == k) continue;
        const double d = (pts[j] - pts[k]).norm();
        const double w = d > 0.0 ? detail::falloff(d, r) / d : 0.0;
        blend += w * spfh[j];
        wsum += w;
      }
      if (wsum > 0.0) h += blend / wsum;
      const double total = h.sum();
      if (total > 0.0) {
        h /= total;
      } else {
        h.setConstant(1.0 / kDescriptorSize);
      }
      scale_features.push_back(h);
    }
    out.features.push_back(std::move(scale_features));
  }
  return out;
}

}  // namespace c2p::coarse
