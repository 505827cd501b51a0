#pragma once

#include <Eigen/Eigenvalues>

#include "c2p/geom/types.hpp"

namespace c2p {

struct PrincipalFrame {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns: descending variance, right-handed
  Vec3 variances = Vec3::Zero();
};

inline Vec3 centroid(PointSpan points) {
  Vec3 c = Vec3::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

inline PrincipalFrame principal_frame(PointSpan points) {
  PrincipalFrame f;
  f.center = centroid(points);
  if (points.size() < 2) return f;
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - f.center;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  // Eigen sorts ascending; flip to descending.
  for (int i = 0; i < 3; ++i) {
    f.axes.col(i) = eig.eigenvectors().col(2 - i);
    f.variances[i] = eig.eigenvalues()[2 - i];
  }
  // Sign convention: largest |component| of each axis is positive.
  for (int i = 0; i < 2; ++i) {
    Eigen::Index arg = 0;
    f.axes.col(i).cwiseAbs().maxCoeff(&arg);
    if (f.axes(arg, i) < 0.0) f.axes.col(i) = -f.axes.col(i);
  }
  f.axes.col(2) = f.axes.col(0).cross(f.axes.col(1));
  return f;
}

}  // namespace c2p
