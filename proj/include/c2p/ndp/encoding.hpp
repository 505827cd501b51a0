#pragma once

#include <Eigen/Core>

#include <cmath>

#include "c2p/geom/types.hpp"

namespace c2p::ndp {

using Encoding = Eigen::Matrix<double, 6, 1>;

/// Frequency multiplier 2^(level + k0), exact for any representable exponent.
inline double level_frequency(int level, int k0) { return std::ldexp(1.0, level + k0); }

/// (sin(f p), cos(f p)) with f = 2^(level + k0); p in unit-normalised coordinates.
/// Kept out of line: inlined copies may be lowered to sincos, which can
/// differ from sin/cos in the last bit.
[[gnu::noinline]] inline Encoding sinusoidal_encode(const Vec3& p, int level, int k0) {
  const double f = level_frequency(level, k0);
  Encoding e;
  for (int c = 0; c < 3; ++c) {
    e[c] = std::sin(f * p[c]);
    e[c + 3] = std::cos(f * p[c]);
  }
  return e;
}

/// Column-wise encoding of a point batch (6 x n).
inline Eigen::MatrixXd encode_batch(PointSpan points, int level, int k0) {
  Eigen::MatrixXd out(6, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = sinusoidal_encode(points[i], level, k0);
  return out;
}

}  // namespace c2p::ndp
