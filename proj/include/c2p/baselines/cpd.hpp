#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "c2p/geom/types.hpp"

namespace c2p::baselines {

struct CpdConfig {
  double beta = 2.0;
  double lambda = 3.0;
  double w = 0.1;
  int max_iterations = 150;
  double tolerance = 1e-8;        // relative objective change
  std::size_t max_centroids = 500;  // both clouds thinned by stride to at most this many points; 0 = all
};

struct CpdResult {
  DisplacementField field;
  Points mapped;
  std::vector<double> objective;  // negative log-likelihood plus motion-coherence prior, per EM step
  double sigma2 = 0.0;
  int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd to_matrix(PointSpan p, const Vec3& mean, double scale) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p.size()), 3);
  for (std::size_t i = 0; i < p.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = ((p[i] - mean) / scale).transpose();
  return m;
}

inline Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta) {
  Eigen::MatrixXd g(a.rows(), b.rows());
  const double s = 1.0 / (2.0 * beta * beta);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) g(i, j) = std::exp(-s * (a.row(i) - b.row(j)).squaredNorm());
  return g;
}

}  // namespace detail

/// Coherent Point Drift, non-rigid variant. Both clouds are normalised by
/// the source mean and RMS radius. Both clouds are thinned by the same stride
/// rule to at most `max_centroids` points, so identical inputs stay identical;
/// the kernel field is then evaluated at every source point.
inline CpdResult cpd_nonrigid(PointSpan source, PointSpan target, const CpdConfig& cfg = {}) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::EmptyCloud, "CPD needs non-empty clouds");
  if (!(cfg.w >= 0.0 && cfg.w < 1.0) || !(cfg.beta > 0.0) || !(cfg.lambda > 0.0))
    throw Error(ErrorCode::InvalidConfig, "CPD needs beta > 0, lambda > 0, 0 <= w < 1");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : source) mean += p;
  mean /= static_cast<double>(source.size());
  double var = 0.0;
  for (const auto& p : source) var += (p - mean).squaredNorm();
  const double scale = std::max(std::sqrt(var / static_cast<double>(source.size())), 1e-12);

  auto thin = [&](PointSpan cloud) {
    Points out;
    if (cfg.max_centroids > 0 && cloud.size() > cfg.max_centroids) {
      const double stride = static_cast<double>(cloud.size()) / static_cast<double>(cfg.max_centroids);
      for (std::size_t j = 0; j < cfg.max_centroids; ++j) out.push_back(cloud[static_cast<std::size_t>(j * stride)]);
    } else {
      out.assign(cloud.begin(), cloud.end());
    }
    return out;
  };
  const Points sub = thin(source);
  const Points target_sub = thin(target);

  const Eigen::MatrixXd x = detail::to_matrix(target_sub, mean, scale);
  const Eigen::MatrixXd y = detail::to_matrix(sub, mean, scale);
  const Eigen::Index n = x.rows(), m = y.rows();
  const double d = 3.0;
  const Eigen::MatrixXd g = detail::gaussian_kernel(y, y, cfg.beta);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, 3);

  double sigma2 = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sigma2 += (x.row(a) - y.row(b)).squaredNorm();
  sigma2 /= d * static_cast<double>(m * n);

  CpdResult r;
  Eigen::MatrixXd t = y;
  Eigen::MatrixXd dist(m, n);
  auto objective = [&](double s2) {
    // -sum_n log( (1-w)/M * sum_m N(x_n | t_m, s2) + w/N ) + lambda/2 tr(W^T G W)
    const double norm = std::pow(2.0 * std::numbers::pi * s2, d / 2.0);
    const double out = cfg.w / static_cast<double>(n);
    double nll = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index b = 0; b < m; ++b) mx = std::max(mx, -dist(b, a) / (2.0 * s2));
      double s = 0.0;
      for (Eigen::Index b = 0; b < m; ++b) s += std::exp(-dist(b, a) / (2.0 * s2) - mx);
      const double log_in = std::log((1.0 - cfg.w) / static_cast<double>(m) / norm) + mx + std::log(s);
      const double hi = std::max(log_in, std::log(out > 0.0 ? out : 1e-300));
      nll -= hi + std::log(std::exp(log_in - hi) + (out > 0.0 ? std::exp(std::log(out) - hi) : 0.0));
    }
    return nll + 0.5 * cfg.lambda * (w.transpose() * g * w).trace();
  };
  auto refresh = [&] {
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index a = 0; a < n; ++a) dist(b, a) = (x.row(a) - t.row(b)).squaredNorm();
  };
  refresh();
  double prev = objective(sigma2);
  r.objective.push_back(prev);
  Eigen::MatrixXd p(m, n);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    // E-step
    const double c = std::pow(2.0 * std::numbers::pi * sigma2, d / 2.0) * cfg.w / (1.0 - cfg.w) *
                     static_cast<double>(m) / static_cast<double>(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      double den = c;
      for (Eigen::Index b = 0; b < m; ++b) {
        p(b, a) = std::exp(-dist(b, a) / (2.0 * sigma2));
        den += p(b, a);
      }
      if (den > 0.0) p.col(a) /= den;
    }
    const Eigen::VectorXd p1 = p.rowwise().sum();
    const Eigen::VectorXd pt1 = p.colwise().sum().transpose();
    const double np = p1.sum();
    const Eigen::MatrixXd px = p * x;
    // M-step: (diag(P1) G + lambda sigma2 I) W = PX - diag(P1) Y
    Eigen::MatrixXd a = p1.asDiagonal() * g;
    a.diagonal().array() += cfg.lambda * sigma2;
    Eigen::MatrixXd next_w = a.partialPivLu().solve(px - p1.asDiagonal() * y);
    Eigen::MatrixXd next_t = y + g * next_w;
    double s2 = ((x.array().square().colwise() * pt1.array()).sum() - 2.0 * (px.array() * next_t.array()).sum() +
                 (next_t.array().square().colwise() * p1.array()).sum()) /
                (np * d);
    if (!(s2 > 1e-10)) s2 = 1e-10;
    if (!next_w.allFinite() || !std::isfinite(s2))
      throw Error(ErrorCode::NumericalError, "CPD produced non-finite values at iteration " + std::to_string(it));
    const Eigen::MatrixXd keep_w = w, keep_t = t;
    w = next_w;
    t = next_t;
    refresh();
    const double obj = objective(s2);
    if (!std::isfinite(obj)) throw Error(ErrorCode::NumericalError, "CPD objective is not finite");
    ++r.iterations;
    if (obj > prev) {  // rounding at convergence; keep the previous state
      w = keep_w;
      t = keep_t;
      break;
    }
    sigma2 = s2;
    r.objective.push_back(obj);
    const bool done = std::abs(prev - obj) <= cfg.tolerance * std::max(1.0, std::abs(prev));
    prev = obj;
    if (done) break;
  }
  r.sigma2 = sigma2 * scale * scale;

  const Eigen::MatrixXd all = detail::to_matrix(source, mean, scale);
  const Eigen::MatrixXd v = detail::gaussian_kernel(all, y, cfg.beta) * w;
  r.mapped.resize(source.size());
  r.field.vectors.resize(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    r.field.vectors[i] = v.row(static_cast<Eigen::Index>(i)).transpose() * scale;
    r.mapped[i] = source[i] + r.field.vectors[i];
  }
  return r;
}

}  // namespace c2p::baselines
