#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "c2p/geom/kdtree.hpp"

namespace c2p::baselines {

struct NicpConfig {
  std::vector<double> stiffness = {8.0, 4.0, 2.0, 1.0, 0.5};
  int max_iterations = 20;  // per stiffness step
  double tolerance = 1e-4;  // RMS change of the affine parameters
  double gamma = 1.0;       // weight of the translation part in the stiffness term
  int graph_k = 8;
};

struct NicpResult {
  Points mapped;
  DisplacementField field;
  std::vector<double> energies;  // mean energy after every solve
  int solves = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

/// k-NN graph made connected by bridging each stray component to the rest
/// through its closest point pair. Returns the number of bridges added.
inline std::size_t connected_knn_graph(PointSpan points, std::size_t k,
                                       std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  edges = knn_graph(points, k);
  UnionFind uf(points.size());
  for (const auto& [a, b] : edges) uf.unite(a, b);
  std::size_t bridges = 0;
  for (;;) {
    std::vector<std::size_t> comp(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) comp[i] = uf.find(i);
    const std::size_t root = comp[0];
    Points main_pts;
    std::vector<std::size_t> main_ids;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (comp[i] == root) {
        main_pts.push_back(points[i]);
        main_ids.push_back(i);
      }
    if (main_pts.size() == points.size()) break;
    const KdTree tree(main_pts);
    std::size_t best_i = 0, best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (comp[i] == root) continue;
      const Neighbor nb = tree.nearest(points[i]);
      if (nb.distance < best) {
        best = nb.distance;
        best_i = i;
        best_j = main_ids[nb.index];
      }
    }
    edges.emplace_back(std::min(best_i, best_j), std::max(best_i, best_j));
    uf.unite(best_i, best_j);
    ++bridges;
  }
  std::sort(edges.begin(), edges.end());
  return bridges;
}

}  // namespace detail

/// Non-rigid ICP with per-point affine transforms and a stiffness schedule.
inline NicpResult nicp(PointSpan source, PointSpan target, const NicpConfig& cfg = {}) {
  if (source.size() < 4 || target.empty()) throw Error(ErrorCode::EmptyCloud, "NICP needs >= 4 source points");
  if (cfg.stiffness.empty()) throw Error(ErrorCode::InvalidConfig, "NICP needs a stiffness schedule");
  using SpMat = Eigen::SparseMatrix<double>;
  const auto n = static_cast<Eigen::Index>(source.size());
  NicpResult r;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t bridges = detail::connected_knn_graph(source, static_cast<std::size_t>(cfg.graph_k), edges);
  if (bridges > 0)
    r.warnings.push_back("source k-NN graph had " + std::to_string(bridges + 1) +
                         " components; bridged through closest pairs");

  // Stiffness Laplacian L (node-arc incidence M^T M) and the data block D^T D.
  std::vector<Eigen::Triplet<double>> lt, dt;
  const double g[4] = {1.0, 1.0, 1.0, cfg.gamma * cfg.gamma};
  for (const auto& [a, b] : edges)
    for (int c = 0; c < 4; ++c) {
      const auto ia = 4 * static_cast<Eigen::Index>(a) + c, ib = 4 * static_cast<Eigen::Index>(b) + c;
      lt.emplace_back(ia, ia, g[c]);
      lt.emplace_back(ib, ib, g[c]);
      lt.emplace_back(ia, ib, -g[c]);
      lt.emplace_back(ib, ia, -g[c]);
    }
  Eigen::MatrixXd xh(4, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xh.col(i) << source[static_cast<std::size_t>(i)], 1.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) dt.emplace_back(4 * i + a, 4 * i + b, xh(a, i) * xh(b, i));
  }
  SpMat lap(4 * n, 4 * n), dd(4 * n, 4 * n);
  lap.setFromTriplets(lt.begin(), lt.end());
  dd.setFromTriplets(dt.begin(), dt.end());

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4 * n, 3);  // stacked 4x3 affine blocks
  for (Eigen::Index i = 0; i < n; ++i) x.block(4 * i, 0, 3, 3).setIdentity();

  const KdTree tree(target);
  Eigen::MatrixXd u(n, 3);
  auto map_points = [&](const Eigen::MatrixXd& xs) {
    Points out(source.size());
    for (Eigen::Index i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = xs.block(4 * i, 0, 4, 3).transpose() * xh.col(i);
    return out;
  };
  auto update_targets = [&](const Points& mapped) {
    for (Eigen::Index i = 0; i < n; ++i)
      u.row(i) = target[tree.nearest(mapped[static_cast<std::size_t>(i)]).index].transpose();
  };
  auto energy = [&](const Eigen::MatrixXd& xs, const Points& mapped, double alpha) {
    double data = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      data += (mapped[static_cast<std::size_t>(i)] - u.row(i).transpose()).squaredNorm();
    const double stiff = (xs.transpose() * (lap * xs)).trace();
    return (data + alpha * alpha * stiff) / static_cast<double>(n);
  };

  Eigen::SimplicialLDLT<SpMat> solver;
  bool analyzed = false;
  Points mapped = map_points(x);
  for (double alpha : cfg.stiffness) {
    const SpMat sys = (alpha * alpha) * lap + dd;
    if (!analyzed) {
      solver.analyzePattern(sys);
      analyzed = true;
    }
    solver.factorize(sys);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::RegistrationFailed, "NICP system is singular");
    for (int it = 0; it < cfg.max_iterations; ++it) {
      update_targets(mapped);
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(4 * n, 3);
      for (Eigen::Index i = 0; i < n; ++i) rhs.block(4 * i, 0, 4, 3) = xh.col(i) * u.row(i);
      Eigen::MatrixXd next = solver.solve(rhs);
      if (solver.info() != Eigen::Success || !next.allFinite())
        throw Error(ErrorCode::RegistrationFailed, "NICP solve failed");
      const double change = (next - x).norm() / std::sqrt(static_cast<double>(n));
      x = std::move(next);
      mapped = map_points(x);
      r.energies.push_back(energy(x, mapped, alpha));
      ++r.solves;
      if (change < cfg.tolerance) break;
    }
  }
  r.mapped = mapped;
  r.field.vectors.resize(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) r.field.vectors[i] = mapped[i] - source[i];
  return r;
}

}  // namespace c2p::baselines
