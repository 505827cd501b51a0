#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "c2p/geom/kdtree.hpp"
#include "c2p/ndp/encoding.hpp"
#include "c2p/ndp/losses.hpp"
#include "c2p/ndp/mlp.hpp"

namespace c2p::ndp {

struct PyramidConfig {
  int levels = 8;
  int iterations = 100;
  int k0 = 0;
  int width = 64;
  int depth = 3;
  double learning_rate = 3e-3;
  double decay = 0.99;
  double lambda = 0.1;
  int graph_k = 8;
  double plateau_tolerance = 1e-4;
  int plateau_window = 10;
  // Source points outside sigma that still take part in the optimisation
  // (as regularisation nodes). 0 means all of them.
  std::size_t max_regularization_nodes = 600;
  // Search Chamfer neighbours within the same structure label.
  bool use_labels = true;
  std::uint64_t seed = 11;

  void validate() const {
    if (levels < 1) throw Error(ErrorCode::InvalidConfig, "pyramid levels must be >= 1");
    if (iterations < 0) throw Error(ErrorCode::InvalidConfig, "pyramid iterations must be >= 0");
    if (width < 1 || depth < 1) throw Error(ErrorCode::InvalidConfig, "MLP width and depth must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be > 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw Error(ErrorCode::InvalidConfig, "decay must be in (0, 1]");
    if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidConfig, "lambda must be >= 0");
    if (graph_k < 1) throw Error(ErrorCode::InvalidConfig, "graph k must be >= 1");
    if (plateau_window < 1) throw Error(ErrorCode::InvalidConfig, "plateau window must be >= 1");
  }
};

/// Maps millimetres to the unit ball used for encoding.
struct Normalization {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  static Normalization fit(PointSpan points) {
    Normalization n;
    if (points.empty()) return n;
    for (const auto& p : points) n.center += p;
    n.center /= static_cast<double>(points.size());
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, (p - n.center).norm());
    n.scale = r > 0.0 ? r : 1.0;
    return n;
  }
  Vec3 to_unit(const Vec3& p) const { return (p - center) / scale; }
  Vec3 to_mm(const Vec3& u) const { return u * scale + center; }
};

struct LevelTrace {
  int level = 0;
  double entry_loss = 0.0;
  double exit_loss = 0.0;  // best loss, the one whose weights were kept
  int iterations = 0;
  std::vector<double> losses;
};

struct PyramidResult {
  DisplacementField field;
  std::vector<LevelTrace> trace;
  Normalization normalization;
  std::size_t active_points = 0;

  double final_loss() const { return trace.empty() ? 0.0 : trace.back().exit_loss; }
};

/// Loss and gradient (in unit coordinates) of one pyramid level with fixed
/// encodings. Exposed so tests can check it against finite differences.
class LevelObjective {
 public:
  LevelObjective(const Points& base, const Points& rest, std::vector<std::size_t> mask,
                 const KdTree& target, const std::vector<Edge>& edges, double lambda,
                 const LabeledChamfer* labeled = nullptr, std::vector<int> mask_labels = {})
      : base_(base), rest_(rest), mask_(std::move(mask)), target_(target), edges_(edges), lambda_(lambda),
        labeled_(labeled), mask_labels_(std::move(mask_labels)) {}

  /// Total loss for per-point increments `delta` (3 x n); fills d loss / d delta.
  double evaluate(const Eigen::MatrixXd& delta, Eigen::MatrixXd* grad) const {
    const std::size_t n = base_.size();
    Points moved(n), field(n);
    for (std::size_t i = 0; i < n; ++i) {
      moved[i] = base_[i] + delta.col(static_cast<Eigen::Index>(i));
      field[i] = moved[i] - rest_[i];
    }
    Points masked;
    masked.reserve(mask_.size());
    for (std::size_t u : mask_) masked.push_back(moved[u]);
    LossResult cd = labeled_ ? labeled_->evaluate(masked, mask_labels_) : chamfer_with_gradient(masked, target_);
    LossResult reg = regularization_loss(field, edges_);
    if (grad) {
      grad->setZero(3, static_cast<Eigen::Index>(n));
      for (std::size_t m = 0; m < mask_.size(); ++m) grad->col(static_cast<Eigen::Index>(mask_[m])) += cd.gradient[m];
      if (lambda_ > 0.0)
        for (std::size_t i = 0; i < n; ++i) grad->col(static_cast<Eigen::Index>(i)) += lambda_ * reg.gradient[i];
    }
    return cd.loss + lambda_ * reg.loss;
  }

 private:
  const Points& base_;
  const Points& rest_;
  std::vector<std::size_t> mask_;
  const KdTree& target_;
  const std::vector<Edge>& edges_;
  double lambda_;
  const LabeledChamfer* labeled_;
  std::vector<int> mask_labels_;
};

namespace detail {

inline std::vector<std::size_t> active_set(std::size_t n, const std::vector<std::size_t>& mask, std::size_t extra) {
  std::vector<char> in(n, 0);
  for (std::size_t u : mask) in[u] = 1;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i)
    if (!in[i]) others.push_back(i);
  if (extra > 0 && others.size() > extra) {
    const double stride = static_cast<double>(others.size()) / static_cast<double>(extra);
    for (std::size_t j = 0; j < extra; ++j) in[others[static_cast<std::size_t>(j * stride)]] = 1;
  } else {
    for (std::size_t i : others) in[i] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (in[i]) out.push_back(i);
  return out;
}

inline void check_finite(double loss, int level, int iteration) {
  if (!std::isfinite(loss))
    throw Error(ErrorCode::NumericalError,
                "non-finite loss at level " + std::to_string(level) + ", iteration " + std::to_string(iteration));
}

}  // namespace detail

/// Optimises the pyramid between the rigidly aligned source and the target.
/// Only sigma-masked points drive the data term; further source points join as
/// regularisation nodes and every point receives the final field.
inline PyramidResult ndp_register(const LabeledCloud& source, const LabeledCloud& target,
                                  const CorrespondenceSet& sigma, const PyramidConfig& cfg) {
  cfg.validate();
  if (source.empty() || target.empty()) throw Error(ErrorCode::EmptyCloud, "ndp_register needs non-empty clouds");
  if (sigma.empty()) throw Error(ErrorCode::NoCorrespondences, "ndp_register needs a non-empty sigma");
  sigma.validate(source.size(), target.size());

  PyramidResult result;
  result.normalization = Normalization::fit(source.points);
  const Normalization& norm = result.normalization;

  const std::size_t n = source.size();
  Points all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = norm.to_unit(source.points[i]);
  const Points all_rest = all;
  Points target_unit(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) target_unit[j] = norm.to_unit(target.points[j]);
  const KdTree target_tree(target_unit);
  std::optional<LabeledChamfer> labeled;
  if (cfg.use_labels && !source.labels.empty() && !target.labels.empty())
    labeled.emplace(target_unit, target.labels);

  const auto mask_global = sigma.source_indices();
  const auto active = detail::active_set(n, mask_global, cfg.max_regularization_nodes);
  result.active_points = active.size();
  std::vector<std::size_t> where(n, static_cast<std::size_t>(-1));
  for (std::size_t a = 0; a < active.size(); ++a) where[active[a]] = a;
  std::vector<std::size_t> mask;
  std::vector<int> mask_labels;
  for (std::size_t u : mask_global) {
    mask.push_back(where[u]);
    mask_labels.push_back(source.labels.empty() ? -1 : source.labels[u]);
  }

  Points rest(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) rest[a] = all_rest[active[a]];
  const auto edges = knn_graph(rest, static_cast<std::size_t>(cfg.graph_k));

  for (int level = 0; level < cfg.levels; ++level) {
    Points base(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) base[a] = all[active[a]];
    const Eigen::MatrixXd inputs = encode_batch(base, level, cfg.k0);

    Mlp net(6, cfg.width, cfg.depth, 3);
    net.initialize(derive_seed(cfg.seed, static_cast<std::uint64_t>(level)));
    Adam adam(net.params(), cfg.learning_rate, cfg.decay);
    const LevelObjective objective(base, rest, mask, target_tree, edges, cfg.lambda,
                                   labeled ? &*labeled : nullptr, mask_labels);

    LevelTrace lt;
    lt.level = level;
    Mlp::Params best = net.params();
    double best_loss = 0.0;
    for (int it = 0; it <= cfg.iterations; ++it) {
      if (cfg.iterations == 0) break;
      Mlp::Cache cache;
      const Eigen::MatrixXd delta = net.forward(inputs, &cache);
      Eigen::MatrixXd grad;
      const double loss = objective.evaluate(delta, &grad);
      detail::check_finite(loss, level, it);
      lt.losses.push_back(loss);
      if (it == 0) lt.entry_loss = loss;
      if (it == 0 || loss < best_loss) {
        best_loss = loss;
        best = net.params();
      }
      if (it == cfg.iterations) break;
      const std::size_t h = lt.losses.size();
      if (h > static_cast<std::size_t>(cfg.plateau_window)) {
        const double past = *std::min_element(lt.losses.begin(), lt.losses.end() - cfg.plateau_window);
        if (past <= 0.0 || (past - best_loss) / past < cfg.plateau_tolerance) break;
      }
      auto g = net.backward(cache, grad);
      for (const auto& p : g.params)
        if (!p.allFinite()) detail::check_finite(std::nan(""), level, it);
      adam.step(net.params(), g.params);
    }
    lt.iterations = static_cast<int>(lt.losses.size());
    lt.exit_loss = best_loss;
    if (lt.losses.empty()) {
      lt.entry_loss = lt.exit_loss = objective.evaluate(Eigen::MatrixXd::Zero(3, static_cast<Eigen::Index>(active.size())), nullptr);
    }
    net.params() = best;
    // Apply the frozen level to every source point.
    const Eigen::MatrixXd inc = net.forward(encode_batch(all, level, cfg.k0));
    for (std::size_t i = 0; i < n; ++i) all[i] += inc.col(static_cast<Eigen::Index>(i));
    result.trace.push_back(std::move(lt));
  }

  result.field.vectors.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.field.vectors[i] = (all[i] - all_rest[i]) * norm.scale;
  return result;
}

}  // namespace c2p::ndp
