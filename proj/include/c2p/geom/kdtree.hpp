#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "c2p/geom/types.hpp"

namespace c2p {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Static k-d tree over a copy of a point set.
///
/// Every query is exact. Equidistant candidates are ordered by ascending
/// point index, so results match an exhaustive scan bit for bit.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(PointSpan points, std::size_t leaf_size = 12)
      : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    for (const auto& p : points_)
      if (!is_finite(p)) throw Error(ErrorCode::InvalidConfig, "k-d tree point is not finite");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Points& points() const { return points_; }

  Neighbor nearest(const Vec3& query) const {
    require_nonempty();
    Candidate best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    nearest_rec(0, query, best);
    return {best.index, std::sqrt(best.d2)};
  }

  /// The k closest points, ascending by (distance, index).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const {
    require_nonempty();
    k = std::min(k, points_.size());
    std::vector<Candidate> heap;
    heap.reserve(k + 1);
    if (k > 0) knn_rec(0, query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    std::vector<Neighbor> out;
    out.reserve(heap.size());
    for (const auto& c : heap) out.push_back({c.index, std::sqrt(c.d2)});
    return out;
  }

  /// All points with distance <= radius, ascending by index.
  std::vector<std::size_t> radius(const Vec3& query, double r) const {
    std::vector<std::size_t> out;
    if (points_.empty() || r < 0.0) return out;
    radius_rec(0, query, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  struct Candidate {
    double d2;
    std::size_t index;
    bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
  };

  void require_nonempty() const {
    if (points_.empty()) throw Error(ErrorCode::EmptyCloud, "nearest-neighbour query on an empty cloud");
  }

  double d2(const Vec3& q, std::size_t i) const {
    const Vec3& p = points_[i];
    const double dx = q.x() - p.x();
    const double dy = q.y() - p.y();
    const double dz = q.z() - p.z();
    return dx * dx + dy * dy + dz * dz;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size_) return id;

    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident: keep as leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void nearest_rec(std::size_t id, const Vec3& q, Candidate& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Candidate c{d2(q, order_[i]), order_[i]};
        if (c < best) best = c;
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    nearest_rec(near, q, best);
    if (diff * diff <= best.d2) nearest_rec(far, q, best);
  }

  void knn_rec(std::size_t id, const Vec3& q, std::size_t k, std::vector<Candidate>& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Candidate c{d2(q, order_[i]), order_[i]};
        if (heap.size() < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    knn_rec(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().d2) knn_rec(far, q, k, heap);
  }

  void radius_rec(std::size_t id, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (d2(q, order_[i]) <= r2) out.push_back(order_[i]);
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    radius_rec(near, q, r2, out);
    if (diff * diff <= r2) radius_rec(far, q, r2, out);
  }

  Points points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 12;
};

/// Nearest point of `cloud` to `query`; ties resolve to the lowest index.
inline Neighbor nearest_neighbor(const Vec3& query, const LabeledCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "nearest_neighbor on an empty cloud");
  if (!is_finite(query)) throw Error(ErrorCode::InvalidConfig, "query is not finite");
  return KdTree(cloud.points).nearest(query);
}

/// Undirected k-NN graph edges (i < j), deduplicated and sorted.
inline std::vector<std::pair<std::size_t, std::size_t>> knn_graph(PointSpan points, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (points.size() < 2 || k == 0) return edges;
  const KdTree tree(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& nb : tree.knn(points[i], k + 1)) {
      if (nb.index == i) continue;
      edges.emplace_back(std::min(i, nb.index), std::max(i, nb.index));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace c2p
