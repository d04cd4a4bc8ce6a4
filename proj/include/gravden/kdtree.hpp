#ifndef GRAVDEN_KDTREE_HPP
#define GRAVDEN_KDTREE_HPP

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "gravden/core.hpp"

namespace gravden {

template <typename Scalar>
struct Neighbor {
  Eigen::Index index;  // column in the indexed block
  Scalar dist2;
};

/// Exact k-d tree over a 3xN block. Results are ordered by (squared distance,
/// tie key) so equal distances resolve deterministically; the tie key defaults
/// to the column index.
template <typename Scalar>
class KdTree {
 public:
  explicit KdTree(Points3<Scalar> pts, std::vector<PointId> tie_keys = {})
      : keys_(std::move(tie_keys)) {
    const Eigen::Index n = pts.cols();
    if (keys_.empty()) {
      keys_.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) keys_[static_cast<std::size_t>(i)] = static_cast<PointId>(i);
    }
    perm_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
    pts_ = std::move(pts);
    if (n > 0) {
      nodes_.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 2));
      build(0, n);
    }
    sorted_.resize(3, n);
    sorted_keys_.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      sorted_.col(i) = pts_.col(perm_[static_cast<std::size_t>(i)]);
      sorted_keys_[static_cast<std::size_t>(i)] = keys_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
    }
  }

  Eigen::Index size() const noexcept { return pts_.cols(); }
  const Points3<Scalar>& points() const noexcept { return pts_; }

  /// The k nearest columns to `query`, ascending. `exclude` (a column index, or
  /// -1) is skipped, which is how self-matches are dropped.
  template <typename Derived>
  std::vector<Neighbor<Scalar>> knn(const Eigen::MatrixBase<Derived>& query, Eigen::Index k,
                                    Eigen::Index exclude = -1) const {
    std::vector<Neighbor<Scalar>> out;
    if (k <= 0 || nodes_.empty()) return out;
    const Point3<Scalar> q = query;
    Heap heap(HeapLess{this});
    search_knn(0, q, static_cast<std::size_t>(k), exclude, heap);
    out.resize(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      *it = {perm_[static_cast<std::size_t>(heap.top().slot)], heap.top().dist2};
      heap.pop();
    }
    return out;
  }

  template <typename Derived>
  Neighbor<Scalar> nearest(const Eigen::MatrixBase<Derived>& query) const {
    if (nodes_.empty()) throw Error(ErrorKind::EmptyInput, "nearest-neighbor query on an empty tree");
    return knn(query, 1).front();
  }

  /// Number of indexed points p with |p - query|^2 <= radius2.
  template <typename Derived>
  std::size_t count_within(const Eigen::MatrixBase<Derived>& query, Scalar radius2) const {
    if (nodes_.empty()) return 0;
    const Point3<Scalar> q = query;
    return count_node(0, q, radius2);
  }

 private:
  static constexpr Eigen::Index kLeafSize = 12;

  struct Node {
    Eigen::Index begin, end;
    std::int32_t dim;  // -1 for leaves
    Scalar split;
    std::int32_t left, right;
  };

  struct Entry {
    Eigen::Index slot;  // position in sorted_
    Scalar dist2;
  };

  struct HeapLess {
    const KdTree* tree;
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
      return tree->sorted_keys_[static_cast<std::size_t>(a.slot)] <
             tree->sorted_keys_[static_cast<std::size_t>(b.slot)];
    }
  };
  using Heap = std::priority_queue<Entry, std::vector<Entry>, HeapLess>;

  std::int32_t build(Eigen::Index begin, Eigen::Index end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, Scalar(0), -1, -1});
    if (end - begin <= kLeafSize) return id;

    Point3<Scalar> lo = pts_.col(perm_[static_cast<std::size_t>(begin)]);
    Point3<Scalar> hi = lo;
    for (Eigen::Index i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_.col(perm_[static_cast<std::size_t>(i)]));
      hi = hi.cwiseMax(pts_.col(perm_[static_cast<std::size_t>(i)]));
    }
    Eigen::Index dim = 0;
    const Scalar spread = (hi - lo).maxCoeff(&dim);
    if (spread <= Scalar(0)) return id;  // all coincident: keep as one bucket

    const Eigen::Index mid = begin + (end - begin) / 2;
    auto first = perm_.begin() + begin;
    std::nth_element(first, perm_.begin() + mid, perm_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) { return pts_(dim, a) < pts_(dim, b); });
    const Scalar split = pts_(dim, perm_[static_cast<std::size_t>(mid)]);

    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[static_cast<std::size_t>(id)].dim = static_cast<std::int32_t>(dim);
    nodes_[static_cast<std::size_t>(id)].split = split;
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  void search_knn(std::int32_t node_id, const Point3<Scalar>& q, std::size_t k, Eigen::Index exclude,
                  Heap& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.dim < 0) {
      HeapLess less{this};
      for (Eigen::Index s = node.begin; s < node.end; ++s) {
        if (perm_[static_cast<std::size_t>(s)] == exclude) continue;
        const Entry e{s, (sorted_.col(s) - q).squaredNorm()};
        if (heap.size() < k) {
          heap.push(e);
        } else if (less(e, heap.top())) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const Scalar diff = q(node.dim) - node.split;
    const auto near = diff < Scalar(0) ? node.left : node.right;
    const auto far = diff < Scalar(0) ? node.right : node.left;
    search_knn(near, q, k, exclude, heap);
    // Equal distance to the plane can still hide a smaller tie key, so only
    // strictly farther subtrees are pruned.
    if (heap.size() < k || diff * diff <= heap.top().dist2) search_knn(far, q, k, exclude, heap);
  }

  std::size_t count_node(std::int32_t node_id, const Point3<Scalar>& q, Scalar r2) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.dim < 0) {
      std::size_t c = 0;
      for (Eigen::Index s = node.begin; s < node.end; ++s) c += ((sorted_.col(s) - q).squaredNorm() <= r2);
      return c;
    }
    const Scalar diff = q(node.dim) - node.split;
    const auto near = diff < Scalar(0) ? node.left : node.right;
    const auto far = diff < Scalar(0) ? node.right : node.left;
    std::size_t c = count_node(near, q, r2);
    if (diff * diff <= r2) c += count_node(far, q, r2);
    return c;
  }

  Points3<Scalar> pts_;
  Points3<Scalar> sorted_;
  std::vector<PointId> keys_;
  std::vector<PointId> sorted_keys_;
  std::vector<Eigen::Index> perm_;
  std::vector<Node> nodes_;
};

}  // namespace gravden

#endif  // GRAVDEN_KDTREE_HPP
