#ifndef GRAVDEN_OCTREE_HPP
#define GRAVDEN_OCTREE_HPP

#include <array>
#include <cmath>
#include <vector>

#include "gravden/core.hpp"

namespace gravden {

/// A terminal octree cell. `indices` are column indices into the partitioned
/// cloud; `box` is the tight box of those points, not the cell bounds.
template <typename Scalar>
struct Leaf {
  IndexList indices;
  Aabb<Scalar> box;

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(indices.size()); }
  Scalar volume() const { return box.volume(); }
};

template <typename Scalar>
struct LeafPartition {
  std::vector<Leaf<Scalar>> leaves;
};

struct OctreeLimits {
  Eigen::Index max_leaf_points = 5000;
  double min_leaf_edge_fraction = 1.0 / 64.0;
};

namespace detail {

template <typename Scalar>
void split_cell(const Points3<Scalar>& pts, IndexList members, const Point3<Scalar>& cell_min, Scalar edge,
                Eigen::Index max_points, Scalar min_edge, std::vector<Leaf<Scalar>>& out) {
  if (static_cast<Eigen::Index>(members.size()) <= max_points || edge <= min_edge) {
    auto box = bounding_box(pts, std::span<const Eigen::Index>(members));
    out.push_back({std::move(members), box});
    return;
  }
  const Scalar half = edge / Scalar(2);
  const Point3<Scalar> mid = cell_min.array() + half;
  std::array<IndexList, 8> children;
  for (auto c : members) {
    // Half-open per axis: [min, mid) -> 0, [mid, max] -> 1.
    const int child = (pts(0, c) >= mid.x() ? 1 : 0) | (pts(1, c) >= mid.y() ? 2 : 0) | (pts(2, c) >= mid.z() ? 4 : 0);
    children[static_cast<std::size_t>(child)].push_back(c);
  }
  members.clear();
  members.shrink_to_fit();
  for (int child = 0; child < 8; ++child) {
    auto& m = children[static_cast<std::size_t>(child)];
    if (m.empty()) continue;
    Point3<Scalar> child_min = cell_min;
    if (child & 1) child_min.x() = mid.x();
    if (child & 2) child_min.y() = mid.y();
    if (child & 4) child_min.z() = mid.z();
    split_cell(pts, std::move(m), child_min, half, max_points, min_edge, out);
  }
}

}  // namespace detail

/// Recursive 8-way split of the cloud's cubical root cell. A cell becomes a
/// leaf when it holds at most `max_leaf_points` points or its edge is at most
/// `min_leaf_edge_fraction` times the root diagonal. Empty cells are dropped and
/// leaves come out in child-index (Morton) traversal order.
template <typename Scalar>
LeafPartition<Scalar> partition(const PointCloud<Scalar>& cloud, const OctreeLimits& limits = {}) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cannot partition an empty cloud");
  if (limits.max_leaf_points < 1) throw Error(ErrorKind::InvalidParameter, "max_leaf_points must be >= 1");
  if (!(limits.min_leaf_edge_fraction > 0.0 && limits.min_leaf_edge_fraction < 1.0))
    throw Error(ErrorKind::InvalidParameter, "min_leaf_edge_fraction must lie in (0, 1)");

  const auto box = bounding_box(cloud);
  const Scalar edge = box.extents().maxCoeff();
  const Scalar root_diag = box.diagonal();
  const Scalar min_edge = static_cast<Scalar>(limits.min_leaf_edge_fraction) * root_diag;

  IndexList all(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) all[static_cast<std::size_t>(i)] = i;

  LeafPartition<Scalar> result;
  detail::split_cell(cloud.points, std::move(all), box.min, edge, limits.max_leaf_points, min_edge, result.leaves);
  return result;
}

}  // namespace gravden

#endif  // GRAVDEN_OCTREE_HPP
