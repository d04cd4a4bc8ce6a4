#ifndef GRAVDEN_PREFILTER_HPP
#define GRAVDEN_PREFILTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gravden/core.hpp"
#include "gravden/kdtree.hpp"
#include "gravden/octree.hpp"

namespace gravden {

// ---------------------------------------------------------------------------
// Adaptive voxel gate
// ---------------------------------------------------------------------------

/// Edge length of the occupancy voxels for a point set with box `box` and
/// `count` points: beta * (V / N)^(1/3). Flat sets fall back to the 2-D rule
/// beta * sqrt(area / N), line-like sets to beta * length / N. Returns nullopt
/// when every extent vanishes (all points coincident), in which case the gate
/// is skipped.
template <typename Scalar>
std::optional<Scalar> adaptive_voxel_size(const Aabb<Scalar>& box, Eigen::Index count, Scalar beta) {
  if (count <= 0) throw Error(ErrorKind::EmptyInput, "adaptive_voxel_size of an empty leaf");
  const Point3<Scalar> ext = box.extents();
  Scalar measure = 1;
  int dims = 0;
  for (int a = 0; a < 3; ++a) {
    if (ext(a) > Scalar(0)) {
      measure *= ext(a);
      ++dims;
    }
  }
  const Scalar per_point = measure / static_cast<Scalar>(count);
  switch (dims) {
    case 3: return beta * std::cbrt(per_point);
    case 2: return beta * std::sqrt(per_point);
    case 1: return beta * per_point;
    default: return std::nullopt;
  }
}

template <typename Scalar>
std::optional<Scalar> adaptive_voxel_size(const Leaf<Scalar>& leaf, Scalar beta) {
  return adaptive_voxel_size(leaf.box, leaf.size(), beta);
}

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // Large primes from the usual spatial-hash construction.
    return static_cast<std::size_t>(k.x * 73856093LL) ^ static_cast<std::size_t>(k.y * 19349663LL) ^
           static_cast<std::size_t>(k.z * 83492791LL);
  }
};

template <typename Scalar>
struct VoxelGrid {
  Point3<Scalar> origin;
  Scalar h;
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> occupancy;

  template <typename Derived>
  VoxelKey key_of(const Eigen::MatrixBase<Derived>& p) const {
    const Point3<Scalar> rel = (p - origin) / h;
    return {static_cast<std::int64_t>(std::floor(rel.x())), static_cast<std::int64_t>(std::floor(rel.y())),
            static_cast<std::int64_t>(std::floor(rel.z()))};
  }

  template <typename Derived>
  std::size_t count_at(const Eigen::MatrixBase<Derived>& p) const {
    auto it = occupancy.find(key_of(p));
    return it == occupancy.end() ? 0 : it->second;
  }
};

template <typename Scalar>
VoxelGrid<Scalar> build_voxel_grid(const Points3<Scalar>& pts, std::span<const Eigen::Index> cols,
                                   const Point3<Scalar>& origin, Scalar h) {
  if (!(h > Scalar(0))) throw Error(ErrorKind::InvalidParameter, "voxel edge must be positive");
  VoxelGrid<Scalar> grid{origin, h, {}};
  grid.occupancy.reserve(cols.size());
  for (auto c : cols) ++grid.occupancy[grid.key_of(pts.col(c))];
  return grid;
}

/// Columns of `cols` whose voxel holds at least `min_count` of the given
/// points, in input order.
template <typename Scalar>
IndexList voxel_gate(const Points3<Scalar>& pts, std::span<const Eigen::Index> cols, const Point3<Scalar>& origin,
                     Scalar h, std::size_t min_count) {
  if (min_count == 0) return IndexList(cols.begin(), cols.end());
  const auto grid = build_voxel_grid(pts, cols, origin, h);
  IndexList kept;
  kept.reserve(cols.size());
  for (auto c : cols)
    if (grid.count_at(pts.col(c)) >= min_count) kept.push_back(c);
  return kept;
}

// ---------------------------------------------------------------------------
// kNN density
// ---------------------------------------------------------------------------

/// Per-candidate kNN statistics for a candidate set. Positions 0..size()-1
/// refer to `members` (columns of the source cloud); neighbor lists are stored
/// CSR-style as positions into the same member list, nearest first.
template <typename Scalar>
struct DensityField {
  IndexList members;
  std::vector<PointId> ids;  // original ids of the members
  std::vector<Scalar> rho;
  std::vector<Scalar> r_k;
  std::vector<std::size_t> offsets;  // size()+1 entries
  std::vector<Eigen::Index> neighbors;
  std::vector<Scalar> distances;

  std::size_t size() const noexcept { return members.size(); }
  bool empty() const noexcept { return members.empty(); }

  std::span<const Eigen::Index> neighbors_of(std::size_t i) const {
    return {neighbors.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const Scalar> distances_of(std::size_t i) const {
    return {distances.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

/// rho = k / ((4/3) pi max(r, eps)^3)
template <typename Scalar>
Scalar knn_ball_density(Eigen::Index k, Scalar r_k, Scalar epsilon) {
  const Scalar r = std::max(r_k, epsilon);
  return static_cast<Scalar>(k) / (Scalar(4) / Scalar(3) * std::numbers::pi_v<Scalar> * r * r * r);
}

/// K nearest others of every candidate (K clamped to size - 1), the K-th
/// neighbor radius and the ball density. Distance ties resolve by ascending
/// original id. Throws DegenerateLeaf for fewer than two candidates.
template <typename Scalar>
DensityField<Scalar> knn_density(const PointCloud<Scalar>& cloud, std::span<const Eigen::Index> cols,
                                 Eigen::Index k, Scalar epsilon) {
  if (cols.size() < 2) throw Error(ErrorKind::DegenerateLeaf, "kNN density needs at least two candidates");
  if (k < 1) throw Error(ErrorKind::InvalidParameter, "K must be >= 1");
  const auto n = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index k_eff = std::min(k, n - 1);

  DensityField<Scalar> field;
  field.members.assign(cols.begin(), cols.end());
  field.ids.resize(cols.size());
  Points3<Scalar> local(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    local.col(i) = cloud.points.col(cols[static_cast<std::size_t>(i)]);
    field.ids[static_cast<std::size_t>(i)] = cloud.ids[static_cast<std::size_t>(cols[static_cast<std::size_t>(i)])];
  }
  const KdTree<Scalar> tree(local, field.ids);

  field.rho.resize(cols.size());
  field.r_k.resize(cols.size());
  field.offsets.resize(cols.size() + 1);
  field.neighbors.resize(cols.size() * static_cast<std::size_t>(k_eff));
  field.distances.resize(field.neighbors.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nn = tree.knn(local.col(i), k_eff, i);
    const auto base = static_cast<std::size_t>(i * k_eff);
    field.offsets[static_cast<std::size_t>(i)] = base;
    for (std::size_t j = 0; j < nn.size(); ++j) {
      field.neighbors[base + j] = nn[j].index;
      field.distances[base + j] = std::sqrt(nn[j].dist2);
    }
    const Scalar r = field.distances[base + nn.size() - 1];
    field.r_k[static_cast<std::size_t>(i)] = r;
    field.rho[static_cast<std::size_t>(i)] = knn_ball_density(k_eff, r, epsilon);
  }
  field.offsets[cols.size()] = field.neighbors.size();
  return field;
}

/// Linear-interpolation percentile: the value at position q/100 * (n - 1) of
/// the ascending sort.
template <typename Scalar>
Scalar percentile(std::vector<Scalar> values, double q) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw Error(ErrorKind::InvalidParameter, "percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const auto frac = static_cast<Scalar>(pos - static_cast<double>(lo));
  const Scalar v = values[lo] + frac * (values[hi] - values[lo]);
  return std::min(v, values[hi]);
}

/// Positions (into the field) whose density reaches the q-th percentile.
template <typename Scalar>
std::vector<std::size_t> density_filter(const DensityField<Scalar>& field, double q) {
  if (field.empty()) throw Error(ErrorKind::EmptyInput, "density filter on an empty field");
  const Scalar threshold = percentile(field.rho, q);
  std::vector<std::size_t> kept;
  kept.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field.rho[i] >= threshold) kept.push_back(i);
  return kept;
}

/// The field reduced to the given positions; neighbor lists keep only the
/// surviving neighbors. Densities and K-th neighbor radii are carried over
/// unchanged.
template <typename Scalar>
DensityField<Scalar> restrict_field(const DensityField<Scalar>& field, std::span<const std::size_t> keep) {
  constexpr auto kDropped = static_cast<Eigen::Index>(-1);
  std::vector<Eigen::Index> remap(field.size(), kDropped);
  for (std::size_t p = 0; p < keep.size(); ++p) remap[keep[p]] = static_cast<Eigen::Index>(p);

  DensityField<Scalar> out;
  out.members.reserve(keep.size());
  out.ids.reserve(keep.size());
  out.rho.reserve(keep.size());
  out.r_k.reserve(keep.size());
  out.offsets.reserve(keep.size() + 1);
  for (auto i : keep) {
    out.members.push_back(field.members[i]);
    out.ids.push_back(field.ids[i]);
    out.rho.push_back(field.rho[i]);
    out.r_k.push_back(field.r_k[i]);
    out.offsets.push_back(out.neighbors.size());
    const auto nb = field.neighbors_of(i);
    const auto d = field.distances_of(i);
    for (std::size_t j = 0; j < nb.size(); ++j) {
      const auto m = remap[static_cast<std::size_t>(nb[j])];
      if (m == kDropped) continue;
      out.neighbors.push_back(m);
      out.distances.push_back(d[j]);
    }
  }
  out.offsets.push_back(out.neighbors.size());
  return out;
}

}  // namespace gravden

#endif  // GRAVDEN_PREFILTER_HPP
