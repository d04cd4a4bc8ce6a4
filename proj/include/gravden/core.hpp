#ifndef GRAVDEN_CORE_HPP
#define GRAVDEN_CORE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gravden/error.hpp"

namespace gravden {

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;

/// Column-major 3xN coordinate block; column i is point i.
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

using PointId = std::size_t;
using IndexList = std::vector<Eigen::Index>;

/// An ordered point set with an optional per-point noise label channel and
/// stable ids assigned at load time. Filters produce new clouds whose ids are a
/// subset of the input ids.
template <typename Scalar>
struct PointCloud {
  Points3<Scalar> points;
  std::vector<std::uint8_t> labels;  // empty, or one entry per point (1 = noise)
  std::vector<PointId> ids;

  PointCloud() = default;

  explicit PointCloud(Points3<Scalar> pts) : points(std::move(pts)), ids(points.cols()) {
    std::iota(ids.begin(), ids.end(), PointId{0});
  }

  PointCloud(Points3<Scalar> pts, std::vector<std::uint8_t> noise_labels)
      : PointCloud(std::move(pts)) {
    labels = std::move(noise_labels);
  }

  Eigen::Index size() const noexcept { return points.cols(); }
  bool empty() const noexcept { return points.cols() == 0; }
  bool has_labels() const noexcept { return !labels.empty(); }

  auto point(Eigen::Index i) const { return points.col(i); }

  std::size_t noise_count() const {
    std::size_t n = 0;
    for (auto l : labels) n += (l != 0);
    return n;
  }

  /// Throws InvalidParameter when the channel sizes disagree or a coordinate
  /// is not finite.
  void validate() const {
    const auto n = static_cast<std::size_t>(size());
    if (ids.size() != n)
      throw Error(ErrorKind::InvalidParameter, "id channel size does not match point count");
    if (!labels.empty() && labels.size() != n)
      throw Error(ErrorKind::InvalidParameter, "label channel size does not match point count");
    if (!points.allFinite())
      throw Error(ErrorKind::InvalidParameter, "cloud contains non-finite coordinates");
  }
};

using PointCloudd = PointCloud<double>;
using PointCloudf = PointCloud<float>;

/// Copy of the selected columns, carrying ids and labels along.
template <typename Scalar>
PointCloud<Scalar> subset(const PointCloud<Scalar>& cloud, std::span<const Eigen::Index> rows) {
  PointCloud<Scalar> out;
  out.points.resize(3, static_cast<Eigen::Index>(rows.size()));
  out.ids.resize(rows.size());
  if (cloud.has_labels()) out.labels.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = rows[k];
    out.points.col(static_cast<Eigen::Index>(k)) = cloud.points.col(r);
    out.ids[k] = cloud.ids[static_cast<std::size_t>(r)];
    if (cloud.has_labels()) out.labels[k] = cloud.labels[static_cast<std::size_t>(r)];
  }
  return out;
}

/// Axis-aligned bounding box.
template <typename Scalar>
struct Aabb {
  Point3<Scalar> min;
  Point3<Scalar> max;

  Point3<Scalar> extents() const { return max - min; }
  Point3<Scalar> center() const { return (min + max) / Scalar(2); }
  Scalar diagonal() const { return extents().norm(); }
  Scalar volume() const { return extents().prod(); }
};

template <typename Derived>
Aabb<typename Derived::Scalar> bounding_box(const Eigen::MatrixBase<Derived>& pts) {
  static_assert(Derived::RowsAtCompileTime == 3, "expected a 3xN coordinate block");
  if (pts.cols() == 0) throw Error(ErrorKind::EmptyInput, "bounding_box of an empty point set");
  return {pts.rowwise().minCoeff(), pts.rowwise().maxCoeff()};
}

template <typename Scalar>
Aabb<Scalar> bounding_box(const PointCloud<Scalar>& cloud) {
  return bounding_box(cloud.points);
}

template <typename Scalar>
Aabb<Scalar> bounding_box(const Points3<Scalar>& pts, std::span<const Eigen::Index> cols) {
  if (cols.empty()) throw Error(ErrorKind::EmptyInput, "bounding_box of an empty selection");
  Point3<Scalar> lo = pts.col(cols.front());
  Point3<Scalar> hi = lo;
  for (auto c : cols) {
    lo = lo.cwiseMin(pts.col(c));
    hi = hi.cwiseMax(pts.col(c));
  }
  return {lo, hi};
}

template <typename Derived>
Point3<typename Derived::Scalar> centroid(const Eigen::MatrixBase<Derived>& pts) {
  static_assert(Derived::RowsAtCompileTime == 3, "expected a 3xN coordinate block");
  if (pts.cols() == 0) throw Error(ErrorKind::EmptyInput, "centroid of an empty point set");
  return pts.rowwise().sum() / static_cast<typename Derived::Scalar>(pts.cols());
}

template <typename Scalar>
Point3<Scalar> centroid(const PointCloud<Scalar>& cloud) {
  return centroid(cloud.points);
}

}  // namespace gravden

#endif  // GRAVDEN_CORE_HPP
