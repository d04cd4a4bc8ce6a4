#ifndef GRAVDEN_BASELINE_HPP
#define GRAVDEN_BASELINE_HPP

#include <vector>

#include "gravden/core.hpp"
#include "gravden/kdtree.hpp"

namespace gravden {

/// Gravitational-feature-function denoiser: each point's neighbor count within
/// a global radius R, divided by its squared distance to the centroid, is
/// compared against a threshold derived from the cloud extents.
struct BaselineParams {
  double G = 6.67e-11;
  double alpha_threshold = 600.0;

  void validate() const {
    if (!(G > 0.0)) throw Error(ErrorKind::InvalidParameter, "G must be positive");
    if (!(alpha_threshold > 0.0)) throw Error(ErrorKind::InvalidParameter, "alpha_threshold must be positive");
  }
};

/// R = 6 (Hx Hy + Hx Hz + Hy Hz) / N. Dimensionally an area per point, used
/// as a radius exactly as the method defines it.
template <typename Scalar>
Scalar search_radius(const PointCloud<Scalar>& cloud) {
  const Point3<Scalar> h = bounding_box(cloud).extents();
  return Scalar(6) * (h.x() * h.y() + h.x() * h.z() + h.y() * h.z()) / static_cast<Scalar>(cloud.size());
}

/// T = alpha G (Hx + Hy + Hz) / N
template <typename Scalar>
Scalar baseline_threshold(const PointCloud<Scalar>& cloud, const BaselineParams& params) {
  const Point3<Scalar> h = bounding_box(cloud).extents();
  return static_cast<Scalar>(params.alpha_threshold) * static_cast<Scalar>(params.G) * h.sum() /
         static_cast<Scalar>(cloud.size());
}

/// Columns retained by the baseline, ascending. A point sitting exactly on the
/// centroid is kept; neighbor counts include the point itself.
template <typename Scalar>
IndexList baseline_denoise(const PointCloud<Scalar>& cloud, const BaselineParams& params = {}) {
  params.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "baseline denoise of an empty cloud");
  const Point3<Scalar> theta = centroid(cloud);
  const Scalar radius = search_radius(cloud);
  const Scalar threshold = baseline_threshold(cloud, params);
  const auto G = static_cast<Scalar>(params.G);

  const KdTree<Scalar> tree(cloud.points, cloud.ids);
  IndexList kept;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Scalar d = (cloud.points.col(i) - theta).norm();
    if (d == Scalar(0)) {
      kept.push_back(i);
      continue;
    }
    const auto n = static_cast<Scalar>(tree.count_within(cloud.points.col(i), radius * radius));
    const Scalar force = G * n / (d * d);
    if (force >= threshold / d) kept.push_back(i);
  }
  return kept;
}

}  // namespace gravden

#endif  // GRAVDEN_BASELINE_HPP
