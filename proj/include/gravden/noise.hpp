#ifndef GRAVDEN_NOISE_HPP
#define GRAVDEN_NOISE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "gravden/core.hpp"

namespace gravden {

struct NoiseSpec {
  double random_ratio = 0.0;
  double dense_ratio = 0.0;
  int cluster_count = 3;
  double cluster_sigma_fraction = 0.02;  // of the clean box diagonal
  double bbox_expand = 1.1;              // about the clean box center
  std::uint64_t seed = 0;

  void validate() const {
    if (!(random_ratio >= 0.0) || !(dense_ratio >= 0.0))
      throw Error(ErrorKind::InvalidParameter, "noise ratios must be >= 0");
    if (dense_ratio > 0.0 && cluster_count < 1)
      throw Error(ErrorKind::InvalidParameter, "cluster_count must be >= 1 when dense noise is requested");
    if (!(cluster_sigma_fraction >= 0.0)) throw Error(ErrorKind::InvalidParameter, "cluster_sigma must be >= 0");
    if (!(bbox_expand > 0.0)) throw Error(ErrorKind::InvalidParameter, "bbox_expand must be positive");
  }
};

/// Seeded stream built only from standard-specified pieces (seed_seq and
/// mt19937_64) plus explicit conversions, so a (seed, stream) pair yields the
/// same sequence on every conforming platform.
class NoiseRng {
 public:
  NoiseRng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; both outputs are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// round-half-away-from-zero of ratio * n
inline std::size_t noise_point_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

namespace detail {

inline constexpr std::uint32_t kRandomStream = 1;
inline constexpr std::uint32_t kDenseStream = 2;

/// The unlabeled part of the cloud (all of it when there are no labels).
template <typename Scalar>
Points3<Scalar> clean_part(const PointCloud<Scalar>& cloud) {
  if (!cloud.has_labels()) return cloud.points;
  IndexList cols;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if (cloud.labels[static_cast<std::size_t>(i)] == 0) cols.push_back(i);
  return cloud.points(Eigen::all, cols);
}

template <typename Scalar>
PointCloud<Scalar> append_noise(const PointCloud<Scalar>& cloud, const Points3<Scalar>& added) {
  PointCloud<Scalar> out;
  out.points.resize(3, cloud.size() + added.cols());
  out.points << cloud.points, added;
  out.labels = cloud.has_labels() ? cloud.labels : std::vector<std::uint8_t>(static_cast<std::size_t>(cloud.size()), 0);
  out.labels.resize(static_cast<std::size_t>(out.size()), 1);
  out.ids = cloud.ids;
  PointId next = 0;
  for (auto id : cloud.ids) next = std::max(next, id + 1);
  for (Eigen::Index i = 0; i < added.cols(); ++i) out.ids.push_back(next++);
  return out;
}

template <typename Scalar>
Aabb<Scalar> expanded_box(const Aabb<Scalar>& box, double expand) {
  const Point3<Scalar> c = box.center();
  const Point3<Scalar> half = box.extents() * static_cast<Scalar>(expand / 2.0);
  return {c - half, c + half};
}

}  // namespace detail

/// Appends round(ratio * N) points drawn uniformly from the clean box expanded
/// by `spec.bbox_expand` about its center. N and the box come from the
/// unlabeled points. Added points are labeled noise; existing labels are kept
/// (an unlabeled input becomes all-clean).
template <typename Scalar>
PointCloud<Scalar> inject_random(const PointCloud<Scalar>& cloud, double ratio, const NoiseSpec& spec) {
  spec.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cannot add noise to an empty cloud");
  if (!(ratio >= 0.0)) throw Error(ErrorKind::InvalidParameter, "noise ratio must be >= 0");
  const Points3<Scalar> clean = detail::clean_part(cloud);
  const auto count = noise_point_count(ratio, static_cast<std::size_t>(clean.cols()));
  const auto box = detail::expanded_box(bounding_box(clean), spec.bbox_expand);
  const Point3<Scalar> span = box.extents();

  NoiseRng rng(spec.seed, detail::kRandomStream);
  Points3<Scalar> added(3, static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < added.cols(); ++i)
    for (int a = 0; a < 3; ++a) added(a, i) = box.min(a) + static_cast<Scalar>(rng.uniform()) * span(a);
  return detail::append_noise(cloud, added);
}

/// Appends round(ratio * N) points split as evenly as possible over
/// `spec.cluster_count` isotropic Gaussian blobs. Blob centers are uniform in
/// the expanded clean box; the standard deviation is cluster_sigma_fraction
/// times the clean box diagonal.
template <typename Scalar>
PointCloud<Scalar> inject_dense_clusters(const PointCloud<Scalar>& cloud, double ratio, const NoiseSpec& spec) {
  spec.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cannot add noise to an empty cloud");
  if (!(ratio >= 0.0)) throw Error(ErrorKind::InvalidParameter, "noise ratio must be >= 0");
  const Points3<Scalar> clean = detail::clean_part(cloud);
  const auto count = noise_point_count(ratio, static_cast<std::size_t>(clean.cols()));
  if (count > 0 && spec.cluster_count < 1)
    throw Error(ErrorKind::InvalidParameter, "cluster_count must be >= 1 when dense noise is requested");
  const auto clean_box = bounding_box(clean);
  const auto box = detail::expanded_box(clean_box, spec.bbox_expand);
  const Point3<Scalar> span = box.extents();
  const double sigma = spec.cluster_sigma_fraction * static_cast<double>(clean_box.diagonal());

  NoiseRng rng(spec.seed, detail::kDenseStream);
  Points3<Scalar> added(3, static_cast<Eigen::Index>(count));
  const auto clusters = static_cast<std::size_t>(std::max(spec.cluster_count, 1));
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < clusters && count > 0; ++c) {
    const std::size_t in_cluster = count / clusters + (c < count % clusters ? 1 : 0);
    Point3<Scalar> center;
    for (int a = 0; a < 3; ++a) center(a) = box.min(a) + static_cast<Scalar>(rng.uniform()) * span(a);
    for (std::size_t p = 0; p < in_cluster; ++p, ++col)
      for (int a = 0; a < 3; ++a) added(a, col) = center(a) + static_cast<Scalar>(sigma * rng.normal());
  }
  return detail::append_noise(cloud, added);
}

/// Random noise followed by dense clusters, both sized from the clean count.
template <typename Scalar>
PointCloud<Scalar> add_noise(const PointCloud<Scalar>& cloud, const NoiseSpec& spec) {
  auto noisy = inject_random(cloud, spec.random_ratio, spec);
  return inject_dense_clusters(noisy, spec.dense_ratio, spec);
}

}  // namespace gravden

#endif  // GRAVDEN_NOISE_HPP
