#ifndef GRAVDEN_GRAVITY_HPP
#define GRAVDEN_GRAVITY_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "gravden/prefilter.hpp"

namespace gravden {

template <typename Scalar>
struct GravityWeights {
  Scalar rho_med;
  Scalar alpha = 1;
  Scalar sigma = 1;
  Scalar epsilon = Scalar(1e-12);
};

/// Median; the mean of the two central values for even counts.
template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty set");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const Scalar upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const Scalar lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / Scalar(2);
}

/// (rho_i rho_j / (rho_med^2 + eps))^(alpha/2)
template <typename Scalar>
Scalar density_weight(Scalar rho_i, Scalar rho_j, Scalar rho_med, Scalar alpha, Scalar epsilon) {
  if (alpha == Scalar(0)) return Scalar(1);
  return std::pow(rho_i * rho_j / (rho_med * rho_med + epsilon), alpha / Scalar(2));
}

/// Gaussian soft cutoff with bandwidth sigma * r_k.
template <typename Scalar>
Scalar distance_weight(Scalar d, Scalar r_k, Scalar sigma) {
  const Scalar bw = sigma * r_k;
  return std::exp(-(d * d) / (Scalar(2) * bw * bw));
}

template <typename Scalar>
Scalar gravity_kernel(Scalar d, Scalar epsilon) {
  return Scalar(1) / (d * d + epsilon);
}

/// Dual-weight attraction of candidate `i` summed over its neighbor list.
template <typename Scalar>
Scalar weighted_score(std::size_t i, const DensityField<Scalar>& field, const GravityWeights<Scalar>& w) {
  const auto nb = field.neighbors_of(i);
  const auto dist = field.distances_of(i);
  // r_k can be zero for coincident neighbors; clamp so the bandwidth stays positive.
  const Scalar r_k = std::max(field.r_k[i], w.epsilon);
  Scalar score = 0;
  for (std::size_t j = 0; j < nb.size(); ++j) {
    const Scalar rho_j = field.rho[static_cast<std::size_t>(nb[j])];
    score += density_weight(field.rho[i], rho_j, w.rho_med, w.alpha, w.epsilon) *
             distance_weight(dist[j], r_k, w.sigma) * gravity_kernel(dist[j], w.epsilon);
  }
  return score;
}

template <typename Scalar>
std::vector<Scalar> weighted_scores(const DensityField<Scalar>& field, const GravityWeights<Scalar>& w) {
  std::vector<Scalar> scores(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) scores[i] = weighted_score(i, field, w);
  return scores;
}

/// ceil(lambda * n), guarded against representation error such as
/// 0.3 * 10 = 3.0000000000000004.
inline std::size_t retained_count(std::size_t n, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorKind::InvalidParameter, "lambda must lie in (0, 1]");
  const double exact = lambda * static_cast<double>(n);
  auto m = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min(m, n);
}

/// Positions of the ceil(lambda * n) highest scores; ties go to the smaller
/// key. The result is sorted by key.
template <typename Scalar>
std::vector<std::size_t> select_top(std::span<const Scalar> scores, std::span<const PointId> keys, double lambda) {
  if (scores.size() != keys.size()) throw Error(ErrorKind::InvalidParameter, "scores and keys differ in length");
  const std::size_t m = retained_count(scores.size(), lambda);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return keys[a] < keys[b];
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(), better);
  order.resize(m);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

}  // namespace gravden

#endif  // GRAVDEN_GRAVITY_HPP
