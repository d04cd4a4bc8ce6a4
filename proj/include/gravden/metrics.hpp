#ifndef GRAVDEN_METRICS_HPP
#define GRAVDEN_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "gravden/core.hpp"
#include "gravden/kdtree.hpp"

namespace gravden {

/// Counts behind removal precision/recall.
struct RemovalConfusion {
  std::size_t removed_noise = 0;  // N_q
  std::size_t removed = 0;        // N_s
  std::size_t noise = 0;          // N_y

  void validate() const {
    if (removed_noise > removed || removed_noise > noise)
      throw Error(ErrorKind::InvalidParameter, "removed noise exceeds removed or total noise");
  }
};

struct RemovalScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1 of noise removal; any 0/0 evaluates to 0.
inline RemovalScores removal_metrics(const RemovalConfusion& c) {
  c.validate();
  RemovalScores s;
  s.precision = c.removed ? static_cast<double>(c.removed_noise) / static_cast<double>(c.removed) : 0.0;
  s.recall = c.noise ? static_cast<double>(c.removed_noise) / static_cast<double>(c.noise) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

/// Confusion of a labeled input against the labels that survived denoising.
inline RemovalConfusion confusion_from_labels(std::span<const std::uint8_t> input_labels,
                                              std::span<const std::uint8_t> output_labels) {
  RemovalConfusion c;
  std::size_t kept_noise = 0;
  for (auto l : input_labels) c.noise += (l != 0);
  for (auto l : output_labels) kept_noise += (l != 0);
  if (output_labels.size() > input_labels.size() || kept_noise > c.noise)
    throw Error(ErrorKind::InvalidParameter, "denoised labels are not a subset of the input labels");
  c.removed = input_labels.size() - output_labels.size();
  c.removed_noise = c.noise - kept_noise;
  return c;
}

/// Mean over `from` of the squared distance to the nearest point of `to`.
template <typename Scalar>
double mean_nearest_sq(const Points3<Scalar>& from, const KdTree<Scalar>& to) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) sum += static_cast<double>(to.nearest(from.col(i)).dist2);
  return sum / static_cast<double>(from.cols());
}

/// 10 log10(M^2 / MSE) with M the clean box diagonal and MSE the mean squared
/// distance from each clean point to its nearest denoised point. Returns
/// +infinity when MSE is zero.
template <typename Scalar>
double psnr(const Points3<Scalar>& clean, const Points3<Scalar>& denoised) {
  if (clean.cols() == 0 || denoised.cols() == 0) throw Error(ErrorKind::EmptyInput, "psnr needs two non-empty clouds");
  const double m = static_cast<double>(bounding_box(clean).diagonal());
  const double mse = mean_nearest_sq(clean, KdTree<Scalar>(denoised));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(m * m / mse);
}

/// Symmetric Chamfer distance with squared point-to-set distances.
template <typename Scalar>
double chamfer(const Points3<Scalar>& a, const Points3<Scalar>& b) {
  if (a.cols() == 0 || b.cols() == 0) throw Error(ErrorKind::EmptyInput, "chamfer needs two non-empty clouds");
  return mean_nearest_sq(a, KdTree<Scalar>(b)) + mean_nearest_sq(b, KdTree<Scalar>(a));
}

/// Two-annotator signal/noise agreement counts plus each annotator's signal
/// total (the noise totals follow from the grand total).
struct AgreementTable {
  std::size_t agree_signal = 0;
  std::size_t agree_noise = 0;
  std::size_t disagree = 0;
  std::size_t a_signal = 0;
  std::size_t b_signal = 0;

  std::size_t total() const noexcept { return agree_signal + agree_noise + disagree; }

  void validate() const {
    if (total() == 0) throw Error(ErrorKind::EmptyInput, "agreement table is empty");
    for (auto s : {a_signal, b_signal})
      if (s < agree_signal || s > agree_signal + disagree)
        throw Error(ErrorKind::InvalidParameter, "annotator marginal inconsistent with agreement counts");
    if ((a_signal - agree_signal) + (b_signal - agree_signal) != disagree)
      throw Error(ErrorKind::InvalidParameter, "marginals do not account for every disagreement");
  }
};

struct KappaResult {
  double p0;
  double pe;
  std::optional<double> kappa;  // empty when pe == 1
};

inline double observed_agreement(std::size_t agree_signal, std::size_t agree_noise, std::size_t disagree) {
  const auto total = agree_signal + agree_noise + disagree;
  if (total == 0) throw Error(ErrorKind::EmptyInput, "agreement table is empty");
  return static_cast<double>(agree_signal + agree_noise) / static_cast<double>(total);
}

inline std::optional<double> kappa_from(double p0, double pe) {
  if (pe == 1.0) return std::nullopt;
  return (p0 - pe) / (1.0 - pe);
}

inline KappaResult cohen_kappa(const AgreementTable& t) {
  t.validate();
  const auto n = static_cast<double>(t.total());
  const double a_sig = static_cast<double>(t.a_signal) / n;
  const double b_sig = static_cast<double>(t.b_signal) / n;
  KappaResult r;
  r.p0 = observed_agreement(t.agree_signal, t.agree_noise, t.disagree);
  r.pe = a_sig * b_sig + (1.0 - a_sig) * (1.0 - b_sig);
  r.kappa = kappa_from(r.p0, r.pe);
  return r;
}

}  // namespace gravden

#endif  // GRAVDEN_METRICS_HPP
