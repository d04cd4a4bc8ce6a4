#ifndef GRAVDEN_PIPELINE_HPP
#define GRAVDEN_PIPELINE_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gravden/baseline.hpp"
#include "gravden/core.hpp"
#include "gravden/noise.hpp"

namespace gravden {

enum class MedianScope { PerLeaf, Global };

/// Tunables of the octree -> voxel gate -> kNN density -> gravity pipeline.
struct DenoiseParams {
  Eigen::Index max_leaf_points = 5000;
  double min_leaf_edge_fraction = 1.0 / 64.0;
  double beta = 2.0;              // voxel enlargement
  std::size_t min_vox_count = 4;  // n_v
  Eigen::Index k = 12;
  double q = 0.2;  // density percentile, on the 0..100 scale
  double alpha = 1.0;
  double sigma = 1.0;
  double lambda = 0.99;
  double epsilon = 1e-12;
  bool recompute_knn = false;
  MedianScope median_scope = MedianScope::PerLeaf;

  void validate() const;
};

struct StageToggle {
  bool use_octree = true;
  bool a1_voxel = true;
  bool a2_density = true;
  bool a3_gravity = true;

  static StageToggle all_off() { return {false, false, false, false}; }
};

struct StageCounts {
  std::size_t n_input = 0;
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::size_t n_output = 0;
};

/// Seconds. Stage entries sum the per-leaf work (they can exceed `total` when
/// leaves run on several workers); `total` is wall-clock without I/O.
struct StageTimings {
  double octree = 0.0;
  double a1_voxel = 0.0;
  double a2_density = 0.0;
  double a3_gravity = 0.0;
  double total = 0.0;
  double io = 0.0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double psnr_db = 0.0;  // +inf when the clean points are all recovered
  double cd = 0.0;       // squared input units
};

struct RunReport {
  std::string name;
  bool baseline = false;
  DenoiseParams params;
  BaselineParams baseline_params;
  StageToggle toggles;
  std::optional<NoiseSpec> noise;
  unsigned threads = 1;
  int repeats = 1;
  std::size_t leaves = 0;
  StageCounts counts;
  StageTimings timings;
  std::optional<EvalReport> metrics;
  std::string input_sha256;
};

struct DenoiseResult {
  PointCloudd cloud;  // retained points in input order
  IndexList kept;     // their columns in the input cloud
  RunReport report;
};

/// Runs the enabled stages leaf by leaf on `threads` workers (0 = hardware
/// concurrency) and merges the survivors. The output is independent of the
/// worker count. When the input carries labels the report includes removal
/// and geometry metrics against its unlabeled points.
DenoiseResult denoise(const PointCloudd& cloud, const DenoiseParams& params, const StageToggle& toggles = {},
                      unsigned threads = 1);

/// As denoise, repeated `repeats` times; timings are per-field medians.
DenoiseResult denoise_timed(const PointCloudd& cloud, const DenoiseParams& params, const StageToggle& toggles,
                            unsigned threads, int repeats);

/// Baseline method wrapped in the same report shape.
DenoiseResult baseline_run(const PointCloudd& cloud, const BaselineParams& params, int repeats = 1);

/// Precision/recall/F1 from the label channels, PSNR and CD between the
/// unlabeled input points and the output.
EvalReport evaluate(const PointCloudd& noisy, const PointCloudd& denoised);
EvalReport evaluate(const Points3<double>& clean, const PointCloudd& noisy, const PointCloudd& denoised);

struct AblationConfig {
  std::string name;
  bool baseline = false;
  StageToggle toggles;
};

/// Structural rows Baseline, OnlyA1, OnlyA2, OnlyA3, A1+A2, A1+A3, A2+A3, Ours
/// (octree on), followed by the full pipeline with and without the octree.
std::vector<AblationConfig> default_ablation_grid();

/// One configuration per non-comment line: `<name> baseline` or
/// `<name> <octree> <a1> <a2> <a3>` with 0/1 flags.
std::vector<AblationConfig> parse_ablation_grid(std::string_view text);

struct ExperimentOptions {
  DenoiseParams params;
  BaselineParams baseline_params;
  unsigned threads = 1;
  int repeats = 5;
};

std::vector<RunReport> run_ablation(const PointCloudd& clean, const NoiseSpec& noise,
                                    const std::vector<AblationConfig>& grid, const ExperimentOptions& options);

enum class SweepAxis { K, Q, MinVoxCount };

SweepAxis parse_sweep_axis(std::string_view name);
std::string to_string(SweepAxis axis);
std::vector<double> default_sweep_values(SweepAxis axis);
DenoiseParams with_axis_value(DenoiseParams params, SweepAxis axis, double value);

std::vector<RunReport> run_parameter_sweep(const PointCloudd& clean, const NoiseSpec& noise, SweepAxis axis,
                                           const std::vector<double>& values, const ExperimentOptions& options);

/// Applies `key = value` lines ('#' comments) to the parameters and toggles.
/// Unknown keys raise InvalidParameter.
void apply_config(std::string_view text, DenoiseParams& params, StageToggle& toggles);

}  // namespace gravden

#endif  // GRAVDEN_PIPELINE_HPP
