#include "gravden/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include "gravden/gravity.hpp"
#include "gravden/metrics.hpp"
#include "gravden/octree.hpp"
#include "gravden/parallel.hpp"
#include "gravden/prefilter.hpp"

namespace gravden {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, msg);
}

/// Per-leaf state between the prefilter phase and the scoring phase.
struct LeafWork {
  IndexList p1;
  std::optional<DensityField<double>> field;  // over the A2 survivors (or P1 when A2 is off)
  IndexList p2;
  IndexList out;
  double t_a1 = 0.0, t_a2 = 0.0, t_a3 = 0.0;
};

void prefilter_leaf(const PointCloudd& cloud, const Leaf<double>& leaf, const DenoiseParams& p,
                    const StageToggle& toggles, LeafWork& w) {
  auto t0 = Clock::now();
  w.p1 = leaf.indices;
  if (toggles.a1_voxel) {
    if (auto h = adaptive_voxel_size(leaf, p.beta))
      w.p1 = voxel_gate(cloud.points, std::span<const Eigen::Index>(leaf.indices), leaf.box.min, *h, p.min_vox_count);
  }
  w.t_a1 = seconds_since(t0);

  t0 = Clock::now();
  w.p2 = w.p1;
  const bool need_field = toggles.a2_density || toggles.a3_gravity;
  if (need_field && w.p1.size() >= 2) {
    auto field = knn_density(cloud, std::span<const Eigen::Index>(w.p1), p.k, p.epsilon);
    if (toggles.a2_density) {
      const auto keep = density_filter(field, p.q);
      field = restrict_field(field, std::span<const std::size_t>(keep));
      w.p2 = field.members;
      if (toggles.a3_gravity && p.recompute_knn && w.p2.size() >= 2)
        field = knn_density(cloud, std::span<const Eigen::Index>(w.p2), p.k, p.epsilon);
    }
    if (toggles.a3_gravity) w.field = std::move(field);
  }
  w.t_a2 = seconds_since(t0);
}

void score_leaf(const DenoiseParams& p, const std::optional<double>& global_median, LeafWork& w) {
  const auto t0 = Clock::now();
  if (!w.field || w.field->empty()) {
    // Fewer than two candidates: every score is the empty sum, so selection
    // falls back to the id order.
    const auto m = w.p2.empty() ? 0 : retained_count(w.p2.size(), p.lambda);
    w.out.assign(w.p2.begin(), w.p2.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    const auto& field = *w.field;
    GravityWeights<double> gw{global_median ? *global_median : median(field.rho), p.alpha, p.sigma, p.epsilon};
    const auto scores = weighted_scores(field, gw);
    const auto top = select_top(std::span<const double>(scores), std::span<const PointId>(field.ids), p.lambda);
    w.out.reserve(top.size());
    for (auto i : top) w.out.push_back(field.members[i]);
  }
  w.t_a3 = seconds_since(t0);
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
T median_of(std::vector<T> v) {
  return median(std::move(v));
}

StageTimings median_timings(const std::vector<StageTimings>& runs) {
  auto pick = [&](double StageTimings::*field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    return median_of(std::move(v));
  };
  StageTimings t;
  t.octree = pick(&StageTimings::octree);
  t.a1_voxel = pick(&StageTimings::a1_voxel);
  t.a2_density = pick(&StageTimings::a2_density);
  t.a3_gravity = pick(&StageTimings::a3_gravity);
  t.total = pick(&StageTimings::total);
  t.io = pick(&StageTimings::io);
  return t;
}

}  // namespace

void DenoiseParams::validate() const {
  require(max_leaf_points >= 1, "max_leaf_points must be >= 1");
  require(min_leaf_edge_fraction > 0.0 && min_leaf_edge_fraction < 1.0, "min_leaf_edge_fraction must lie in (0, 1)");
  require(beta > 0.0, "beta must be positive");
  require(k >= 1, "K must be >= 1");
  require(q >= 0.0 && q <= 100.0, "q must lie in [0, 100]");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(sigma > 0.0, "sigma must be positive");
  require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0, 1]");
  require(epsilon > 0.0, "epsilon must be positive");
}

DenoiseResult denoise(const PointCloudd& cloud, const DenoiseParams& params, const StageToggle& toggles,
                      unsigned threads) {
  params.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cannot denoise an empty cloud");
  cloud.validate();

  const auto start = Clock::now();
  DenoiseResult result;
  RunReport& report = result.report;
  report.params = params;
  report.toggles = toggles;
  report.threads = resolve_threads(threads);

  auto t0 = Clock::now();
  LeafPartition<double> parts;
  if (toggles.use_octree) {
    parts = partition(cloud, OctreeLimits{params.max_leaf_points, params.min_leaf_edge_fraction});
  } else {
    Leaf<double> whole;
    whole.indices.resize(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index i = 0; i < cloud.size(); ++i) whole.indices[static_cast<std::size_t>(i)] = i;
    whole.box = bounding_box(cloud);
    parts.leaves.push_back(std::move(whole));
  }
  report.timings.octree = seconds_since(t0);
  report.leaves = parts.leaves.size();

  std::vector<LeafWork> work(parts.leaves.size());
  parallel_for(work.size(), threads,
               [&](std::size_t i) { prefilter_leaf(cloud, parts.leaves[i], params, toggles, work[i]); });

  if (toggles.a3_gravity) {
    std::optional<double> global_median;
    if (params.median_scope == MedianScope::Global) {
      std::vector<double> all;
      for (const auto& w : work)
        if (w.field) all.insert(all.end(), w.field->rho.begin(), w.field->rho.end());
      if (!all.empty()) global_median = median(std::move(all));
    }
    parallel_for(work.size(), threads, [&](std::size_t i) { score_leaf(params, global_median, work[i]); });
  }

  StageCounts& counts = report.counts;
  counts.n_input = static_cast<std::size_t>(cloud.size());
  for (auto& w : work) {
    counts.p1 += w.p1.size();
    counts.p2 += w.p2.size();
    report.timings.a1_voxel += w.t_a1;
    report.timings.a2_density += w.t_a2;
    report.timings.a3_gravity += w.t_a3;
    const auto& out = toggles.a3_gravity ? w.out : w.p2;
    result.kept.insert(result.kept.end(), out.begin(), out.end());
  }
  std::sort(result.kept.begin(), result.kept.end());
  counts.n_output = result.kept.size();
  result.cloud = subset(cloud, std::span<const Eigen::Index>(result.kept));
  report.timings.total = seconds_since(start);

  if (cloud.has_labels()) report.metrics = evaluate(cloud, result.cloud);
  return result;
}

DenoiseResult denoise_timed(const PointCloudd& cloud, const DenoiseParams& params, const StageToggle& toggles,
                            unsigned threads, int repeats) {
  require(repeats >= 1, "repeats must be >= 1");
  std::vector<StageTimings> timings;
  DenoiseResult first;
  for (int r = 0; r < repeats; ++r) {
    auto res = denoise(cloud, params, toggles, threads);
    timings.push_back(res.report.timings);
    if (r == 0) first = std::move(res);
  }
  first.report.timings = median_timings(timings);
  first.report.repeats = repeats;
  return first;
}

DenoiseResult baseline_run(const PointCloudd& cloud, const BaselineParams& params, int repeats) {
  require(repeats >= 1, "repeats must be >= 1");
  DenoiseResult result;
  std::vector<double> totals;
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    auto kept = baseline_denoise(cloud, params);
    totals.push_back(seconds_since(start));
    if (r == 0) result.kept = std::move(kept);
  }
  result.cloud = subset(cloud, std::span<const Eigen::Index>(result.kept));
  auto& report = result.report;
  report.name = "Baseline";
  report.baseline = true;
  report.baseline_params = params;
  report.toggles = StageToggle::all_off();
  report.repeats = repeats;
  report.counts = {static_cast<std::size_t>(cloud.size()), static_cast<std::size_t>(cloud.size()),
                   static_cast<std::size_t>(cloud.size()), result.kept.size()};
  report.timings.total = median_of(totals);
  if (cloud.has_labels()) report.metrics = evaluate(cloud, result.cloud);
  return result;
}

EvalReport evaluate(const Points3<double>& clean, const PointCloudd& noisy, const PointCloudd& denoised) {
  if (!noisy.has_labels()) throw Error(ErrorKind::InvalidParameter, "evaluation needs a labeled input cloud");
  if (!denoised.empty() && !denoised.has_labels())
    throw Error(ErrorKind::InvalidParameter, "evaluation needs labels on the denoised cloud");
  EvalReport e;
  const auto s = removal_metrics(confusion_from_labels(noisy.labels, denoised.labels));
  e.precision = s.precision;
  e.recall = s.recall;
  e.f1 = s.f1;
  if (denoised.empty() || clean.cols() == 0) {
    e.psnr_db = 0.0;
    e.cd = std::numeric_limits<double>::infinity();
  } else {
    e.psnr_db = psnr(clean, denoised.points);
    e.cd = chamfer(clean, denoised.points);
  }
  return e;
}

EvalReport evaluate(const PointCloudd& noisy, const PointCloudd& denoised) {
  IndexList clean_cols;
  for (Eigen::Index i = 0; i < noisy.size(); ++i)
    if (noisy.has_labels() && noisy.labels[static_cast<std::size_t>(i)] == 0) clean_cols.push_back(i);
  return evaluate(Points3<double>(noisy.points(Eigen::all, clean_cols)), noisy, denoised);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

std::vector<AblationConfig> default_ablation_grid() {
  auto row = [](std::string name, bool a1, bool a2, bool a3, bool octree = true) {
    return AblationConfig{std::move(name), false, StageToggle{octree, a1, a2, a3}};
  };
  return {
      AblationConfig{"Baseline", true, StageToggle::all_off()},
      row("OnlyA1", true, false, false),
      row("OnlyA2", false, true, false),
      row("OnlyA3", false, false, true),
      row("A1+A2", true, true, false),
      row("A1+A3", true, false, true),
      row("A2+A3", false, true, true),
      row("Ours", true, true, true),
      row("with-octree", true, true, true, true),
      row("without-octree", true, true, true, false),
  };
}

std::vector<AblationConfig> parse_ablation_grid(std::string_view text) {
  std::vector<AblationConfig> grid;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto where = "grid line " + std::to_string(line_no) + ": ";
    if (tok.size() == 2 && tok[1] == "baseline") {
      grid.push_back({tok[0], true, StageToggle::all_off()});
      continue;
    }
    if (tok.size() != 5) throw Error(ErrorKind::ParseError, where + "expected '<name> baseline' or '<name> o a1 a2 a3'");
    bool flags[4];
    for (int f = 0; f < 4; ++f) {
      const auto& t = tok[static_cast<std::size_t>(f + 1)];
      if (t != "0" && t != "1") throw Error(ErrorKind::ParseError, where + "stage flags must be 0 or 1");
      flags[f] = t == "1";
    }
    grid.push_back({tok[0], false, StageToggle{flags[0], flags[1], flags[2], flags[3]}});
  }
  if (grid.empty()) throw Error(ErrorKind::ParseError, "ablation grid has no configurations");
  return grid;
}

std::vector<RunReport> run_ablation(const PointCloudd& clean, const NoiseSpec& noise,
                                    const std::vector<AblationConfig>& grid, const ExperimentOptions& options) {
  const auto noisy = add_noise(clean, noise);
  std::vector<RunReport> rows;
  for (const auto& cfg : grid) {
    RunReport report;
    if (cfg.baseline) {
      report = baseline_run(noisy, options.baseline_params, options.repeats).report;
    } else {
      report = denoise_timed(noisy, options.params, cfg.toggles, options.threads, options.repeats).report;
    }
    report.name = cfg.name;
    report.noise = noise;
    rows.push_back(std::move(report));
  }
  return rows;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "k") return SweepAxis::K;
  if (name == "q") return SweepAxis::Q;
  if (name == "min-vox-count") return SweepAxis::MinVoxCount;
  throw Error(ErrorKind::InvalidParameter, "unknown sweep axis '" + std::string(name) + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K: return "k";
    case SweepAxis::Q: return "q";
    case SweepAxis::MinVoxCount: return "min-vox-count";
  }
  return "unknown";
}

std::vector<double> default_sweep_values(SweepAxis axis) {
  std::vector<double> v;
  switch (axis) {
    case SweepAxis::K:
      for (int k = 4; k <= 40; k += 4) v.push_back(k);
      break;
    case SweepAxis::Q:
      for (int i = 1; i <= 10; ++i) v.push_back(0.05 * i);
      break;
    case SweepAxis::MinVoxCount:
      for (int n = 2; n <= 11; ++n) v.push_back(n);
      break;
  }
  return v;
}

DenoiseParams with_axis_value(DenoiseParams params, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::K:
      require(value >= 1.0 && value == std::floor(value), "K sweep values must be positive integers");
      params.k = static_cast<Eigen::Index>(value);
      break;
    case SweepAxis::Q:
      params.q = value;
      break;
    case SweepAxis::MinVoxCount:
      require(value >= 0.0 && value == std::floor(value), "min-vox-count sweep values must be integers >= 0");
      params.min_vox_count = static_cast<std::size_t>(value);
      break;
  }
  return params;
}

std::vector<RunReport> run_parameter_sweep(const PointCloudd& clean, const NoiseSpec& noise, SweepAxis axis,
                                           const std::vector<double>& values, const ExperimentOptions& options) {
  require(!values.empty(), "sweep needs at least one value");
  const auto noisy = add_noise(clean, noise);
  std::vector<RunReport> rows;
  for (double v : values) {
    const auto params = with_axis_value(options.params, axis, v);
    auto report = denoise_timed(noisy, params, StageToggle{}, options.threads, options.repeats).report;
    report.name = to_string(axis) + "=" + format_number(v);
    report.noise = noise;
    rows.push_back(std::move(report));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

namespace {

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorKind::InvalidParameter, "config key '" + key + "': '" + value + "' is not a number");
  return v;
}

long long to_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorKind::InvalidParameter, "config key '" + key + "': '" + value + "' is not an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw Error(ErrorKind::InvalidParameter, "config key '" + key + "': '" + value + "' is not a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config(std::string_view text, DenoiseParams& params, StageToggle& toggles) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ParseError, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "k") params.k = static_cast<Eigen::Index>(to_integer(key, value));
    else if (key == "q") params.q = to_double(key, value);
    else if (key == "min-vox-count") {
      const auto v = to_integer(key, value);
      require(v >= 0, "min-vox-count must be >= 0");
      params.min_vox_count = static_cast<std::size_t>(v);
    }
    else if (key == "beta") params.beta = to_double(key, value);
    else if (key == "alpha") params.alpha = to_double(key, value);
    else if (key == "sigma") params.sigma = to_double(key, value);
    else if (key == "lambda") params.lambda = to_double(key, value);
    else if (key == "epsilon") params.epsilon = to_double(key, value);
    else if (key == "max-leaf-points") params.max_leaf_points = static_cast<Eigen::Index>(to_integer(key, value));
    else if (key == "min-leaf-edge-fraction") params.min_leaf_edge_fraction = to_double(key, value);
    else if (key == "recompute-knn") params.recompute_knn = to_bool(key, value);
    else if (key == "median") {
      if (value == "leaf") params.median_scope = MedianScope::PerLeaf;
      else if (value == "global") params.median_scope = MedianScope::Global;
      else throw Error(ErrorKind::InvalidParameter, "config key 'median' must be 'leaf' or 'global'");
    }
    else if (key == "octree") toggles.use_octree = to_bool(key, value);
    else if (key == "a1") toggles.a1_voxel = to_bool(key, value);
    else if (key == "a2") toggles.a2_density = to_bool(key, value);
    else if (key == "a3") toggles.a3_gravity = to_bool(key, value);
    else throw Error(ErrorKind::InvalidParameter, "unknown config key '" + key + "'");
  }
  params.validate();
}

}  // namespace gravden
