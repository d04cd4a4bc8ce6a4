// gravden: command-line front end for denoising, noise injection, evaluation
// and the ablation / sweep experiments.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gravden/error.hpp"
#include "gravden/io.hpp"
#include "gravden/pipeline.hpp"
#include "gravden/report.hpp"

namespace fs = std::filesystem;
using namespace gravden;

namespace {

struct Timed {
  PointCloudd cloud;
  std::string sha256;
  double seconds = 0.0;
};

Timed load(const std::string& path) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bytes = io::read_file_bytes(path);
  io::ReadInfo info;
  Timed out;
  out.cloud = io::parse_cloud(bytes, io::infer_format(path), &info);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.sha256 = report::sha256_hex(bytes);
  for (const auto& w : info.warnings) std::cerr << "warning: " << path << ": " << w << '\n';
  return out;
}

io::CloudFormat output_format(const std::string& path, const std::string& requested) {
  if (!requested.empty()) return io::parse_format(requested);
  const auto ext = fs::path(path).extension().string();
  return ext == ".xyz" || ext == ".txt" ? io::CloudFormat::Xyz : io::CloudFormat::PlyBinaryLittleEndian;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error(ErrorKind::InvalidParameter, "'" + item + "' is not a number");
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorKind::InvalidParameter, "--values is empty");
  return values;
}

/// Pipeline flags shared by denoise, ablate and sweep. Unset options leave the
/// config-file values alone.
struct PipelineFlags {
  std::string params_file;
  std::optional<long long> k, min_vox_count, max_leaf_points;
  std::optional<double> q, beta, alpha, sigma, lambda, epsilon, min_leaf_edge_fraction;
  std::optional<std::string> median;
  bool no_octree = false;
  bool recompute_knn = false;
  unsigned threads = 1;
  int repeats = 5;

  void add_to(CLI::App* app) {
    app->add_option("--params", params_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--k", k, "neighbors per point");
    app->add_option("--q", q, "density percentile cut on the 0..100 scale");
    app->add_option("--min-vox-count", min_vox_count, "voxel occupancy gate n_v");
    app->add_option("--beta", beta, "voxel enlargement factor");
    app->add_option("--alpha", alpha, "density weight exponent");
    app->add_option("--sigma", sigma, "distance weight bandwidth");
    app->add_option("--lambda", lambda, "fraction of candidates kept by the gravity stage");
    app->add_option("--epsilon", epsilon, "distance floor");
    app->add_option("--max-leaf-points", max_leaf_points, "octree leaf capacity");
    app->add_option("--min-leaf-edge-fraction", min_leaf_edge_fraction, "smallest octree cell edge / box diagonal");
    app->add_option("--median", median, "rho median scope")->check(CLI::IsMember({"leaf", "global"}));
    app->add_flag("--no-octree", no_octree, "treat the cloud as a single leaf");
    app->add_flag("--recompute-knn", recompute_knn, "rebuild neighbor lists after the density filter");
    app->add_option("--threads", threads, "worker count, 0 = all cores");
    app->add_option("--repeats", repeats, "timing repetitions (median reported)")->check(CLI::PositiveNumber);
  }

  void resolve(DenoiseParams& p, StageToggle& t) const {
    if (!params_file.empty()) apply_config(io::read_file_bytes(params_file), p, t);
    if (k) p.k = static_cast<Eigen::Index>(*k);
    if (min_vox_count) {
      if (*min_vox_count < 0) throw Error(ErrorKind::InvalidParameter, "min-vox-count must be >= 0");
      p.min_vox_count = static_cast<std::size_t>(*min_vox_count);
    }
    if (max_leaf_points) p.max_leaf_points = static_cast<Eigen::Index>(*max_leaf_points);
    if (q) p.q = *q;
    if (beta) p.beta = *beta;
    if (alpha) p.alpha = *alpha;
    if (sigma) p.sigma = *sigma;
    if (lambda) p.lambda = *lambda;
    if (epsilon) p.epsilon = *epsilon;
    if (min_leaf_edge_fraction) p.min_leaf_edge_fraction = *min_leaf_edge_fraction;
    if (median) p.median_scope = *median == "global" ? MedianScope::Global : MedianScope::PerLeaf;
    if (no_octree) t.use_octree = false;
    if (recompute_knn) p.recompute_knn = true;
    p.validate();
  }
};

void print_summary_metrics(const EvalReport& m) {
  std::cout << "precision " << m.precision << "  recall " << m.recall << "  f1 " << m.f1 << "  psnr " << m.psnr_db
            << " dB  cd " << m.cd << '\n';
}

void print_summary(const RunReport& r) {
  std::cout << "input " << r.counts.n_input << "  p1 " << r.counts.p1 << "  p2 " << r.counts.p2 << "  output "
            << r.counts.n_output << "  leaves " << r.leaves << "  total " << r.timings.total << " s\n";
  if (r.metrics) print_summary_metrics(*r.metrics);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Octree-partitioned, density-gated gravitational point cloud denoiser"};
  app.require_subcommand(1);

  // denoise
  auto* den = app.add_subcommand("denoise", "Run the pipeline on a cloud");
  std::string in, out, report_path, format;
  PipelineFlags flags;
  den->add_option("--in", in, "input cloud (.ply or .xyz)")->required()->check(CLI::ExistingFile);
  den->add_option("--out", out, "output cloud")->required();
  den->add_option("--report", report_path, "JSON report");
  den->add_option("--format", format, "output format: ply-ascii, ply-binary-le, xyz");
  flags.add_to(den);
  flags.repeats = 1;

  // add-noise
  auto* an = app.add_subcommand("add-noise", "Inject labeled uniform and clustered noise");
  NoiseSpec noise;
  std::string an_in, an_out, an_format;
  an->add_option("--in", an_in, "clean cloud")->required()->check(CLI::ExistingFile);
  an->add_option("--out", an_out, "noisy cloud (carries is_noise)")->required();
  an->add_option("--random-ratio", noise.random_ratio, "uniform noise / clean count")->required();
  an->add_option("--dense-ratio", noise.dense_ratio, "clustered noise / clean count");
  an->add_option("--clusters", noise.cluster_count, "cluster count");
  an->add_option("--cluster-sigma", noise.cluster_sigma_fraction, "cluster sigma / clean box diagonal");
  an->add_option("--bbox-expand", noise.bbox_expand, "uniform sampling box scale about the center");
  an->add_option("--seed", noise.seed, "random seed")->required();
  an->add_option("--format", an_format, "output format");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a denoised cloud");
  std::string ev_clean, ev_denoised, ev_labels, ev_report;
  ev->add_option("--clean", ev_clean, "clean reference cloud")->required()->check(CLI::ExistingFile);
  ev->add_option("--denoised", ev_denoised, "denoised cloud with is_noise")->required()->check(CLI::ExistingFile);
  ev->add_option("--labels-from", ev_labels, "labeled noisy input")->required()->check(CLI::ExistingFile);
  ev->add_option("--report", ev_report, "JSON report");

  // baseline
  auto* bl = app.add_subcommand("baseline", "Run the gravitational-function baseline");
  std::string bl_in, bl_out, bl_report, bl_format;
  BaselineParams bparams;
  int bl_repeats = 1;
  bl->add_option("--in", bl_in, "input cloud")->required()->check(CLI::ExistingFile);
  bl->add_option("--out", bl_out, "output cloud")->required();
  bl->add_option("--G", bparams.G, "gravitational constant");
  bl->add_option("--alpha-threshold", bparams.alpha_threshold, "threshold coefficient");
  bl->add_option("--report", bl_report, "JSON report");
  bl->add_option("--format", bl_format, "output format");
  bl->add_option("--repeats", bl_repeats, "timing repetitions")->check(CLI::PositiveNumber);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Structural and octree ablation table");
  std::string ab_clean, ab_grid = "default", ab_dir;
  NoiseSpec ab_noise;
  ab_noise.random_ratio = 0.10;
  PipelineFlags ab_flags;
  ab->add_option("--clean", ab_clean, "clean cloud")->required()->check(CLI::ExistingFile);
  ab->add_option("--noise-seed", ab_noise.seed, "noise seed")->required();
  ab->add_option("--random-ratio", ab_noise.random_ratio, "uniform noise ratio");
  ab->add_option("--dense-ratio", ab_noise.dense_ratio, "clustered noise ratio");
  ab->add_option("--grid", ab_grid, "'default' or a grid file");
  ab->add_option("--out-dir", ab_dir, "output directory")->required();
  ab->add_option("--G", bparams.G, "baseline gravitational constant");
  ab->add_option("--alpha-threshold", bparams.alpha_threshold, "baseline threshold coefficient");
  ab_flags.add_to(ab);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Single-parameter sweep");
  std::string sw_axis, sw_values = "default", sw_clean, sw_out;
  NoiseSpec sw_noise;
  sw_noise.random_ratio = 0.05;
  PipelineFlags sw_flags;
  sw->add_option("--axis", sw_axis, "k, q or min-vox-count")->required()->check(CLI::IsMember({"k", "q", "min-vox-count"}));
  sw->add_option("--values", sw_values, "comma-separated values or 'default'");
  sw->add_option("--clean", sw_clean, "clean cloud")->required()->check(CLI::ExistingFile);
  sw->add_option("--noise-seed", sw_noise.seed, "noise seed")->required();
  sw->add_option("--random-ratio", sw_noise.random_ratio, "uniform noise ratio");
  sw->add_option("--dense-ratio", sw_noise.dense_ratio, "clustered noise ratio");
  sw->add_option("--out", sw_out, "CSV output")->required();
  sw_flags.add_to(sw);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*den) {
      DenoiseParams params;
      StageToggle toggles;
      flags.resolve(params, toggles);
      auto input = load(in);
      auto result = denoise_timed(input.cloud, params, toggles, flags.threads, flags.repeats);
      result.report.name = "denoise";
      result.report.input_sha256 = input.sha256;
      const auto t0 = std::chrono::steady_clock::now();
      io::write_cloud(result.cloud, out, output_format(out, format));
      result.report.timings.io =
          input.seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!report_path.empty()) report::write_json(report::to_json(result.report), report_path);
      print_summary(result.report);
    } else if (*an) {
      noise.validate();
      const auto input = load(an_in);
      const auto noisy = add_noise(input.cloud, noise);
      io::write_cloud(noisy, an_out, output_format(an_out, an_format));
      std::cout << "clean " << input.cloud.size() << "  noise " << noisy.noise_count() << "  total " << noisy.size()
                << '\n';
    } else if (*ev) {
      const auto clean = load(ev_clean);
      const auto labeled = load(ev_labels);
      const auto denoised = load(ev_denoised);
      RunReport r;
      r.name = "evaluate";
      r.input_sha256 = labeled.sha256;
      r.metrics = evaluate(clean.cloud.points, labeled.cloud, denoised.cloud);
      r.counts = {static_cast<std::size_t>(labeled.cloud.size()), 0, 0,
                  static_cast<std::size_t>(denoised.cloud.size())};
      if (!ev_report.empty()) report::write_json(report::to_json(r), ev_report);
      std::cout << "input " << r.counts.n_input << "  output " << r.counts.n_output << '\n';
      print_summary_metrics(*r.metrics);
    } else if (*bl) {
      bparams.validate();
      const auto input = load(bl_in);
      auto result = baseline_run(input.cloud, bparams, bl_repeats);
      result.report.input_sha256 = input.sha256;
      io::write_cloud(result.cloud, bl_out, output_format(bl_out, bl_format));
      result.report.timings.io = input.seconds;
      if (!bl_report.empty()) report::write_json(report::to_json(result.report), bl_report);
      print_summary(result.report);
    } else if (*ab) {
      ExperimentOptions opt;
      StageToggle ignored;
      ab_flags.resolve(opt.params, ignored);
      bparams.validate();
      opt.baseline_params = bparams;
      opt.threads = ab_flags.threads;
      opt.repeats = ab_flags.repeats;
      const auto grid = ab_grid == "default" ? default_ablation_grid() : parse_ablation_grid(io::read_file_bytes(ab_grid));
      const auto clean = load(ab_clean);
      auto rows = run_ablation(clean.cloud, ab_noise, grid, opt);
      fs::create_directories(ab_dir);
      nlohmann::json all = nlohmann::json::array();
      for (auto& r : rows) {
        r.input_sha256 = clean.sha256;
        all.push_back(report::to_json(r));
        std::cout << r.name << ": ";
        print_summary(r);
      }
      report::write_json(all, fs::path(ab_dir) / "ablation.json");
      report::write_text(report::ablation_table_csv(rows), fs::path(ab_dir) / "ablation.csv");
      report::write_text(report::method_table_csv(rows), fs::path(ab_dir) / "methods.csv");
    } else if (*sw) {
      ExperimentOptions opt;
      StageToggle ignored;
      sw_flags.resolve(opt.params, ignored);
      opt.threads = sw_flags.threads;
      opt.repeats = sw_flags.repeats;
      const auto axis = parse_sweep_axis(sw_axis);
      const auto values = sw_values == "default" ? default_sweep_values(axis) : parse_values(sw_values);
      const auto clean = load(sw_clean);
      const auto rows = run_parameter_sweep(clean.cloud, sw_noise, axis, values, opt);
      report::write_text(report::sweep_table_csv(axis, values, rows), sw_out);
      for (const auto& r : rows) {
        std::cout << r.name << ": ";
        print_summary(r);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
