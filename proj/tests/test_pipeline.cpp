#include "doctest.h"

#include <random>

#include "gravden/io.hpp"
#include "gravden/pipeline.hpp"
#include "gravden/report.hpp"
#include "oracles.hpp"

using namespace gravden;

namespace {

PointCloudd noisy_sphere(std::uint64_t seed, Eigen::Index surface = 6000, Eigen::Index noise = 600) {
  std::mt19937_64 rng(seed);
  return oracle::labeled_sphere(rng, surface, noise);
}

DenoiseParams small_leaves() {
  DenoiseParams p;
  p.max_leaf_points = 800;
  return p;
}

std::vector<PointId> ids_of(const PointCloudd& c) { return c.ids; }

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("all stages off is the identity") {
    const auto cloud = noisy_sphere(1);
    const auto r = denoise(cloud, DenoiseParams{}, StageToggle::all_off());
    CHECK(ids_of(r.cloud) == cloud.ids);
    CHECK(r.cloud.points == cloud.points);
  }

  TEST_CASE("vacuous thresholds are the identity") {
    const auto cloud = noisy_sphere(2);
    auto p = small_leaves();
    p.min_vox_count = 0;
    p.q = 0.0;
    p.lambda = 1.0;
    const auto r = denoise(cloud, p);
    CHECK(ids_of(r.cloud) == cloud.ids);
  }

  TEST_CASE("stage counts shrink and the output is a subset") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto cloud = noisy_sphere(seed);
      auto p = small_leaves();
      p.q = 5.0;
      p.lambda = 0.95;
      const auto r = denoise(cloud, p);
      const auto& c = r.report.counts;
      CHECK(c.n_input == 6600);
      CHECK(c.n_input >= c.p1);
      CHECK(c.p1 >= c.p2);
      CHECK(c.p2 >= c.n_output);
      CHECK(c.n_output == r.kept.size());
      CHECK(std::is_sorted(r.kept.begin(), r.kept.end()));
      CHECK(std::adjacent_find(r.kept.begin(), r.kept.end()) == r.kept.end());
      CHECK(r.report.leaves > 1);
    }
  }

  TEST_CASE("without the gravity stage the output is P2") {
    const auto cloud = noisy_sphere(3);
    auto p = small_leaves();
    p.q = 10.0;
    const auto r = denoise(cloud, p, StageToggle{true, true, true, false});
    CHECK(r.report.counts.n_output == r.report.counts.p2);
  }

  TEST_CASE("worker count does not change the result") {
    const auto cloud = noisy_sphere(4);
    auto p = small_leaves();
    p.q = 3.0;
    p.lambda = 0.97;
    const auto one = denoise(cloud, p, {}, 1);
    for (unsigned w : {2u, 3u, 8u}) {
      const auto many = denoise(cloud, p, {}, w);
      CHECK(many.kept == one.kept);
      CHECK(many.report.metrics->f1 == one.report.metrics->f1);
      CHECK(many.report.metrics->cd == one.report.metrics->cd);
    }
  }

  TEST_CASE("repeated runs serialize identically") {
    const auto cloud = noisy_sphere(5);
    const auto a = denoise(cloud, small_leaves());
    const auto b = denoise(cloud, small_leaves());
    CHECK(io::serialize_cloud(a.cloud, io::CloudFormat::PlyBinaryLittleEndian) ==
          io::serialize_cloud(b.cloud, io::CloudFormat::PlyBinaryLittleEndian));
  }

  TEST_CASE("report metrics agree with a recount from ids") {
    const auto cloud = noisy_sphere(6);
    auto p = small_leaves();
    p.q = 2.0;
    p.lambda = 0.98;
    const auto r = denoise(cloud, p);
    std::size_t noise = 0, removed = 0, removed_noise = 0;
    std::vector<bool> kept(static_cast<std::size_t>(cloud.size()), false);
    for (auto i : r.kept) kept[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      noise += cloud.labels[i];
      removed += !kept[i];
      removed_noise += !kept[i] && cloud.labels[i];
    }
    const double P = double(removed_noise) / double(removed), R = double(removed_noise) / double(noise);
    CHECK(r.report.metrics->precision == P);
    CHECK(r.report.metrics->recall == R);
    CHECK(r.report.metrics->f1 == 2 * P * R / (P + R));
  }

  TEST_CASE("recomputed neighbor lists also run") {
    const auto cloud = noisy_sphere(7);
    auto p = small_leaves();
    p.q = 5.0;
    p.lambda = 0.97;
    const auto reuse = denoise(cloud, p);
    p.recompute_knn = true;
    const auto recompute = denoise(cloud, p);
    CHECK(recompute.report.counts.p2 == reuse.report.counts.p2);
    CHECK(recompute.report.counts.n_output == reuse.report.counts.n_output);
    p.median_scope = MedianScope::Global;
    CHECK(denoise(cloud, p).report.counts.n_output == reuse.report.counts.n_output);
  }

  TEST_CASE("tiny leaves survive") {
    Points3<double> pts(3, 3);
    pts << 0, 5, 10, 0, 5, 10, 0, 5, 10;
    PointCloudd cloud(pts);
    DenoiseParams p;
    p.max_leaf_points = 1;
    p.min_vox_count = 1;
    const auto r = denoise(cloud, p);
    CHECK(r.report.counts.n_output == 3);
  }

  TEST_CASE("invalid parameters and empty input") {
    DenoiseParams p;
    p.lambda = 0.0;
    CHECK_THROWS_AS(denoise(noisy_sphere(1, 10, 0), p), Error);
    p = {};
    p.q = 120.0;
    CHECK_THROWS_AS(denoise(noisy_sphere(1, 10, 0), p), Error);
    CHECK_THROWS_AS(denoise(PointCloudd{}, DenoiseParams{}), Error);
  }

  TEST_CASE("default ablation grid") {
    const auto grid = default_ablation_grid();
    REQUIRE(grid.size() == 10);
    CHECK(grid[0].name == "Baseline");
    CHECK(grid[0].baseline);
    const auto& ours = grid[7];
    CHECK(ours.name == "Ours");
    CHECK((ours.toggles.use_octree && ours.toggles.a1_voxel && ours.toggles.a2_density && ours.toggles.a3_gravity));
    CHECK(grid[3].name == "OnlyA3");
    CHECK((!grid[3].toggles.a1_voxel && !grid[3].toggles.a2_density && grid[3].toggles.a3_gravity));
    CHECK_FALSE(grid[9].toggles.use_octree);
  }

  TEST_CASE("grid file parsing") {
    const auto grid = parse_ablation_grid("# name octree a1 a2 a3\nbase baseline\nmine 1 0 1 1\n");
    REQUIRE(grid.size() == 2);
    CHECK(grid[0].baseline);
    CHECK((grid[1].toggles.use_octree && !grid[1].toggles.a1_voxel && grid[1].toggles.a3_gravity));
    CHECK_THROWS_AS(parse_ablation_grid("x 1 2 0 0\n"), Error);
    CHECK_THROWS_AS(parse_ablation_grid("# nothing\n"), Error);
  }

  TEST_CASE("ablation runs every row") {
    std::mt19937_64 rng(9);
    PointCloudd clean = oracle::labeled_sphere(rng, 3000, 0);
    clean.labels.clear();
    NoiseSpec noise;
    noise.random_ratio = 0.1;
    noise.seed = 4;
    ExperimentOptions opt;
    opt.params = small_leaves();
    opt.repeats = 1;
    const auto rows = run_ablation(clean, noise, default_ablation_grid(), opt);
    REQUIRE(rows.size() == 10);
    for (const auto& r : rows) {
      CHECK(r.metrics.has_value());
      CHECK(r.counts.n_input == 3300);
    }
    CHECK(rows[0].baseline);
    const auto csv = report::ablation_table_csv(rows);
    CHECK(csv.rfind("Configuration,Octree,A1,A2,A3,F1,PSNR_dB,CD,Runtime_s\n", 0) == 0);
  }

  TEST_CASE("a one-value sweep equals a direct run") {
    std::mt19937_64 rng(10);
    PointCloudd clean = oracle::labeled_sphere(rng, 3000, 0);
    clean.labels.clear();
    NoiseSpec noise;
    noise.random_ratio = 0.05;
    noise.seed = 2;
    ExperimentOptions opt;
    opt.params = small_leaves();
    opt.repeats = 1;
    const auto rows = run_parameter_sweep(clean, noise, SweepAxis::K, {8}, opt);
    REQUIRE(rows.size() == 1);
    auto p = opt.params;
    p.k = 8;
    const auto direct = denoise(add_noise(clean, noise), p);
    CHECK(rows[0].counts.n_output == direct.report.counts.n_output);
    CHECK(rows[0].metrics->f1 == direct.report.metrics->f1);
    CHECK(default_sweep_values(SweepAxis::K) == std::vector<double>{4, 8, 12, 16, 20, 24, 28, 32, 36, 40});
    CHECK(default_sweep_values(SweepAxis::Q).size() == 10);
    CHECK(parse_sweep_axis("min-vox-count") == SweepAxis::MinVoxCount);
    CHECK_THROWS_AS(parse_sweep_axis("beta"), Error);
  }

  TEST_CASE("config file") {
    DenoiseParams p;
    StageToggle t;
    apply_config("# tuned\nk = 16\nq=0.5\nmin-vox-count = 3\nlambda = 0.9 # trailing\noctree = false\nmedian = global\n",
                 p, t);
    CHECK(p.k == 16);
    CHECK(p.q == 0.5);
    CHECK(p.min_vox_count == 3);
    CHECK(p.lambda == 0.9);
    CHECK_FALSE(t.use_octree);
    CHECK(p.median_scope == MedianScope::Global);
    CHECK_THROWS_AS(apply_config("colour = red\n", p, t), Error);
    CHECK_THROWS_AS(apply_config("k = twelve\n", p, t), Error);
    CHECK_THROWS_AS(apply_config("lambda = 2\n", p, t), Error);
  }

  TEST_CASE("json report shape") {
    const auto cloud = noisy_sphere(11, 2000, 200);
    auto r = denoise(cloud, small_leaves()).report;
    NoiseSpec n;
    n.seed = 77;
    r.noise = n;
    r.input_sha256 = report::sha256_hex("abc");
    const auto j = report::to_json(r);
    for (const char* key : {"config", "counts", "metrics", "timings_s", "seed", "input_sha256"}) CHECK(j.contains(key));
    CHECK(j["seed"] == 77);
    CHECK(j["input_sha256"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(j["counts"]["n_input"] == 2200);
    EvalReport perfect;
    perfect.psnr_db = std::numeric_limits<double>::infinity();
    CHECK(report::to_json(perfect)["psnr_db"] == "inf");
  }
}
