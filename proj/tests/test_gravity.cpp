#include "doctest.h"

#include <random>

#include "gravden/gravity.hpp"
#include "gravden/prefilter.hpp"
#include "oracles.hpp"

using namespace gravden;

namespace {

IndexList iota_cols(Eigen::Index n) {
  IndexList c(static_cast<std::size_t>(n));
  std::iota(c.begin(), c.end(), 0);
  return c;
}

}  // namespace

TEST_SUITE("gravity") {
  TEST_CASE("weights and kernel") {
    CHECK(density_weight(3.0, 3.0, 3.0, 1.7, 0.0) == doctest::Approx(1.0));
    CHECK(density_weight(8.0, 2.0, 2.0, 0.0, 1e-12) == 1.0);
    CHECK(density_weight(8.0, 2.0, 2.0, 2.0, 0.0) == doctest::Approx(4.0));
    CHECK(distance_weight(0.0, 0.7, 1.3) == 1.0);
    CHECK(distance_weight(1.5, 1.5, 1.0) == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(distance_weight(3.0, 1.5, 1.0) == doctest::Approx(0.13534).epsilon(1e-4));
    CHECK(gravity_kernel(1.0, 0.0) == 1.0);
    CHECK(gravity_kernel(0.0, 1e-12) == doctest::Approx(1e12));
    CHECK(gravity_kernel(2.0, 0.0) == 0.25);
  }

  TEST_CASE("median") {
    CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
    CHECK(median(std::vector<double>{4, 1, 3, 2}) == 2.5);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 10);
    for (int t = 1; t < 60; ++t) {
      std::vector<double> v(static_cast<std::size_t>(t));
      for (auto& x : v) x = u(rng);
      const double m = median(v);
      const auto le = std::count_if(v.begin(), v.end(), [&](double x) { return x <= m; });
      const auto ge = std::count_if(v.begin(), v.end(), [&](double x) { return x >= m; });
      CHECK(2 * le >= t);
      CHECK(2 * ge >= t);
      CHECK(m == oracle::median(v));
    }
  }

  TEST_CASE("single neighbor score") {
    DensityField<double> f;
    f.members = {0, 1};
    f.ids = {0, 1};
    f.rho = {5.0, 5.0};
    f.r_k = {0.5, 0.5};
    f.offsets = {0, 1, 2};
    f.neighbors = {1, 0};
    f.distances = {0.5, 0.5};
    GravityWeights<double> w{5.0, 1.0, 1.0, 0.0};
    w.epsilon = 1e-300;
    CHECK(weighted_score(0, f, w) == doctest::Approx(std::exp(-0.5) / 0.25));
  }

  TEST_CASE("empty neighbor list scores zero") {
    DensityField<double> f;
    f.members = {0};
    f.ids = {0};
    f.rho = {1.0};
    f.r_k = {0.0};
    f.offsets = {0, 0};
    CHECK(weighted_score(0, f, GravityWeights<double>{1.0}) == 0.0);
  }

  TEST_CASE("weighted scores match the straight-line oracle") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 300 + 30 * trial;
      PointCloudd cloud(oracle::uniform_box(rng, n, 0.0, 3.0));
      std::shuffle(cloud.ids.begin(), cloud.ids.end(), rng);
      const auto cols = iota_cols(n);
      const std::size_t k = 12;
      const auto f = knn_density(cloud, std::span<const Eigen::Index>(cols), k, 1e-12);
      const double alpha = u(rng), sigma = 0.3 + u(rng);
      const GravityWeights<double> w{median(f.rho), alpha, sigma, 1e-12};
      const auto scores = weighted_scores(f, w);

      const auto ref_nb = oracle::knn_all(cloud, cols, k);
      std::vector<double> ref_rho(cols.size());
      for (std::size_t i = 0; i < cols.size(); ++i) ref_rho[i] = oracle::ball_density(k, ref_nb[i].back().d, 1e-12);
      const double ref_med = oracle::median(ref_rho);
      for (std::size_t i = 0; i < cols.size(); ++i) {
        const double expect = oracle::score(i, ref_nb, ref_rho, ref_nb[i].back().d, ref_med, alpha, sigma, 1e-12);
        CHECK(scores[i] == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("adding a neighbor never lowers a score") {
    std::mt19937_64 rng(3);
    PointCloudd cloud(oracle::uniform_box(rng, 200));
    const auto cols = iota_cols(200);
    const auto f = knn_density(cloud, std::span<const Eigen::Index>(cols), 10, 1e-12);
    const GravityWeights<double> w{median(f.rho)};
    auto shorter = f;
    // Drop each list's farthest neighbor while keeping rho and r_k fixed.
    shorter.neighbors.clear();
    shorter.distances.clear();
    for (std::size_t i = 0; i < f.size(); ++i) {
      shorter.offsets[i] = shorter.neighbors.size();
      const auto nb = f.neighbors_of(i);
      const auto d = f.distances_of(i);
      for (std::size_t j = 0; j + 1 < nb.size(); ++j) {
        shorter.neighbors.push_back(nb[j]);
        shorter.distances.push_back(d[j]);
      }
    }
    shorter.offsets[f.size()] = shorter.neighbors.size();
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(weighted_score(i, f, w) >= weighted_score(i, shorter, w));
  }

  TEST_CASE("retained count") {
    CHECK(retained_count(10, 1.0) == 10);
    CHECK(retained_count(10, 0.3) == 3);
    CHECK(retained_count(10, 0.31) == 4);
    CHECK(retained_count(1, 0.01) == 1);
    CHECK(retained_count(0, 0.5) == 0);
    CHECK_THROWS_AS(retained_count(10, 0.0), Error);
    CHECK_THROWS_AS(retained_count(10, 1.5), Error);
    for (std::size_t n = 1; n < 500; n += 7)
      for (double l : {0.05, 0.5, 0.95, 0.995}) {
        std::size_t m = 0;  // smallest m with m >= lambda * n, by counting up
        while (static_cast<double>(m) < l * static_cast<double>(n) - 1e-9) ++m;
        CHECK(retained_count(n, l) == m);
      }
  }

  TEST_CASE("select_top") {
    const std::vector<double> scores{5, 1, 9, 3, 7, 2, 8, 6, 4, 0};
    const std::vector<PointId> keys{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(select_top(std::span<const double>(scores), std::span<const PointId>(keys), 0.5) ==
          std::vector<std::size_t>{0, 2, 4, 6, 7});
    CHECK(select_top(std::span<const double>(scores), std::span<const PointId>(keys), 1.0).size() == 10);

    const std::vector<double> equal(10, 1.0);
    const std::vector<PointId> shuffled{7, 3, 9, 0, 5, 1, 8, 2, 6, 4};
    const auto pick = select_top(std::span<const double>(equal), std::span<const PointId>(shuffled), 0.3);
    REQUIRE(pick.size() == 3);
    CHECK(shuffled[pick[0]] == 0);
    CHECK(shuffled[pick[1]] == 1);
    CHECK(shuffled[pick[2]] == 2);
  }

  TEST_CASE("select_top agrees with a full sort") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> u(0, 20);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 1 + static_cast<std::size_t>(t);
      std::vector<double> s(n);
      std::vector<PointId> keys(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = u(rng);
        keys[i] = i;
      }
      std::shuffle(keys.begin(), keys.end(), rng);
      const double lambda = 0.05 + 0.95 * (t % 20) / 19.0;
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::tie(s[b], keys[a]) < std::tie(s[a], keys[b]); });
      order.resize(retained_count(n, lambda));
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
      CHECK(select_top(std::span<const double>(s), std::span<const PointId>(keys), lambda) == order);
    }
  }

  TEST_CASE("selection is similarity invariant") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 10; ++trial) {
      PointCloudd cloud(oracle::uniform_box(rng, 400));
      const auto cols = iota_cols(400);
      auto selected = [&](const PointCloudd& c) {
        const auto f = knn_density(c, std::span<const Eigen::Index>(cols), 12, 1e-12);
        const auto scores = weighted_scores(f, GravityWeights<double>{median(f.rho)});
        return select_top(std::span<const double>(scores), std::span<const PointId>(f.ids), 0.8);
      };
      const auto base = selected(cloud);
      for (double s : {0.1, 10.0}) {
        PointCloudd moved = cloud;
        moved.points = (moved.points * s).colwise() + Eigen::Vector3d(u(rng), u(rng), u(rng));
        CHECK(selected(moved) == base);
      }
    }
  }
}
