#include "doctest.h"

#include <random>

#include "gravden/core.hpp"
#include "gravden/kdtree.hpp"
#include "gravden/octree.hpp"
#include "oracles.hpp"

using namespace gravden;

TEST_SUITE("core") {
  TEST_CASE("cloud ids and labels") {
    Points3<double> p(3, 4);
    p << 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 1;
    PointCloudd c(p, {0, 1, 0, 1});
    CHECK(c.size() == 4);
    CHECK(c.noise_count() == 2);
    CHECK(c.ids == std::vector<PointId>{0, 1, 2, 3});
    const IndexList cols{3, 1};
    auto s = subset(c, std::span<const Eigen::Index>(cols));
    CHECK(s.ids == std::vector<PointId>{3, 1});
    CHECK(s.labels == std::vector<std::uint8_t>{1, 1});
    CHECK(s.point(0).z() == 1.0);
  }

  TEST_CASE("validate rejects mismatched channels and non-finite points") {
    PointCloudd c(Points3<double>::Zero(3, 3));
    c.labels = {0, 1};
    CHECK_THROWS_AS(c.validate(), Error);
    c.labels.clear();
    c.points(1, 2) = std::nan("");
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("bounding box, centroid") {
    Points3<double> p(3, 3);
    p << 0, 2, 1, -1, 1, 0, 3, 3, 6;
    const auto box = bounding_box(p);
    CHECK(box.min == Eigen::Vector3d(0, -1, 3));
    CHECK(box.max == Eigen::Vector3d(2, 1, 6));
    CHECK(box.volume() == doctest::Approx(12.0));
    CHECK(box.diagonal() == doctest::Approx(std::sqrt(17.0)));
    CHECK(centroid(p).isApprox(Eigen::Vector3d(1, 0, 4)));
    CHECK_THROWS_AS(bounding_box(Points3<double>(3, 0)), Error);
  }
}

TEST_SUITE("kdtree") {
  TEST_CASE("knn matches full sort including id tie-breaks") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      // A coarse lattice forces many exact distance ties.
      std::uniform_int_distribution<int> u(0, 4);
      const Eigen::Index n = 150;
      Points3<double> p(3, n);
      for (Eigen::Index i = 0; i < n; ++i) p.col(i) = Eigen::Vector3d(u(rng), u(rng), u(rng));
      PointCloudd cloud(p);
      std::shuffle(cloud.ids.begin(), cloud.ids.end(), rng);
      IndexList cols(static_cast<std::size_t>(n));
      std::iota(cols.begin(), cols.end(), 0);
      const auto expect = oracle::knn_all(cloud, cols, 9);
      const KdTree<double> tree(cloud.points, cloud.ids);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto got = tree.knn(cloud.points.col(i), 9, i);
        REQUIRE(got.size() == 9);
        for (std::size_t j = 0; j < got.size(); ++j) {
          CHECK(static_cast<std::size_t>(got[j].index) == expect[static_cast<std::size_t>(i)][j].pos);
        }
      }
    }
  }

  TEST_CASE("count_within and nearest") {
    std::mt19937_64 rng(3);
    const auto p = oracle::uniform_box(rng, 400);
    const KdTree<double> tree(p);
    for (int t = 0; t < 50; ++t) {
      const Eigen::Vector3d q = oracle::uniform_box(rng, 1).col(0);
      std::size_t brute = 0;
      double best = INFINITY;
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double d2 = (p.col(j) - q).squaredNorm();
        brute += d2 <= 0.04;
        best = std::min(best, d2);
      }
      CHECK(tree.count_within(q, 0.04) == brute);
      CHECK(tree.nearest(q).dist2 == best);
    }
  }

  TEST_CASE("k larger than the tree") {
    Points3<double> p(3, 3);
    p << 0, 1, 2, 0, 0, 0, 0, 0, 0;
    const KdTree<double> tree(p);
    CHECK(tree.knn(p.col(0), 10, 0).size() == 2);
    CHECK(tree.knn(p.col(0), 10).size() == 3);
  }
}

TEST_SUITE("octree") {
  TEST_CASE("leaves partition the cloud and respect the capacity") {
    std::mt19937_64 rng(11);
    PointCloudd cloud(oracle::uniform_box(rng, 5000, -3.0, 7.0));
    const auto parts = partition(cloud, OctreeLimits{200, 1.0 / 64.0});
    std::vector<int> seen(5000, 0);
    for (const auto& leaf : parts.leaves) {
      CHECK(leaf.size() <= 200);
      CHECK(leaf.size() > 0);
      for (auto i : leaf.indices) {
        ++seen[static_cast<std::size_t>(i)];
        CHECK((cloud.points.col(i).array() >= leaf.box.min.array()).all());
        CHECK((cloud.points.col(i).array() <= leaf.box.max.array()).all());
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }

  TEST_CASE("points on a split plane go to the upper child") {
    Points3<double> p(3, 3);
    p << 0, 1, 2, 0, 0, 0, 0, 0, 0;
    PointCloudd cloud(p);
    const auto parts = partition(cloud, OctreeLimits{1, 1e-3});
    REQUIRE(parts.leaves.size() == 3);
    // Root edge 2, mid 1: x = 1 lands in the upper half.
    CHECK(parts.leaves[0].indices == IndexList{0});
    CHECK(parts.leaves[1].indices == IndexList{1});
    CHECK(parts.leaves[2].indices == IndexList{2});
  }

  TEST_CASE("minimum edge stops splitting of coincident points") {
    PointCloudd cloud(Points3<double>::Ones(3, 50));
    cloud.points(0, 49) = 2.0;
    const auto parts = partition(cloud, OctreeLimits{4, 0.1});
    std::size_t total = 0;
    for (const auto& l : parts.leaves) total += l.indices.size();
    CHECK(total == 50);
  }

  TEST_CASE("a cloud below capacity is one leaf") {
    std::mt19937_64 rng(1);
    PointCloudd cloud(oracle::uniform_box(rng, 100));
    const auto parts = partition(cloud);
    REQUIRE(parts.leaves.size() == 1);
    CHECK(parts.leaves[0].size() == 100);
  }

  TEST_CASE("invalid limits") {
    PointCloudd cloud(Points3<double>::Zero(3, 2));
    CHECK_THROWS_AS(partition(cloud, OctreeLimits{0, 0.1}), Error);
    CHECK_THROWS_AS(partition(cloud, OctreeLimits{10, 0.0}), Error);
    CHECK_THROWS_AS(partition(PointCloudd{}), Error);
  }
}
