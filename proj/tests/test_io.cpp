#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <random>

#include "gravden/io.hpp"
#include "oracles.hpp"

using namespace gravden;
using io::CloudFormat;

namespace {

std::string error_of(std::string_view text, CloudFormat format) {
  try {
    io::parse_cloud(text, format);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

PointCloudd sample_cloud(bool labeled) {
  std::mt19937_64 rng(10);
  auto p = oracle::uniform_box(rng, 37, -1e3, 1e3);
  p(0, 0) = 0.1;  // not exactly representable in binary
  p(1, 0) = -0.0;
  p(2, 0) = 1e-300;
  PointCloudd c(p);
  if (labeled) {
    c.labels.resize(37);
    for (std::size_t i = 0; i < 37; ++i) c.labels[i] = i % 3 == 0;
  }
  return c;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("round trips are exact for doubles") {
    for (bool labeled : {false, true}) {
      const auto c = sample_cloud(labeled);
      for (auto fmt : {CloudFormat::PlyAscii, CloudFormat::PlyBinaryLittleEndian, CloudFormat::Xyz}) {
        const auto text = io::serialize_cloud(c, fmt);
        io::ReadInfo info;
        const auto back = io::parse_cloud(text, fmt, &info);
        CHECK(back.points == c.points);
        CHECK(back.labels == c.labels);
        CHECK(io::serialize_cloud(back, fmt) == text);
      }
    }
  }

  TEST_CASE("float32 output rounds coordinates") {
    const auto c = sample_cloud(true);
    const auto text = io::serialize_cloud(c, CloudFormat::PlyBinaryLittleEndian, io::CoordPrecision::Float32);
    CHECK(contains(text, "property float x"));
    io::ReadInfo info;
    const auto back = io::parse_cloud(text, CloudFormat::PlyBinaryLittleEndian, &info);
    CHECK(info.precision == io::CoordPrecision::Float32);
    CHECK(back.points == c.points.cast<float>().cast<double>());
  }

  TEST_CASE("ascii PLY with extra properties and elements") {
    const std::string text =
        "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\n"
        "property float z\nproperty uchar red\nproperty list uchar int idx\nproperty uchar is_noise\n"
        "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
        "1 2 3 255 2 7 8 0\n4 5 6 0 0 1\n7 8 9 1 1 5 0\n3 0 1 2\n";
    io::ReadInfo info;
    const auto c = io::parse_cloud(text, CloudFormat::PlyAscii, &info);
    REQUIRE(c.size() == 3);
    CHECK(c.points.col(2) == Eigen::Vector3d(7, 8, 9));
    CHECK(c.labels == std::vector<std::uint8_t>{0, 1, 0});
    CHECK(info.warnings.size() == 1);
  }

  TEST_CASE("binary PLY with a leading non-vertex element") {
    std::string text =
        "ply\nformat binary_little_endian 1.0\nelement camera 1\nproperty double fx\nelement vertex 2\n"
        "property double x\nproperty double y\nproperty double z\nproperty short intensity\nend_header\n";
    auto put = [&](auto v) {
      char buf[sizeof(v)];
      std::memcpy(buf, &v, sizeof(v));
      text.append(buf, sizeof(v));
    };
    put(500.0);
    put(1.5), put(-2.0), put(3.25), put(std::int16_t{7});
    put(0.0), put(0.0), put(1.0), put(std::int16_t{-1});
    const auto c = io::parse_cloud(text, CloudFormat::PlyBinaryLittleEndian);
    REQUIRE(c.size() == 2);
    CHECK(c.points.col(0) == Eigen::Vector3d(1.5, -2.0, 3.25));
    CHECK_FALSE(c.has_labels());
  }

  TEST_CASE("xyz with comments and labels") {
    const auto c = io::parse_cloud("# header\n1 2 3 0\n\n4 5 6 1\n", CloudFormat::Xyz);
    REQUIRE(c.size() == 2);
    CHECK(c.labels == std::vector<std::uint8_t>{0, 1});
  }

  TEST_CASE("diagnostics") {
    CHECK(contains(error_of("plx\n", CloudFormat::PlyAscii), "magic"));
    CHECK(contains(error_of("ply\nformat binary_big_endian 1.0\nend_header\n", CloudFormat::PlyAscii), "big-endian"));
    const std::string short_body =
        "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
        "end_header\n1 2 3\n4 5 6\n";
    CHECK(contains(error_of(short_body, CloudFormat::PlyAscii), "header declares 3 vertices, body has 2"));
    const std::string bad_number =
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
        "end_header\n1 two 3\n";
    CHECK(contains(error_of(bad_number, CloudFormat::PlyAscii), "line 8"));
    const std::string non_finite =
        "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
        "end_header\n1 2 3\nnan 0 0\n";
    CHECK(contains(error_of(non_finite, CloudFormat::PlyAscii), "1"));
    const std::string int_coords =
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty int y\nproperty int z\nend_header\n1 2 3\n";
    CHECK(contains(error_of(int_coords, CloudFormat::PlyAscii), "float or double"));
    const std::string bad_label =
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar is_noise\nend_header\n1 2 3 2\n";
    CHECK(contains(error_of(bad_label, CloudFormat::PlyAscii), "is_noise must be 0 or 1"));
    const std::string trunc =
        "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
        "property float z\nend_header\n0123456789ab0123";
    CHECK(contains(error_of(trunc, CloudFormat::PlyBinaryLittleEndian), "header declares 2 vertices"));
    CHECK(contains(error_of("1 2 3\n1 2 3 1\n", CloudFormat::Xyz), "line 2"));
  }

  TEST_CASE("format names and inference") {
    CHECK(io::parse_format("ply-ascii") == CloudFormat::PlyAscii);
    CHECK(io::parse_format("ply-binary-le") == CloudFormat::PlyBinaryLittleEndian);
    CHECK(io::parse_format("xyz") == CloudFormat::Xyz);
    CHECK_THROWS_AS(io::parse_format("las"), Error);
    CHECK(io::infer_format("a/b.xyz") == CloudFormat::Xyz);
  }

  TEST_CASE("file round trip") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "gravden_io_test.ply";
    const auto c = sample_cloud(true);
    io::write_cloud(c, path, CloudFormat::PlyBinaryLittleEndian);
    CHECK(io::infer_format(path) == CloudFormat::PlyBinaryLittleEndian);
    const auto back = io::read_cloud(path);
    CHECK(back.points == c.points);
    CHECK(back.labels == c.labels);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(io::read_cloud(dir / "gravden_missing.ply"), Error);
  }
}
