#ifndef GRAVDEN_IO_HPP
#define GRAVDEN_IO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gravden/core.hpp"

namespace gravden::io {

enum class CloudFormat { PlyAscii, PlyBinaryLittleEndian, Xyz };
enum class CoordPrecision { Float32, Float64 };

struct ReadInfo {
  CloudFormat format = CloudFormat::PlyAscii;
  CoordPrecision precision = CoordPrecision::Float64;
  std::vector<std::string> warnings;
};

std::string to_string(CloudFormat format);
CloudFormat parse_format(std::string_view name);  // "ply-ascii", "ply-binary-le", "xyz"

/// Format from the file extension (.ply sniffs the header's format line).
CloudFormat infer_format(const std::filesystem::path& path);

/// Parses PLY 1.0 (ascii or binary_little_endian) or XYZ text. Points keep file
/// order, ids are 0..N-1 and labels are filled iff an is_noise channel exists.
/// Malformed headers, short bodies and non-finite coordinates raise ParseError
/// with line or byte-offset diagnostics.
PointCloudd parse_cloud(std::string_view bytes, CloudFormat format, ReadInfo* info = nullptr);

PointCloudd read_cloud(const std::filesystem::path& path, std::optional<CloudFormat> format = std::nullopt,
                       ReadInfo* info = nullptr);

/// Deterministic serialization; the is_noise channel is written iff the cloud
/// carries labels. Text formats use shortest round-trip decimal forms.
std::string serialize_cloud(const PointCloudd& cloud, CloudFormat format,
                            CoordPrecision precision = CoordPrecision::Float64);

void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path, CloudFormat format,
                 CoordPrecision precision = CoordPrecision::Float64);

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace gravden::io

#endif  // GRAVDEN_IO_HPP
