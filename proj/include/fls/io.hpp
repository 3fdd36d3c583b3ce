#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fls/core.hpp"

namespace fls::io {

enum class CloudFormat { kAuto, kXyz, kPlyAscii, kPlyBinary };

/// Parses "auto", "xyz", "ply" (binary), "ply-ascii", "ply-binary".
CloudFormat parse_format(std::string_view name);

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  /// Zero-area faces removed while loading.
  std::size_t dropped_degenerate = 0;

  double face_area(std::size_t f) const;
};

/// XYZ: one point per line, 2 or 3 whitespace-separated numbers; blank lines
/// and '#' comments are skipped. PLY: ascii or binary_little_endian, vertex
/// x/y[/z] of any scalar type; other properties and elements are skipped.
/// Big-endian PLY is rejected.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format = CloudFormat::kAuto);

PointCloud parse_xyz(std::string_view text, const std::string& source = "<xyz>");
PointCloud parse_ply(std::string_view bytes, const std::string& source = "<ply>");

/// kAuto picks by extension (.ply -> binary PLY, otherwise XYZ). Text output
/// uses 17 significant digits; binary PLY stores doubles.
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format = CloudFormat::kAuto);
std::string format_cloud(const PointCloud& cloud, CloudFormat format);

/// OBJ (v/f records; polygons fan-triangulated) or PLY with a face element.
TriangleMesh load_mesh(const std::filesystem::path& path);
TriangleMesh parse_obj(std::string_view text, const std::string& source = "<obj>");
TriangleMesh parse_ply_mesh(std::string_view bytes, const std::string& source = "<ply>");

/// Builds a mesh and drops zero-area faces. Throws kInvalidArgument on
/// out-of-range indices.
TriangleMesh make_mesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<std::uint32_t, 3>> faces);

/// Area-weighted face choice plus uniform barycentric sampling. Deterministic
/// for a given seed.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed);

/// Same, also reporting which face produced each sample.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed,
                       std::vector<std::uint32_t>* face_of_sample);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fls::io
