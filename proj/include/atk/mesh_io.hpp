#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atk/mesh.hpp"

namespace atk {

/// Wavefront OBJ: `v` and `f` records (polygons fan-triangulated, v/vt/vn
/// and negative indices accepted). Other records are ignored.
TriMesh read_obj(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text, const std::string& source = "<obj>");
void write_obj(const TriMesh& mesh, const std::filesystem::path& path);

/// Binary STL. Exactly coincident vertices are welded so that closed
/// solids come back watertight.
TriMesh read_stl(const std::filesystem::path& path);
TriMesh parse_stl(const std::vector<std::uint8_t>& bytes, const std::string& source = "<stl>");
void write_stl(const TriMesh& mesh, const std::filesystem::path& path);

/// PLY: the writer emits binary little-endian with float32 xyz and uchar
/// RGB; the reader also accepts ASCII files and double-precision vertices.
void write_ply(const TriMesh& mesh, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ply(const TriMesh& mesh);
TriMesh read_ply(const std::filesystem::path& path);
TriMesh parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& source = "<ply>");

/// Dispatches on extension (.obj, .stl, .ply; case-insensitive).
TriMesh read_mesh(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Lower-case hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& data);

/// Quantizes a [0,1] channel to uchar with round-to-nearest.
std::uint8_t to_uchar(double channel);

}  // namespace atk
