#include "atk/mesh_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "atk/error.hpp"

namespace atk {

namespace {

static_assert(std::endian::native == std::endian::little, "binary mesh I/O assumes little-endian");

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename T>
T read_le(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

// Mesh construction errors (degenerate triangles, bad indices) surface as
// format errors at the position of the offending record.
TriMesh build_mesh(std::vector<Vec3> verts, std::vector<Triangle> tris,
                   const std::vector<std::size_t>& tri_positions, FormatError::Unit unit,
                   const std::string& source, std::vector<Color> colors = {}) {
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const auto& t = tris[i];
    const double area = 0.5 * (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]).norm();
    if (area <= TriMesh::kMinTriangleArea) {
      throw FormatError(source, unit, tri_positions[i], "degenerate triangle");
    }
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(colors));
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return sha256_hex(std::string(bytes.begin(), bytes.end()));
}

std::uint8_t to_uchar(double channel) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(channel, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------- OBJ

TriMesh parse_obj(const std::string& text, const std::string& source) {
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::vector<std::size_t> tri_lines;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw FormatError(source, FormatError::Unit::Line, lineno, "bad vertex");
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        int idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoi(head, &used);
          if (used != head.size()) throw std::invalid_argument(head);
        } catch (const std::exception&) {
          throw FormatError(source, FormatError::Unit::Line, lineno, "bad face index '" + tok + "'");
        }
        const int n = static_cast<int>(verts.size());
        const int resolved = idx > 0 ? idx - 1 : n + idx;
        if (idx == 0 || resolved < 0 || resolved >= n) {
          throw FormatError(source, FormatError::Unit::Line, lineno, "face index out of range");
        }
        poly.push_back(resolved);
      }
      if (poly.size() < 3) throw FormatError(source, FormatError::Unit::Line, lineno, "face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        tris.push_back({poly[0], poly[k], poly[k + 1]});
        tri_lines.push_back(lineno);
      }
    }
  }
  if (tris.empty()) throw FormatError(source, FormatError::Unit::Line, lineno, "no faces");
  return build_mesh(std::move(verts), std::move(tris), tri_lines, FormatError::Unit::Line, source);
}

TriMesh read_obj(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_obj(std::string(bytes.begin(), bytes.end()), path.string());
}

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::string out;
  for (const auto& v : mesh.vertices()) out += fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& t : mesh.triangles()) out += fmt::format("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------- STL

TriMesh parse_stl(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < 84) throw FormatError(source, FormatError::Unit::Byte, bytes.size(), "truncated STL header");
  const auto count = read_le<std::uint32_t>(bytes, 80);
  const std::size_t expected = 84 + static_cast<std::size_t>(count) * 50;
  if (bytes.size() < expected) {
    const std::size_t first_incomplete = 84 + (bytes.size() - 84) / 50 * 50;
    throw FormatError(source, FormatError::Unit::Byte, first_incomplete,
                      fmt::format("truncated STL body: {} triangles need {} bytes", count, expected));
  }
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::vector<std::size_t> offsets;
  std::map<std::array<float, 3>, int> weld;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t base = 84 + static_cast<std::size_t>(i) * 50;
    Triangle tri;
    for (int k = 0; k < 3; ++k) {
      std::array<float, 3> p;
      for (int c = 0; c < 3; ++c) p[c] = read_le<float>(bytes, base + 12 + 12 * k + 4 * c);
      if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
        throw FormatError(source, FormatError::Unit::Byte, base + 12 + 12 * k, "non-finite vertex");
      }
      auto [it, inserted] = weld.try_emplace(p, static_cast<int>(verts.size()));
      if (inserted) verts.emplace_back(p[0], p[1], p[2]);
      tri[k] = it->second;
    }
    tris.push_back(tri);
    offsets.push_back(base);
  }
  if (tris.empty()) throw FormatError(source, FormatError::Unit::Byte, 80, "no triangles");
  return build_mesh(std::move(verts), std::move(tris), offsets, FormatError::Unit::Byte, source);
}

TriMesh read_stl(const std::filesystem::path& path) { return parse_stl(read_file_bytes(path), path.string()); }

void write_stl(const TriMesh& mesh, const std::filesystem::path& path) {
  std::string out(80, '\0');
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(mesh.triangles().size()));
  for (std::size_t i = 0; i < mesh.triangles().size(); ++i) {
    const Vec3 n = mesh.triangle_normal(i);
    for (int c = 0; c < 3; ++c) append_le<float>(out, static_cast<float>(n[c]));
    for (const auto& v : mesh.triangle(i))
      for (int c = 0; c < 3; ++c) append_le<float>(out, static_cast<float>(v[c]));
    append_le<std::uint16_t>(out, 0);
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------- PLY

std::vector<std::uint8_t> encode_ply(const TriMesh& mesh) {
  std::string out = fmt::format(
      "ply\nformat binary_little_endian 1.0\nelement vertex {}\n"
      "property float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "element face {}\nproperty list uchar int vertex_indices\nend_header\n",
      mesh.vertices().size(), mesh.triangles().size());
  for (std::size_t i = 0; i < mesh.vertices().size(); ++i) {
    const auto& v = mesh.vertices()[i];
    for (int c = 0; c < 3; ++c) append_le<float>(out, static_cast<float>(v[c]));
    const Color col = mesh.has_colors() ? mesh.colors()[i] : Color(1, 1, 1);
    for (int c = 0; c < 3; ++c) append_le<std::uint8_t>(out, to_uchar(col[c]));
  }
  for (const auto& t : mesh.triangles()) {
    append_le<std::uint8_t>(out, 3);
    for (int idx : t) append_le<std::int32_t>(out, idx);
  }
  return {out.begin(), out.end()};
}

void write_ply(const TriMesh& mesh, const std::filesystem::path& path) {
  const auto bytes = encode_ply(mesh);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

namespace {

struct PlyProperty {
  std::string name;
  std::string type;       // scalar type, or count type for lists
  std::string item_type;  // list element type; empty for scalars
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double ply_decode(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& t) {
  if (t == "char" || t == "int8") return read_le<std::int8_t>(b, off);
  if (t == "uchar" || t == "uint8") return read_le<std::uint8_t>(b, off);
  if (t == "short" || t == "int16") return read_le<std::int16_t>(b, off);
  if (t == "ushort" || t == "uint16") return read_le<std::uint16_t>(b, off);
  if (t == "int" || t == "int32") return read_le<std::int32_t>(b, off);
  if (t == "uint" || t == "uint32") return read_le<std::uint32_t>(b, off);
  if (t == "float" || t == "float32") return read_le<float>(b, off);
  return read_le<double>(b, off);
}

}  // namespace

TriMesh parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  // Header is line-oriented text up to and including "end_header\n".
  std::size_t pos = 0, lineno = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) throw FormatError(source, FormatError::Unit::Line, lineno, "unterminated header");
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    std::string l(bytes.begin() + pos, bytes.begin() + end);
    if (!l.empty() && l.back() == '\r') l.pop_back();
    pos = end + 1;
    ++lineno;
    return l;
  };
  if (next_line() != "ply") throw FormatError(source, FormatError::Unit::Line, 1, "missing ply magic");
  std::string format;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string l = next_line();
    std::istringstream ls(l);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
    if (kw == "format") {
      ls >> format;
    } else if (kw == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count)) throw FormatError(source, FormatError::Unit::Line, lineno, "bad element");
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw FormatError(source, FormatError::Unit::Line, lineno, "property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        ls >> p.type >> p.item_type >> p.name;
        if (!ply_type_size(p.type) || !ply_type_size(p.item_type))
          throw FormatError(source, FormatError::Unit::Line, lineno, "bad list type");
      } else {
        p.type = t;
        ls >> p.name;
        if (!ply_type_size(p.type)) throw FormatError(source, FormatError::Unit::Line, lineno, "bad property type");
      }
      elements.back().props.push_back(p);
    } else {
      throw FormatError(source, FormatError::Unit::Line, lineno, "unknown header keyword '" + kw + "'");
    }
  }
  const bool binary = format == "binary_little_endian";
  if (!binary && format != "ascii") {
    throw FormatError(source, FormatError::Unit::Line, lineno, "unsupported format '" + format + "'");
  }

  std::vector<Vec3> verts;
  std::vector<Color> colors;
  std::vector<Triangle> tris;
  std::vector<std::size_t> tri_pos;
  bool has_color = false;

  // ASCII body tokens.
  std::istringstream ascii;
  std::size_t ascii_line = lineno;
  if (!binary) ascii.str(std::string(bytes.begin() + std::min(pos, bytes.size()), bytes.end()));
  auto ascii_value = [&]() -> double {
    double v;
    if (!(ascii >> v)) throw FormatError(source, FormatError::Unit::Line, ascii_line, "truncated ascii body");
    return v;
  };
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError(source, FormatError::Unit::Byte, pos, "truncated binary body");
  };
  auto scalar = [&](const std::string& type) -> double {
    if (!binary) return ascii_value();
    const std::size_t sz = ply_type_size(type);
    need(sz);
    const double v = ply_decode(bytes, pos, type);
    pos += sz;
    return v;
  };

  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!binary) ++ascii_line;
      const std::size_t record = binary ? pos : ascii_line;
      Vec3 p = Vec3::Zero();
      Color c = Color::Ones();
      for (const auto& prop : e.props) {
        if (!prop.item_type.empty()) {
          const auto n = static_cast<std::size_t>(scalar(prop.type));
          std::vector<int> idx;
          for (std::size_t k = 0; k < n; ++k) idx.push_back(static_cast<int>(scalar(prop.item_type)));
          if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            if (idx.size() < 3) {
              throw FormatError(source, binary ? FormatError::Unit::Byte : FormatError::Unit::Line, record,
                                "face with fewer than 3 vertices");
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
              tris.push_back({idx[0], idx[k], idx[k + 1]});
              tri_pos.push_back(record);
            }
          }
          continue;
        }
        const double v = scalar(prop.type);
        if (!is_vertex) continue;
        if (prop.name == "x") p.x() = v;
        else if (prop.name == "y") p.y() = v;
        else if (prop.name == "z") p.z() = v;
        else if (prop.name == "red" || prop.name == "green" || prop.name == "blue") {
          has_color = true;
          const double scaled = prop.type == "float" || prop.type == "double" ? v : v / 255.0;
          c[prop.name == "red" ? 0 : prop.name == "green" ? 1 : 2] = scaled;
        }
      }
      if (is_vertex) {
        verts.push_back(p);
        colors.push_back(c);
      }
    }
  }
  const auto unit = binary ? FormatError::Unit::Byte : FormatError::Unit::Line;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    for (int idx : tris[i]) {
      if (idx < 0 || idx >= static_cast<int>(verts.size()))
        throw FormatError(source, unit, tri_pos[i], "face index out of range");
    }
  }
  if (!has_color) colors.clear();
  return build_mesh(std::move(verts), std::move(tris), tri_pos, unit, source, std::move(colors));
}

TriMesh read_ply(const std::filesystem::path& path) { return parse_ply(read_file_bytes(path), path.string()); }

TriMesh read_mesh(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".obj") return read_obj(path);
  if (ext == ".stl") return read_stl(path);
  if (ext == ".ply") return read_ply(path);
  throw InvalidInput("unsupported mesh extension '" + ext + "' for " + path.string());
}

}  // namespace atk
