#include "fls/io.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "fls/rng.hpp"

namespace fls::io {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<double> to_double(std::string_view tok) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view tok) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

/// Splits text into lines, remembering the 1-based line number of each.
class LineReader {
 public:
  explicit LineReader(std::string_view text, std::size_t pos = 0, std::size_t line = 0)
      : text_(text), pos_(pos), line_(line) {}

  bool next(std::string_view& out) {
    if (pos_ >= text_.size()) return false;
    std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    out = text_.substr(pos_, end - pos_);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos_ = end + 1;
    ++line_;
    return true;
  }

  std::size_t line() const { return line_; }
  std::size_t pos() const { return std::min(pos_, text_.size()); }

 private:
  std::string_view text_;
  std::size_t pos_;
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

std::optional<PlyType> ply_type(std::string_view name) {
  const std::string n = lower(name);
  if (n == "char" || n == "int8") return PlyType::kI8;
  if (n == "uchar" || n == "uint8") return PlyType::kU8;
  if (n == "short" || n == "int16") return PlyType::kI16;
  if (n == "ushort" || n == "uint16") return PlyType::kU16;
  if (n == "int" || n == "int32") return PlyType::kI32;
  if (n == "uint" || n == "uint32") return PlyType::kU32;
  if (n == "float" || n == "float32") return PlyType::kF32;
  if (n == "double" || n == "float64") return PlyType::kF64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8: return 1;
    case PlyType::kI16:
    case PlyType::kU16: return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32: return 4;
    case PlyType::kF64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kF64;
  bool is_list = false;
  PlyType count_type = PlyType::kU8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  std::size_t data_offset = 0;
  std::size_t header_lines = 0;
};

PlyHeader parse_ply_header(std::string_view bytes, const std::string& src) {
  LineReader reader(bytes);
  std::string_view line;
  if (!reader.next(line) || line != "ply") throw ParseError(src, 1, 0, "missing 'ply' magic line");
  PlyHeader h;
  bool have_format = false;
  bool ended = false;
  while (reader.next(line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::size_t ln = reader.line();
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw ParseError(src, ln, 0, "malformed format line");
      if (tok[1] == "ascii") {
        h.binary = false;
      } else if (tok[1] == "binary_little_endian") {
        h.binary = true;
      } else if (tok[1] == "binary_big_endian") {
        throw ParseError(src, ln, 0, "binary_big_endian PLY is not supported");
      } else {
        throw ParseError(src, ln, 0, "unknown PLY format '" + std::string(tok[1]) + "'");
      }
      if (tok[2] != "1.0") throw ParseError(src, ln, 0, "unsupported PLY version '" + std::string(tok[2]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(src, ln, 0, "malformed element line");
      const auto count = to_int(tok[2]);
      if (!count || *count < 0) throw ParseError(src, ln, 0, "element count must be a nonnegative integer");
      h.elements.push_back({std::string(tok[1]), static_cast<std::size_t>(*count), {}});
    } else if (tok[0] == "property") {
      if (h.elements.empty()) throw ParseError(src, ln, 0, "property before any element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = ply_type(tok[2]);
        const auto it = ply_type(tok[3]);
        if (!ct || !it) throw ParseError(src, ln, 0, "unknown list property type");
        if (*ct == PlyType::kF32 || *ct == PlyType::kF64) throw ParseError(src, ln, 0, "list count type must be integral");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        const auto t = ply_type(tok[1]);
        if (!t) throw ParseError(src, ln, 0, "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        throw ParseError(src, ln, 0, "malformed property line");
      }
      h.elements.back().props.push_back(std::move(p));
    } else {
      throw ParseError(src, ln, 0, "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ended) throw ParseError(src, reader.line(), 0, "header has no end_header");
  if (!have_format) throw ParseError(src, reader.line(), 0, "header has no format line");
  h.data_offset = reader.pos();
  h.header_lines = reader.line();
  return h;
}

class BinaryCursor {
 public:
  BinaryCursor(std::string_view bytes, std::size_t pos, const std::string& src) : bytes_(bytes), pos_(pos), src_(src) {}

  double read(PlyType t) {
    const std::size_t n = type_size(t);
    if (pos_ + n > bytes_.size()) {
      throw ParseError(src_, 0, pos_, "truncated binary payload: need " + std::to_string(n) + " bytes, " +
                                          std::to_string(bytes_.size() - pos_) + " left");
    }
    unsigned char buf[8];
    std::memcpy(buf, bytes_.data() + pos_, n);
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + n);
    pos_ += n;
    switch (t) {
      case PlyType::kI8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
      case PlyType::kU8: return static_cast<double>(buf[0]);
      case PlyType::kI16: return static_cast<double>(load<std::int16_t>(buf));
      case PlyType::kU16: return static_cast<double>(load<std::uint16_t>(buf));
      case PlyType::kI32: return static_cast<double>(load<std::int32_t>(buf));
      case PlyType::kU32: return static_cast<double>(load<std::uint32_t>(buf));
      case PlyType::kF32: return static_cast<double>(load<float>(buf));
      case PlyType::kF64: return load<double>(buf);
    }
    return 0.0;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  template <typename T>
  static T load(const unsigned char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_;
  const std::string& src_;
};

struct PlyContents {
  Matrix vertices;
  std::vector<std::vector<long long>> faces;
};

PlyContents parse_ply_contents(std::string_view bytes, const std::string& src, bool want_faces) {
  const PlyHeader h = parse_ply_header(bytes, src);
  PlyContents out;
  bool have_vertex = false;

  std::optional<BinaryCursor> bin;
  std::optional<LineReader> text;
  if (h.binary) {
    bin.emplace(bytes, h.data_offset, src);
  } else {
    text.emplace(bytes, h.data_offset, h.header_lines);
  }

  for (const PlyElement& el : h.elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, ilist = -1;
    for (std::size_t p = 0; p < el.props.size(); ++p) {
      const auto& prop = el.props[p];
      if (is_vertex && !prop.is_list) {
        if (prop.name == "x") ix = static_cast<int>(p);
        if (prop.name == "y") iy = static_cast<int>(p);
        if (prop.name == "z") iz = static_cast<int>(p);
      }
      if (is_face && prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
        ilist = static_cast<int>(p);
      }
    }
    if (is_vertex) {
      if (have_vertex) throw ParseError(src, 0, 0, "duplicate vertex element");
      if (ix < 0 || iy < 0) throw ParseError(src, h.header_lines, 0, "vertex element lacks x/y properties");
      have_vertex = true;
      if (bin) {
        std::size_t min_size = 0;
        for (const auto& prop : el.props) min_size += prop.is_list ? type_size(prop.count_type) : type_size(prop.type);
        if (el.count > 0 && min_size > 0 && bin->remaining() / min_size < el.count) {
          throw ParseError(src, 0, bin->pos(), "truncated binary payload: " + std::to_string(el.count) +
                                                   " vertices declared, data ends early");
        }
      }
      out.vertices.resize(iz >= 0 ? 3 : 2, static_cast<Eigen::Index>(el.count));
    }

    for (std::size_t row = 0; row < el.count; ++row) {
      std::vector<long long> list_values;
      if (bin) {
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            const std::size_t at = bin->pos();
            const double c = bin->read(prop.count_type);
            if (c < 0) throw ParseError(src, 0, at, "negative list length");
            const auto count = static_cast<std::size_t>(c);
            if (count > bin->remaining() / type_size(prop.type)) {
              throw ParseError(src, 0, at, "truncated binary payload: list of " + std::to_string(count) + " items");
            }
            for (std::size_t i = 0; i < count; ++i) {
              const double v = bin->read(prop.type);
              if (static_cast<int>(p) == ilist) list_values.push_back(static_cast<long long>(v));
            }
          } else {
            const double v = bin->read(prop.type);
            if (is_vertex) {
              const auto col = static_cast<Eigen::Index>(row);
              if (static_cast<int>(p) == ix) out.vertices(0, col) = v;
              if (static_cast<int>(p) == iy) out.vertices(1, col) = v;
              if (static_cast<int>(p) == iz) out.vertices(2, col) = v;
            }
          }
        }
      } else {
        std::string_view line;
        do {
          if (!text->next(line)) {
            throw ParseError(src, text->line() + 1, 0, "unexpected end of file in element '" + el.name + "' (row " +
                                                           std::to_string(row) + " of " + std::to_string(el.count) + ")");
          }
        } while (split_ws(line).empty());
        const auto tok = split_ws(line);
        const std::size_t ln = text->line();
        std::size_t t = 0;
        auto take = [&](const char* what) -> double {
          if (t >= tok.size()) throw ParseError(src, ln, 0, std::string("too few values (expected ") + what + ")");
          const auto v = to_double(tok[t]);
          if (!v) throw ParseError(src, ln, 0, "non-numeric token '" + std::string(tok[t]) + "'");
          ++t;
          return *v;
        };
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            const double c = take("list length");
            if (c < 0 || c != std::floor(c)) throw ParseError(src, ln, 0, "invalid list length");
            for (std::size_t i = 0; i < static_cast<std::size_t>(c); ++i) {
              const double v = take("list item");
              if (static_cast<int>(p) == ilist) list_values.push_back(static_cast<long long>(v));
            }
          } else {
            const double v = take(prop.name.c_str());
            if (is_vertex) {
              const auto col = static_cast<Eigen::Index>(row);
              if (static_cast<int>(p) == ix) out.vertices(0, col) = v;
              if (static_cast<int>(p) == iy) out.vertices(1, col) = v;
              if (static_cast<int>(p) == iz) out.vertices(2, col) = v;
            }
          }
        }
        if (t != tok.size()) throw ParseError(src, ln, 0, "trailing values on line");
      }
      if (is_face && want_faces && ilist >= 0) out.faces.push_back(std::move(list_values));
    }
  }
  if (!have_vertex) throw ParseError(src, h.header_lines, 0, "PLY has no vertex element");
  if (!out.vertices.allFinite()) throw ParseError(src, 0, 0, "vertex coordinates contain NaN or Inf");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void append_le_double(std::string& out, double v) {
  unsigned char buf[8];
  std::memcpy(buf, &v, 8);
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + 8);
  out.append(reinterpret_cast<const char*>(buf), 8);
}

std::vector<std::array<std::uint32_t, 3>> fan_triangulate(const std::vector<long long>& poly, std::size_t n_vertices,
                                                          const std::string& src, std::size_t line) {
  if (poly.size() < 3) throw ParseError(src, line, 0, "face with fewer than 3 vertices");
  for (const long long idx : poly) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= n_vertices) {
      throw ParseError(src, line, 0, "face index " + std::to_string(idx) + " out of range");
    }
  }
  std::vector<std::array<std::uint32_t, 3>> tris;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    tris.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[i]),
                    static_cast<std::uint32_t>(poly[i + 1])});
  }
  return tris;
}

}  // namespace

CloudFormat parse_format(std::string_view name) {
  const std::string n = lower(name);
  if (n == "auto") return CloudFormat::kAuto;
  if (n == "xyz") return CloudFormat::kXyz;
  if (n == "ply" || n == "ply-binary") return CloudFormat::kPlyBinary;
  if (n == "ply-ascii") return CloudFormat::kPlyAscii;
  throw Error(ErrorCode::kInvalidArgument, "unknown cloud format '" + std::string(name) + "'");
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

PointCloud parse_xyz(std::string_view text, const std::string& source) {
  LineReader reader(text);
  std::string_view line;
  std::vector<double> coords;
  int dim = 0;
  while (reader.next(line)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (dim == 0) {
      if (tok.size() != 2 && tok.size() != 3) {
        throw ParseError(source, reader.line(), 0, "expected 2 or 3 coordinates, got " + std::to_string(tok.size()));
      }
      dim = static_cast<int>(tok.size());
    } else if (static_cast<int>(tok.size()) != dim) {
      throw ParseError(source, reader.line(), 0, "expected " + std::to_string(dim) + " coordinates, got " +
                                                     std::to_string(tok.size()));
    }
    for (const auto t : tok) {
      const auto v = to_double(t);
      if (!v) throw ParseError(source, reader.line(), 0, "non-numeric token '" + std::string(t) + "'");
      if (!std::isfinite(*v)) throw ParseError(source, reader.line(), 0, "non-finite coordinate");
      coords.push_back(*v);
    }
  }
  if (dim == 0) return PointCloud(Matrix(3, 0), source);
  return PointCloud(dim, coords, source);
}

PointCloud parse_ply(std::string_view bytes, const std::string& source) {
  return PointCloud(parse_ply_contents(bytes, source, false).vertices, source);
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string bytes = read_file(path);
  const std::string name = path.filename().string();
  if (format == CloudFormat::kAuto) {
    const bool ply = lower(path.extension().string()) == ".ply" || bytes.rfind("ply", 0) == 0;
    format = ply ? CloudFormat::kPlyBinary : CloudFormat::kXyz;
  }
  PointCloud cloud = format == CloudFormat::kXyz ? parse_xyz(bytes, path.string()) : parse_ply(bytes, path.string());
  return cloud.with_name(path.stem().string().empty() ? name : path.stem().string());
}

std::string format_cloud(const PointCloud& cloud, CloudFormat format) {
  std::string out;
  const int d = cloud.dim();
  if (format == CloudFormat::kXyz || format == CloudFormat::kAuto) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int r = 0; r < d; ++r) {
        if (r > 0) out += ' ';
        out += format_double(cloud.point(i)[r]);
      }
      out += '\n';
    }
    return out;
  }
  const bool binary = format == CloudFormat::kPlyBinary;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  const char* names[] = {"x", "y", "z"};
  for (int r = 0; r < d; ++r) out += std::string("property double ") + names[r] + "\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int r = 0; r < d; ++r) {
      if (binary) {
        append_le_double(out, cloud.point(i)[r]);
      } else {
        if (r > 0) out += ' ';
        out += format_double(cloud.point(i)[r]);
      }
    }
    if (!binary) out += '\n';
  }
  return out;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::kAuto) {
    format = lower(path.extension().string()) == ".ply" ? CloudFormat::kPlyBinary : CloudFormat::kXyz;
  }
  write_file(path, format_cloud(cloud, format));
}

TriangleMesh make_mesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<std::uint32_t, 3>> faces) {
  TriangleMesh mesh;
  mesh.vertices = std::move(vertices);
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::kNonFinite, "mesh vertex is not finite");
  }
  for (const auto& f : faces) {
    for (const auto idx : f) {
      if (idx >= mesh.vertices.size()) throw Error(ErrorCode::kInvalidArgument, "mesh face index out of range");
    }
    mesh.faces.push_back(f);
    if (!(mesh.face_area(mesh.faces.size() - 1) > 0.0)) {
      mesh.faces.pop_back();
      ++mesh.dropped_degenerate;
    }
  }
  return mesh;
}

TriangleMesh parse_obj(std::string_view text, const std::string& source) {
  LineReader reader(text);
  std::string_view line;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::pair<std::vector<long long>, std::size_t>> polys;
  while (reader.next(line)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4 || tok.size() > 5) throw ParseError(source, reader.line(), 0, "vertex needs 3 coordinates");
      Eigen::Vector3d v;
      for (int i = 0; i < 3; ++i) {
        const auto x = to_double(tok[static_cast<std::size_t>(i + 1)]);
        if (!x || !std::isfinite(*x)) throw ParseError(source, reader.line(), 0, "bad vertex coordinate");
        v[i] = *x;
      }
      vertices.push_back(v);
    } else if (tok[0] == "f") {
      std::vector<long long> poly;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto slash = tok[i].find('/');
        const auto idx = to_int(tok[i].substr(0, slash));
        if (!idx || *idx == 0) throw ParseError(source, reader.line(), 0, "bad face index '" + std::string(tok[i]) + "'");
        // 1-based; negative indices count back from the latest vertex.
        poly.push_back(*idx > 0 ? *idx - 1 : static_cast<long long>(vertices.size()) + *idx);
      }
      polys.emplace_back(std::move(poly), reader.line());
    }
  }
  std::vector<std::array<std::uint32_t, 3>> faces;
  for (const auto& [poly, ln] : polys) {
    for (const auto& tri : fan_triangulate(poly, vertices.size(), source, ln)) faces.push_back(tri);
  }
  return make_mesh(std::move(vertices), std::move(faces));
}

TriangleMesh parse_ply_mesh(std::string_view bytes, const std::string& source) {
  PlyContents c = parse_ply_contents(bytes, source, true);
  if (c.vertices.rows() != 3) throw ParseError(source, 0, 0, "mesh PLY needs x, y and z");
  std::vector<Eigen::Vector3d> vertices(static_cast<std::size_t>(c.vertices.cols()));
  for (Eigen::Index i = 0; i < c.vertices.cols(); ++i) vertices[static_cast<std::size_t>(i)] = c.vertices.col(i);
  std::vector<std::array<std::uint32_t, 3>> faces;
  for (const auto& poly : c.faces) {
    for (const auto& tri : fan_triangulate(poly, vertices.size(), source, 0)) faces.push_back(tri);
  }
  return make_mesh(std::move(vertices), std::move(faces));
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (lower(path.extension().string()) == ".ply" || bytes.rfind("ply", 0) == 0) {
    return parse_ply_mesh(bytes, path.string());
  }
  return parse_obj(bytes, path.string());
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed) {
  return sample_mesh(mesh, n_points, seed, nullptr);
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_points, std::uint64_t seed,
                       std::vector<std::uint32_t>* face_of_sample) {
  if (mesh.faces.empty()) throw Error(ErrorCode::kDegenerateCloud, "sample_mesh: mesh has no non-degenerate faces");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  CounterRng rng(seed, 0x6d657368ULL);
  Matrix pts(3, static_cast<Eigen::Index>(n_points));
  if (face_of_sample != nullptr) face_of_sample->resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const auto& tri = mesh.faces[f];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    pts.col(static_cast<Eigen::Index>(i)) = (1.0 - r1) * mesh.vertices[tri[0]] + r1 * (1.0 - r2) * mesh.vertices[tri[1]] +
                                            r1 * r2 * mesh.vertices[tri[2]];
    if (face_of_sample != nullptr) (*face_of_sample)[i] = static_cast<std::uint32_t>(f);
  }
  return PointCloud(std::move(pts));
}

}  // namespace fls::io
