#include "gpreg/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gpreg {

double Mesh::diameter() const {
  if (vertices.rows() == 0) return 0.0;
  Vec3 lo = vertices.colwise().minCoeff();
  Vec3 hi = vertices.colwise().maxCoeff();
  return (hi - lo).norm();
}

double Mesh::meanEdgeLength() const {
  if (faces.rows() == 0) return 0.0;
  std::set<std::pair<int, int>> seen;
  double total = 0.0;
  for (int f = 0; f < faces.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      int a = faces(f, e), b = faces(f, (e + 1) % 3);
      auto key = std::minmax(a, b);
      if (seen.insert(key).second)
        total += (vertices.row(a) - vertices.row(b)).norm();
    }
  }
  return total / static_cast<double>(seen.size());
}

void computeVertexNormals(Mesh& mesh) {
  const int n = mesh.vertexCount();
  mesh.vertexNormals = Eigen::MatrixXd::Zero(n, 3);
  for (int f = 0; f < mesh.faces.rows(); ++f) {
    Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
    Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
    Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
    Vec3 areaNormal = (b - a).cross(c - a); // length 2*area: area weighting
    for (int k = 0; k < 3; ++k)
      mesh.vertexNormals.row(mesh.faces(f, k)) += areaNormal.transpose();
  }
  for (int v = 0; v < n; ++v) {
    double len = mesh.vertexNormals.row(v).norm();
    if (len > 0)
      mesh.vertexNormals.row(v) /= len;
    else
      mesh.vertexNormals.row(v) = Vec3(0, 0, 1).transpose();
  }
}

std::uint64_t contentHash(const Mesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, size_t bytes) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (int v = 0; v < mesh.vertices.rows(); ++v)
    for (int c = 0; c < 3; ++c) {
      double x = mesh.vertices(v, c);
      mix(&x, sizeof(x));
    }
  for (int f = 0; f < mesh.faces.rows(); ++f)
    for (int c = 0; c < 3; ++c) {
      std::int32_t i = mesh.faces(f, c);
      mix(&i, sizeof(i));
    }
  return h;
}

void validateMesh(const Mesh& mesh) {
  const int n = mesh.vertexCount();
  if (n < 3) throw std::runtime_error("mesh has fewer than 3 vertices");
  const double diag = mesh.diameter();
  const double areaTol = 1e-14 * diag * diag;
  for (int f = 0; f < mesh.faces.rows(); ++f) {
    int i = mesh.faces(f, 0), j = mesh.faces(f, 1), k = mesh.faces(f, 2);
    if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n)
      throw std::runtime_error("face " + std::to_string(f) + " references vertex out of range");
    if (i == j || j == k || i == k)
      throw std::runtime_error("degenerate face at index " + std::to_string(f) +
                               " (repeated vertex)");
    Vec3 a = mesh.vertices.row(i), b = mesh.vertices.row(j), c = mesh.vertices.row(k);
    double area2 = (b - a).cross(c - a).norm();
    if (!(area2 > areaTol))
      throw std::runtime_error("degenerate face at index " + std::to_string(f) +
                               " (zero area)");
  }
}

namespace {

bool parseDouble(const std::string& tok, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos > 0;
  } catch (...) {
    return false;
  }
}

std::vector<std::string> splitWs(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

} // namespace

Mesh loadObj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> tris;
  std::string line;
  int lineNo = 0, faceNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto toks = splitWs(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4)
        throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": malformed vertex line");
      Vec3 p;
      for (int c = 0; c < 3; ++c)
        if (!parseDouble(toks[c + 1], p[c]))
          throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": malformed vertex line");
      verts.push_back(p);
    } else if (toks[0] == "f") {
      if (toks.size() != 4)
        throw std::runtime_error("non-triangular face at index " + std::to_string(faceNo) +
                                 " (" + path + ":" + std::to_string(lineNo) + ")");
      Eigen::Vector3i t;
      for (int c = 0; c < 3; ++c) {
        std::string idx = toks[c + 1];
        // strip texture/normal sub-indices: "12/5/7" -> "12"
        if (auto slash = idx.find('/'); slash != std::string::npos) idx = idx.substr(0, slash);
        long v = 0;
        try {
          v = std::stol(idx);
        } catch (...) {
          throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": malformed face index");
        }
        if (v < 0) v = static_cast<long>(verts.size()) + 1 + v; // relative OBJ indices
        t[c] = static_cast<int>(v - 1);
      }
      tris.push_back(t);
      ++faceNo;
    }
    // all other line types (vn, vt, g, usemtl, ...) ignored
  }
  Mesh mesh;
  mesh.vertices.resize(static_cast<int>(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<int>(i)) = verts[i];
  mesh.faces.resize(static_cast<int>(tris.size()), 3);
  for (size_t i = 0; i < tris.size(); ++i) mesh.faces.row(static_cast<int>(i)) = tris[i];
  if (mesh.vertexCount() == 0) throw std::runtime_error("empty mesh: " + path);
  validateMesh(mesh);
  computeVertexNormals(mesh);
  return mesh;
}

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  bool isList = false;
  std::string countType;
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> props;
};

size_t plyTypeSize(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw std::runtime_error("unsupported PLY property type: " + t);
}

double readBinaryScalar(std::istream& in, const std::string& type) {
  // host is little-endian, matching binary_little_endian payloads
  unsigned char buf[8];
  size_t sz = plyTypeSize(type);
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(sz));
  if (!in) throw std::runtime_error("unexpected end of PLY payload");
  if (type == "char" || type == "int8") return *reinterpret_cast<signed char*>(buf);
  if (type == "uchar" || type == "uint8") return buf[0];
  if (type == "short" || type == "int16") { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
  if (type == "ushort" || type == "uint16") { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
  if (type == "int" || type == "int32") { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
  if (type == "uint" || type == "uint32") { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
  if (type == "float" || type == "float32") { float v; std::memcpy(&v, buf, 4); return v; }
  if (type == "double" || type == "float64") { double v; std::memcpy(&v, buf, 8); return v; }
  throw std::runtime_error("unsupported PLY property type: " + type);
}

} // namespace

Mesh loadPly(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw std::runtime_error(path + ": not a PLY file");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (line.size() && line.back() == '\r') line.pop_back();
    auto toks = splitWs(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw std::runtime_error(path + ": malformed format line");
      if (toks[1] == "ascii") binary = false;
      else if (toks[1] == "binary_little_endian") binary = true;
      else throw std::runtime_error(path + ": unsupported PLY format " + toks[1]);
    } else if (toks[0] == "element") {
      if (toks.size() < 3) throw std::runtime_error(path + ": malformed element line");
      elements.push_back({toks[1], std::stol(toks[2]), {}});
    } else if (toks[0] == "property") {
      if (elements.empty() || toks.size() < 3)
        throw std::runtime_error(path + ": property outside element");
      PlyProperty p;
      if (toks[1] == "list") {
        if (toks.size() < 5) throw std::runtime_error(path + ": malformed list property");
        p.isList = true;
        p.countType = toks[2];
        p.type = toks[3];
        p.name = toks[4];
      } else {
        p.type = toks[1];
        p.name = toks[2];
      }
      elements.back().props.push_back(p);
    } else if (toks[0] == "end_header") {
      break;
    }
  }

  Mesh mesh;
  bool haveColor = false;
  int faceNo = 0;

  auto asciiTokens = [&in, &path]() {
    std::string l;
    while (std::getline(in, l)) {
      auto t = splitWs(l);
      if (!t.empty()) return t;
    }
    throw std::runtime_error(path + ": unexpected end of ASCII payload");
  };

  for (const auto& el : elements) {
    if (el.name == "vertex") {
      mesh.vertices.resize(el.count, 3);
      Eigen::MatrixXd colors(el.count, 3);
      for (long i = 0; i < el.count; ++i) {
        std::vector<std::string> toks;
        size_t cursor = 0;
        if (!binary) toks = asciiTokens();
        for (const auto& p : el.props) {
          double value = 0;
          if (p.isList) throw std::runtime_error(path + ": list property on vertex element");
          if (binary) {
            value = readBinaryScalar(in, p.type);
          } else {
            if (cursor >= toks.size()) throw std::runtime_error(path + ": short vertex row");
            if (!parseDouble(toks[cursor++], value))
              throw std::runtime_error(path + ": malformed vertex value");
          }
          if (p.name == "x") mesh.vertices(i, 0) = value;
          else if (p.name == "y") mesh.vertices(i, 1) = value;
          else if (p.name == "z") mesh.vertices(i, 2) = value;
          else if (p.name == "red") { colors(i, 0) = value / 255.0; haveColor = true; }
          else if (p.name == "green") { colors(i, 1) = value / 255.0; haveColor = true; }
          else if (p.name == "blue") { colors(i, 2) = value / 255.0; haveColor = true; }
          // nx/ny/nz/alpha/... skipped; normals are recomputed
        }
      }
      if (haveColor) mesh.vertexColors = colors;
    } else if (el.name == "face") {
      mesh.faces.resize(el.count, 3);
      for (long i = 0; i < el.count; ++i) {
        std::vector<std::string> toks;
        size_t cursor = 0;
        if (!binary) toks = asciiTokens();
        for (const auto& p : el.props) {
          if (p.isList) {
            long n;
            if (binary) {
              n = static_cast<long>(readBinaryScalar(in, p.countType));
            } else {
              double v;
              if (cursor >= toks.size() || !parseDouble(toks[cursor++], v))
                throw std::runtime_error(path + ": malformed face row");
              n = static_cast<long>(v);
            }
            bool isIndices = (p.name == "vertex_indices" || p.name == "vertex_index");
            if (isIndices && n != 3)
              throw std::runtime_error("non-triangular face at index " + std::to_string(faceNo));
            for (long k = 0; k < n; ++k) {
              double v;
              if (binary) {
                v = readBinaryScalar(in, p.type);
              } else {
                if (cursor >= toks.size()) throw std::runtime_error(path + ": short face row");
                if (!parseDouble(toks[cursor++], v))
                  throw std::runtime_error(path + ": malformed face row");
              }
              if (isIndices) mesh.faces(i, static_cast<int>(k)) = static_cast<int>(v);
            }
          } else {
            if (binary) readBinaryScalar(in, p.type);
            else ++cursor;
          }
        }
        ++faceNo;
      }
    } else {
      // skip unknown elements
      for (long i = 0; i < el.count; ++i) {
        if (!binary) {
          asciiTokens();
        } else {
          for (const auto& p : el.props) {
            if (p.isList) {
              long n = static_cast<long>(readBinaryScalar(in, p.countType));
              for (long k = 0; k < n; ++k) readBinaryScalar(in, p.type);
            } else {
              readBinaryScalar(in, p.type);
            }
          }
        }
      }
    }
  }

  if (mesh.vertexCount() == 0) throw std::runtime_error("empty mesh: " + path);
  validateMesh(mesh);
  computeVertexNormals(mesh);
  return mesh;
}

namespace {

std::string lowerExt(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

} // namespace

Mesh loadMesh(const std::string& path) {
  std::string ext = lowerExt(path);
  if (ext == "obj") return loadObj(path);
  if (ext == "ply") return loadPly(path);
  throw std::runtime_error("unrecognized mesh extension: " + path);
}

namespace {

void saveObj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[128];
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", mesh.vertices(v, 0),
                  mesh.vertices(v, 1), mesh.vertices(v, 2));
    out << buf;
  }
  for (int f = 0; f < mesh.faceCount(); ++f)
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  if (!out) throw std::runtime_error("write failure: " + path);
}

void savePly(const Mesh& mesh, const std::string& path, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const bool colors = mesh.hasColors();
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.vertexCount() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.faceCount() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";

  auto toByte = [](double c) {
    double v = std::clamp(c, 0.0, 1.0) * 255.0;
    return static_cast<unsigned char>(std::lround(v));
  };

  if (binary) {
    for (int v = 0; v < mesh.vertexCount(); ++v) {
      double p[3] = {mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2)};
      out.write(reinterpret_cast<const char*>(p), sizeof(p));
      if (colors) {
        unsigned char rgb[3] = {toByte(mesh.vertexColors(v, 0)), toByte(mesh.vertexColors(v, 1)),
                                toByte(mesh.vertexColors(v, 2))};
        out.write(reinterpret_cast<const char*>(rgb), 3);
      }
    }
    for (int f = 0; f < mesh.faceCount(); ++f) {
      unsigned char n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      std::int32_t idx[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
      out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  } else {
    char buf[160];
    for (int v = 0; v < mesh.vertexCount(); ++v) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", mesh.vertices(v, 0),
                    mesh.vertices(v, 1), mesh.vertices(v, 2));
      out << buf;
      if (colors)
        out << ' ' << int(toByte(mesh.vertexColors(v, 0))) << ' '
            << int(toByte(mesh.vertexColors(v, 1))) << ' ' << int(toByte(mesh.vertexColors(v, 2)));
      out << '\n';
    }
    for (int f = 0; f < mesh.faceCount(); ++f)
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

} // namespace

void saveMesh(const Mesh& mesh, const std::string& path, MeshFileFormat format) {
  switch (format) {
    case MeshFileFormat::Obj: saveObj(mesh, path); break;
    case MeshFileFormat::PlyAscii: savePly(mesh, path, false); break;
    case MeshFileFormat::PlyBinary: savePly(mesh, path, true); break;
  }
}

void saveMesh(const Mesh& mesh, const std::string& path) {
  std::string ext = lowerExt(path);
  if (ext == "obj") saveObj(mesh, path);
  else if (ext == "ply") savePly(mesh, path, true);
  else throw std::runtime_error("unrecognized mesh extension: " + path);
}

Vec3 viridisColor(double t) {
  static const double anchors[9][3] = {
      {0.267004, 0.004874, 0.329415}, {0.281412, 0.155834, 0.469201},
      {0.244972, 0.287675, 0.537260}, {0.190631, 0.407061, 0.556089},
      {0.147607, 0.511733, 0.557049}, {0.119699, 0.618490, 0.536347},
      {0.208030, 0.718701, 0.472873}, {0.430983, 0.808473, 0.346476},
      {0.993248, 0.906157, 0.143936}};
  t = std::clamp(t, 0.0, 1.0);
  double pos = t * 8.0;
  int i = std::min(7, static_cast<int>(pos));
  double f = pos - i;
  Vec3 a(anchors[i][0], anchors[i][1], anchors[i][2]);
  Vec3 b(anchors[i + 1][0], anchors[i + 1][1], anchors[i + 1][2]);
  return a + f * (b - a);
}

void saveMeshWithScalars(const Mesh& mesh, const Eigen::VectorXd& scalars,
                         const std::string& path) {
  if (mesh.vertexCount() < 3 || mesh.faceCount() == 0)
    throw std::runtime_error("scalar export requires a valid triangle mesh");
  if (scalars.size() != mesh.vertexCount())
    throw std::runtime_error("scalar field length does not match vertex count");
  double lo = scalars.minCoeff(), hi = scalars.maxCoeff();
  double range = hi - lo;
  Mesh colored = mesh;
  colored.vertexColors.resize(mesh.vertexCount(), 3);
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    double t = range > 0 ? (scalars[v] - lo) / range : 0.5;
    colored.vertexColors.row(v) = viridisColor(t).transpose();
  }
  savePly(colored, path, true);
}

} // namespace gpreg
