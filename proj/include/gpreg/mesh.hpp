#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace gpreg {

using Vec3 = Eigen::Vector3d;

// Indexed triangle mesh. Vertices are in millimeters; normals are unit,
// area-weighted averages of incident face normals. Colors, when present,
// are RGB in [0,1]. Immutable by convention once built (spatial structures
// hold references into it).
struct Mesh {
  Eigen::MatrixXd vertices;      // N x 3
  Eigen::MatrixXi faces;         // F x 3
  Eigen::MatrixXd vertexNormals; // N x 3, unit; empty until computed
  Eigen::MatrixXd vertexColors;  // N x 3 in [0,1], or empty

  int vertexCount() const { return static_cast<int>(vertices.rows()); }
  int faceCount() const { return static_cast<int>(faces.rows()); }
  bool hasColors() const { return vertexColors.rows() == vertices.rows() && vertices.rows() > 0; }

  // Bounding-box diagonal, used as the length scale for relative tolerances.
  double diameter() const;
  double meanEdgeLength() const;
};

// One template-vertex -> target-surface pairing produced by correspondence
// search. Weight is the confidence in [0,1] applied to the fitting residual.
struct Correspondence {
  int sourceVertex;
  Vec3 targetPoint;
  Vec3 targetNormal;
  double weight;
};
using CorrespondenceSet = std::vector<Correspondence>;

// Recompute area-weighted vertex normals in place. Vertices not referenced
// by any face get +z so the unit-length contract holds everywhere.
void computeVertexNormals(Mesh& mesh);

// FNV-1a over vertex and face bytes; keys the geodesic distance cache.
std::uint64_t contentHash(const Mesh& mesh);

// Checks face indices, rejects non-triangular input upstream, rejects
// degenerate faces (repeated indices or near-zero area) with the face index
// in the message. Called by the loaders; public for meshes built in code.
void validateMesh(const Mesh& mesh);

enum class MeshFileFormat { Obj, PlyAscii, PlyBinary };

// Format chosen by extension (.obj / .ply); PLY subformat detected from the
// header on load. Computes normals and validates.
Mesh loadMesh(const std::string& path);
Mesh loadObj(const std::string& path);
Mesh loadPly(const std::string& path);

void saveMesh(const Mesh& mesh, const std::string& path);
void saveMesh(const Mesh& mesh, const std::string& path, MeshFileFormat format);

// Writes a binary little-endian PLY whose vertex colors encode the scalar
// field through a viridis-like monotone colormap (min -> dark violet,
// max -> yellow; constant fields map to the middle color).
void saveMeshWithScalars(const Mesh& mesh, const Eigen::VectorXd& scalars,
                         const std::string& path);

// Monotone perceptual colormap lookup, t in [0,1].
Vec3 viridisColor(double t);

} // namespace gpreg
