#pragma once

#include "gpreg/mesh.hpp"

#include <Eigen/Geometry>
#include <string>
#include <vector>

namespace gpreg {

struct Landmark {
  std::string name;
  bool byIndex = false;
  int vertexIndex = -1;
  Vec3 position = Vec3::Zero(); // used when !byIndex
};

struct LandmarkSet {
  std::vector<Landmark> entries;
  std::string attachedMeshId;

  // Position of a landmark, resolving vertex references against the mesh.
  Vec3 resolve(const Landmark& lm, const Mesh& mesh) const;
};

// Plaintext format: one `name x y z` or `name #index` per line,
// `#`-prefixed comment lines ignored. Names must be unique.
LandmarkSet loadLandmarks(const std::string& path);
void saveLandmarks(const LandmarkSet& set, const std::string& path);

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Vec3 applyInverse(const Vec3& p) const {
    return rotation.transpose() * (p - translation) / scale;
  }
  Mesh applyToMesh(const Mesh& mesh) const;
  Mesh applyInverseToMesh(const Mesh& mesh) const;
};

// Least-squares similarity transform (proper rotation, det +1) minimizing
// sum ||s R p_i + t - q_i||^2 over point pairs.
SimilarityTransform similarityAlign(const std::vector<Vec3>& source,
                                    const std::vector<Vec3>& target);

// Matches landmarks by name and aligns resolved positions. Throws when fewer
// than 3 names are shared or the configuration is degenerate (collinear).
SimilarityTransform similarityAlign(const LandmarkSet& source, const Mesh& sourceMesh,
                                    const LandmarkSet& target, const Mesh& targetMesh);

} // namespace gpreg
