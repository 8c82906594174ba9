#include "gpreg/landmarks.hpp"

#include <Eigen/SVD>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace gpreg {

Vec3 LandmarkSet::resolve(const Landmark& lm, const Mesh& mesh) const {
  if (!lm.byIndex) return lm.position;
  if (lm.vertexIndex < 0 || lm.vertexIndex >= mesh.vertexCount())
    throw std::runtime_error("landmark '" + lm.name + "' references vertex " +
                             std::to_string(lm.vertexIndex) + " outside the attached mesh");
  return mesh.vertices.row(lm.vertexIndex);
}

LandmarkSet loadLandmarks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  LandmarkSet set;
  std::set<std::string> names;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name)) continue;
    if (name[0] == '#') continue;
    if (!names.insert(name).second)
      throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": duplicate landmark '" +
                               name + "'");
    std::string tok;
    if (!(ss >> tok))
      throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": missing position");
    Landmark lm;
    lm.name = name;
    if (tok[0] == '#') {
      lm.byIndex = true;
      lm.vertexIndex = std::stoi(tok.substr(1));
    } else {
      lm.position[0] = std::stod(tok);
      if (!(ss >> lm.position[1] >> lm.position[2]))
        throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": malformed position");
    }
    set.entries.push_back(lm);
  }
  return set;
}

void saveLandmarks(const LandmarkSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[160];
  for (const auto& lm : set.entries) {
    if (lm.byIndex) {
      out << lm.name << " #" << lm.vertexIndex << '\n';
    } else {
      std::snprintf(buf, sizeof(buf), "%s %.17g %.17g %.17g\n", lm.name.c_str(), lm.position[0],
                    lm.position[1], lm.position[2]);
      out << buf;
    }
  }
}

Mesh SimilarityTransform::applyToMesh(const Mesh& mesh) const {
  Mesh out = mesh;
  for (int v = 0; v < mesh.vertexCount(); ++v)
    out.vertices.row(v) = apply(mesh.vertices.row(v)).transpose();
  if (out.faceCount() > 0) computeVertexNormals(out);
  return out;
}

Mesh SimilarityTransform::applyInverseToMesh(const Mesh& mesh) const {
  Mesh out = mesh;
  for (int v = 0; v < mesh.vertexCount(); ++v)
    out.vertices.row(v) = applyInverse(mesh.vertices.row(v)).transpose();
  if (out.faceCount() > 0) computeVertexNormals(out);
  return out;
}

SimilarityTransform similarityAlign(const std::vector<Vec3>& source,
                                    const std::vector<Vec3>& target) {
  if (source.size() != target.size())
    throw std::runtime_error("similarityAlign: point count mismatch");
  const int n = static_cast<int>(source.size());
  if (n < 3) throw std::runtime_error("similarityAlign: at least 3 point pairs required");

  Vec3 muP = Vec3::Zero(), muQ = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    muP += source[i];
    muQ += target[i];
  }
  muP /= n;
  muQ /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double varP = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec3 p = source[i] - muP, q = target[i] - muQ;
    cov += q * p.transpose();
    varP += p.squaredNorm();
  }
  cov /= n;
  varP /= n;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = svd.singularValues();
  if (d[1] <= 1e-12 * std::max(d[0], 1e-300))
    throw std::runtime_error("similarityAlign: degenerate configuration (cross-covariance rank < 2)");

  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  t.scale = (d.asDiagonal().toDenseMatrix() * S).trace() / varP;
  t.translation = muQ - t.scale * (t.rotation * muP);
  return t;
}

SimilarityTransform similarityAlign(const LandmarkSet& source, const Mesh& sourceMesh,
                                    const LandmarkSet& target, const Mesh& targetMesh) {
  std::unordered_map<std::string, Vec3> byName;
  for (const auto& lm : target.entries) byName[lm.name] = target.resolve(lm, targetMesh);
  std::vector<Vec3> p, q;
  for (const auto& lm : source.entries) {
    auto it = byName.find(lm.name);
    if (it == byName.end()) continue;
    p.push_back(source.resolve(lm, sourceMesh));
    q.push_back(it->second);
  }
  if (p.size() < 3)
    throw std::runtime_error("similarityAlign: fewer than 3 landmarks shared by name (" +
                             std::to_string(p.size()) + " found)");
  return similarityAlign(p, q);
}

} // namespace gpreg
