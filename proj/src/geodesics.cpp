#include "gpreg/geodesics.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace gpreg {

void GeodesicField::buildIndex() {
  rowOf_.assign(static_cast<size_t>(distances.cols()), -1);
  for (int i = 0; i < sourceCount(); ++i) rowOf_[sourceVertices[i]] = i;
}

double GeodesicField::distance(int vi, int vj) const {
  if (covers(vi)) return distances(rowOf_[vi], vj);
  if (covers(vj)) return distances(rowOf_[vj], vi);
  throw std::runtime_error("geodesic cache does not cover vertex pair (" + std::to_string(vi) +
                           "," + std::to_string(vj) + ")");
}

HeatGeodesicSolver::HeatGeodesicSolver(const DiscreteOperators& ops, double tScale)
    : ops_(ops), tScale_(tScale) {
  const int n = ops.vertexCount();
  heatTime_ = tScale * ops.meanEdgeLength * ops.meanEdgeLength;

  Eigen::SparseMatrix<double> stiffness = -ops.laplacian; // PSD
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();

  Eigen::SparseMatrix<double> heatMat =
      Eigen::SparseMatrix<double>(ops.mass.asDiagonal()) + heatTime_ * stiffness;
  heat_.compute(heatMat);
  if (heat_.info() != Eigen::Success)
    throw std::runtime_error("heat step factorization failed");

  // The stiffness matrix has the constant vector in its nullspace; a tiny
  // relative Tikhonov shift pins it (the RHS is mean-centered and the
  // solution shifted so the source sits at zero, so the shift is benign).
  double diagScale = stiffness.diagonal().sum() / n;
  Eigen::SparseMatrix<double> poissonMat = stiffness + (1e-8 * diagScale) * identity;
  poisson_.compute(poissonMat);
  if (poisson_.info() != Eigen::Success)
    throw std::runtime_error("Poisson step factorization failed");
}

Eigen::VectorXd HeatGeodesicSolver::distanceFrom(int source) const {
  const int n = ops_.vertexCount();
  const int nf = static_cast<int>(ops_.faces.rows());
  if (source < 0 || source >= n)
    throw std::runtime_error("geodesic source vertex out of range");

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  delta[source] = 1.0;
  Eigen::VectorXd u = heat_.solve(delta);

  // normalized per-face gradient of u, pointing away from the source
  Eigen::MatrixXd flow(nf, 3);
  for (int t = 0; t < nf; ++t) {
    Vec3 grad = Vec3::Zero();
    Vec3 normal = ops_.faceNormals.row(t);
    double inv2A = 1.0 / (2.0 * ops_.faceAreas[t]);
    for (int k = 0; k < 3; ++k) {
      int v = ops_.faces(t, k);
      Vec3 a = ops_.vertices.row(ops_.faces(t, (k + 1) % 3));
      Vec3 b = ops_.vertices.row(ops_.faces(t, (k + 2) % 3));
      grad += u[v] * inv2A * normal.cross(b - a);
    }
    double len = grad.norm();
    flow.row(t) = len > 0 ? Vec3(-grad / len).transpose() : Vec3::Zero().transpose();
  }

  // integrated divergence: b_i = sum_f A_f * grad(phi_i) . X_f
  Eigen::VectorXd div = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < nf; ++t) {
    Vec3 x = flow.row(t);
    Vec3 normal = ops_.faceNormals.row(t);
    for (int k = 0; k < 3; ++k) {
      int v = ops_.faces(t, k);
      Vec3 a = ops_.vertices.row(ops_.faces(t, (k + 1) % 3));
      Vec3 b = ops_.vertices.row(ops_.faces(t, (k + 2) % 3));
      div[v] += 0.5 * normal.cross(b - a).dot(x);
    }
  }

  div.array() -= div.mean();
  Eigen::VectorXd dist = poisson_.solve(div);
  dist.array() -= dist[source];
  dist = dist.cwiseMax(0.0);
  return dist;
}

GeodesicField heatGeodesic(const DiscreteOperators& ops, const std::vector<int>& sources,
                           double tScale) {
  if (sources.empty()) throw std::runtime_error("heatGeodesic: no source vertices");
  HeatGeodesicSolver solver(ops, tScale);
  GeodesicField field;
  field.sourceVertices = sources;
  field.tScale = tScale;
  field.heatTime = solver.heatTime();
  field.distances.resize(static_cast<int>(sources.size()), ops.vertexCount());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < static_cast<int>(sources.size()); ++i)
    field.distances.row(i) = solver.distanceFrom(sources[i]).transpose();
  field.buildIndex();
  return field;
}

GeodesicField pairwiseGeodesics(const DiscreteOperators& ops, const std::vector<int>& vertices,
                                double tScale) {
  GeodesicField field = heatGeodesic(ops, vertices, tScale);
  const int s = field.sourceCount();
  for (int i = 0; i < s; ++i) {
    field.distances(i, vertices[i]) = 0.0;
    for (int j = i + 1; j < s; ++j) {
      double d = 0.5 * (field.distances(i, vertices[j]) + field.distances(j, vertices[i]));
      field.distances(i, vertices[j]) = d;
      field.distances(j, vertices[i]) = d;
    }
  }
  field.symmetrized = true;
  return field;
}

namespace {

constexpr char kCacheMagic[8] = {'G', 'G', 'E', 'O', '0', '0', '0', '1'};

} // namespace

void saveGeodesicCache(const GeodesicField& field, std::uint64_t meshHash,
                       const std::string& path) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw std::runtime_error("cannot write " + path);
  ::flock(fd, LOCK_EX); // exclusive writer
  auto writeAll = [&](const void* data, size_t bytes) {
    if (::write(fd, data, bytes) != static_cast<ssize_t>(bytes)) {
      ::close(fd);
      throw std::runtime_error("write failure: " + path);
    }
  };
  std::uint64_t n = field.vertexCount(), s = field.sourceCount();
  writeAll(kCacheMagic, 8);
  writeAll(&n, 8);
  writeAll(&s, 8);
  writeAll(&meshHash, 8);
  writeAll(&field.tScale, 8);
  writeAll(&field.heatTime, 8);
  std::vector<std::uint32_t> src(field.sourceVertices.begin(), field.sourceVertices.end());
  writeAll(src.data(), src.size() * 4);
  for (int i = 0; i < field.sourceCount(); ++i) {
    Eigen::VectorXd row = field.distances.row(i);
    writeAll(row.data(), static_cast<size_t>(row.size()) * 8);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
}

std::optional<GeodesicField> loadGeodesicCache(const std::string& path,
                                               std::uint64_t expectedMeshHash,
                                               std::string* warning) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  auto fail = [&](const std::string& why) -> std::optional<GeodesicField> {
    if (warning) *warning = "geodesic cache " + path + ": " + why + "; recomputing";
    return std::nullopt;
  };
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCacheMagic, 8) != 0) return fail("bad magic");
  std::uint64_t n, s, hash;
  double tScale, heatTime;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&s), 8);
  in.read(reinterpret_cast<char*>(&hash), 8);
  in.read(reinterpret_cast<char*>(&tScale), 8);
  in.read(reinterpret_cast<char*>(&heatTime), 8);
  if (!in) return fail("truncated header");
  if (hash != expectedMeshHash) return fail("mesh hash mismatch");
  if (n == 0 || s == 0 || s > n) return fail("implausible header");
  GeodesicField field;
  field.tScale = tScale;
  field.heatTime = heatTime;
  field.symmetrized = true;
  std::vector<std::uint32_t> src(s);
  in.read(reinterpret_cast<char*>(src.data()), static_cast<std::streamsize>(s * 4));
  if (!in) return fail("truncated source list");
  field.sourceVertices.assign(src.begin(), src.end());
  for (int v : field.sourceVertices)
    if (v < 0 || v >= static_cast<int>(n)) return fail("source index out of range");
  field.distances.resize(static_cast<int>(s), static_cast<int>(n));
  for (std::uint64_t i = 0; i < s; ++i) {
    Eigen::VectorXd row(n);
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(n * 8));
    if (!in) return fail("truncated distance block");
    field.distances.row(static_cast<int>(i)) = row.transpose();
  }
  field.buildIndex();
  return field;
}

GeodesicField pairwiseGeodesicsCached(const DiscreteOperators& ops, std::uint64_t meshHash,
                                      const std::vector<int>& vertices, double tScale,
                                      const std::string& cachePath, std::string* warning) {
  if (auto cached = loadGeodesicCache(cachePath, meshHash, warning)) {
    if (cached->tScale == tScale &&
        cached->sourceVertices == vertices) // stale parameter sets are recomputed
      return std::move(*cached);
    if (warning && warning->empty())
      *warning = "geodesic cache " + cachePath + ": parameter mismatch; recomputing";
  }
  GeodesicField field = pairwiseGeodesics(ops, vertices, tScale);
  saveGeodesicCache(field, meshHash, cachePath);
  return field;
}

} // namespace gpreg
