#include "gpreg/operators.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace gpreg {

DiscreteOperators buildOperators(const Mesh& mesh) {
  const int n = mesh.vertexCount();
  const int f = mesh.faceCount();
  if (n < 3 || f < 1) throw std::runtime_error("buildOperators: mesh has no faces");

  DiscreteOperators ops;
  ops.vertices = mesh.vertices;
  ops.faces = mesh.faces;
  ops.faceNormals.resize(f, 3);
  ops.faceAreas.resize(f);
  ops.mass = Eigen::VectorXd::Zero(n);

  const double diag = mesh.diameter();
  const double areaTol = 1e-14 * diag * diag;

  std::map<std::pair<int, int>, int> edgeUse;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(12 * f);

  double edgeTotal = 0.0;
  long edgeCount = 0;

  for (int t = 0; t < f; ++t) {
    int vi[3] = {mesh.faces(t, 0), mesh.faces(t, 1), mesh.faces(t, 2)};
    Vec3 p[3] = {mesh.vertices.row(vi[0]), mesh.vertices.row(vi[1]), mesh.vertices.row(vi[2])};
    Vec3 cross = (p[1] - p[0]).cross(p[2] - p[0]);
    double area2 = cross.norm();
    if (!(area2 > areaTol))
      throw std::runtime_error("degenerate triangle at face " + std::to_string(t));
    ops.faceAreas[t] = 0.5 * area2;
    ops.faceNormals.row(t) = (cross / area2).transpose();

    for (int k = 0; k < 3; ++k) {
      ops.mass[vi[k]] += ops.faceAreas[t] / 3.0;
      int a = vi[(k + 1) % 3], b = vi[(k + 2) % 3];
      auto key = std::minmax(a, b);
      auto [it, fresh] = edgeUse.emplace(key, 0);
      it->second += 1;
      if (it->second > 2)
        throw std::runtime_error("non-manifold edge (" + std::to_string(key.first) + "," +
                                 std::to_string(key.second) + ")");
      if (fresh) {
        edgeTotal += (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
        ++edgeCount;
      }
      // half cotan of the angle at vi[k], opposite edge (a,b)
      Vec3 u = p[(k + 1) % 3] - p[k];
      Vec3 v = p[(k + 2) % 3] - p[k];
      double cot = u.dot(v) / u.cross(v).norm();
      double w = 0.5 * cot;
      trips.emplace_back(a, b, w);
      trips.emplace_back(b, a, w);
      trips.emplace_back(a, a, -w);
      trips.emplace_back(b, b, -w);
    }
  }

  ops.meanEdgeLength = edgeTotal / static_cast<double>(edgeCount);
  ops.laplacian.resize(n, n);
  ops.laplacian.setFromTriplets(trips.begin(), trips.end());
  ops.laplacian.makeCompressed();
  return ops;
}

} // namespace gpreg
