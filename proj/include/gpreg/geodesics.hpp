#pragma once

#include "gpreg/operators.hpp"

#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gpreg {

// Geodesic distances from a set of source vertices to every mesh vertex.
// distances(i, j) is the distance from sourceVertices[i] to vertex j, in mm.
struct GeodesicField {
  std::vector<int> sourceVertices;
  Eigen::MatrixXd distances; // S x N
  double heatTime = 0.0;     // t = tScale * h^2, mm^2
  double tScale = 1.0;
  bool symmetrized = false;

  int sourceCount() const { return static_cast<int>(sourceVertices.size()); }
  int vertexCount() const { return static_cast<int>(distances.cols()); }
  bool covers(int vertex) const {
    return vertex >= 0 && vertex < static_cast<int>(rowOf_.size()) && rowOf_[vertex] >= 0;
  }
  bool coversAll() const { return sourceCount() == vertexCount(); }
  int rowOf(int vertex) const { return covers(vertex) ? rowOf_[vertex] : -1; }

  // Distance between two vertices; at least one must be a source.
  double distance(int vi, int vj) const;

  void buildIndex(); // called by producers after filling sources/distances

private:
  std::vector<int> rowOf_;
};

// Heat-method solver: factorizes the heat step (M - t*Laplacian) and the
// Poisson step once, then answers single-source distance queries. The
// factorizations are immutable after construction; distanceFrom is const
// and safe to call concurrently.
class HeatGeodesicSolver {
public:
  HeatGeodesicSolver(const DiscreteOperators& ops, double tScale = 1.0);

  Eigen::VectorXd distanceFrom(int source) const;
  double heatTime() const { return heatTime_; }
  double tScale() const { return tScale_; }

private:
  const DiscreteOperators& ops_;
  double tScale_;
  double heatTime_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> heat_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> poisson_;
};

// Single-source solves stacked for each requested source vertex.
GeodesicField heatGeodesic(const DiscreteOperators& ops, const std::vector<int>& sources,
                           double tScale = 1.0);

// All-pairs distances over the given vertex subset: per-source solves run in
// parallel against shared factorizations, then the square source-by-source
// block is symmetrized so Gram matrices built from it are exactly symmetric.
GeodesicField pairwiseGeodesics(const DiscreteOperators& ops, const std::vector<int>& vertices,
                                double tScale = 1.0);

// Binary cache: magic, vertex count, source count, mesh content hash,
// tScale, heat time, source indices, row-major float64 distances.
void saveGeodesicCache(const GeodesicField& field, std::uint64_t meshHash,
                       const std::string& path);
std::optional<GeodesicField> loadGeodesicCache(const std::string& path,
                                               std::uint64_t expectedMeshHash,
                                               std::string* warning = nullptr);

// Loads a matching cache if present, else computes and writes it. A corrupt
// or stale cache is recomputed and the reason reported through `warning`.
GeodesicField pairwiseGeodesicsCached(const DiscreteOperators& ops, std::uint64_t meshHash,
                                      const std::vector<int>& vertices, double tScale,
                                      const std::string& cachePath,
                                      std::string* warning = nullptr);

} // namespace gpreg
