#pragma once

#include "gpreg/mesh.hpp"

#include <Eigen/SparseCore>

namespace gpreg {

// Cotangent Laplacian and lumped mass matrix of a triangle mesh, plus the
// geometry snapshot needed for per-face gradients and divergence.
//
// Sign convention: the Laplacian is negative semi-definite, with positive
// cotan weights off the diagonal and negative row-sum diagonal. Rows sum
// to zero. The heat step therefore solves (M - t*Laplacian) u = delta.
struct DiscreteOperators {
  Eigen::SparseMatrix<double> laplacian; // N x N, NSD
  Eigen::VectorXd mass;                  // N lumped barycentric vertex areas, mm^2
  double meanEdgeLength = 0.0;           // h, mm

  // geometry snapshot, immutable after construction
  Eigen::MatrixXd vertices;
  Eigen::MatrixXi faces;
  Eigen::MatrixXd faceNormals; // F x 3, unit
  Eigen::VectorXd faceAreas;   // F

  int vertexCount() const { return static_cast<int>(vertices.rows()); }
};

// Requires an edge-manifold mesh with no zero-area faces; reports the
// offending face or edge otherwise.
DiscreteOperators buildOperators(const Mesh& mesh);

} // namespace gpreg
