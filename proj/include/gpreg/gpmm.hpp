#pragma once

#include "gpreg/kernels.hpp"
#include "gpreg/mesh.hpp"

#include <Eigen/Cholesky>
#include <string>
#include <vector>

namespace gpreg {

// Truncated Karhunen-Loeve model of template-vertex displacements.
//
// The scalar kernel times the 3x3 identity block-diagonalizes the 3N x 3N
// operator, so the N-point scalar eigenproblem is solved once and each
// scalar eigenpair expands to three axis-aligned vector eigenpairs sharing
// its eigenvalue. Displacement vectors are stored interleaved: entry
// 3*v + c is component c of vertex v.
//
// Normalization: eigenvalues estimate the spectrum of the N x N Gram matrix
// ((N/m) times the subset eigenvalues); basis column i is sqrt(lambda_i)
// times the Nystrom-extended eigenvector, so basis * basis^T reproduces
// Gram (x) I3 exactly at full rank.
struct LowRankGP {
  Eigen::VectorXd eigenvalues; // r, nonincreasing, all > 0
  Eigen::MatrixXd basis;       // 3N x r
  Eigen::VectorXd mean;        // 3N; zero for prior models

  Eigen::MatrixXd referenceVertices; // N x 3
  Eigen::MatrixXi referenceFaces;
  std::uint64_t referenceMeshHash = 0;

  std::vector<int> nystromIndices;
  Eigen::VectorXd scalarValues; // q Gram-spectrum estimates
  Eigen::MatrixXd scalarBasis;  // N x q extended eigenvectors
  double truncationTail = 0.0;  // sum of retained-but-dropped positive eigenvalues
  int discardedNonpositive = 0; // eigenvalues <= tolerance, dropped
  int discardedNegative = 0;    // meaningfully negative (< -1e-8 * max), dropped

  int rank() const { return static_cast<int>(eigenvalues.size()); }
  int pointCount() const { return static_cast<int>(referenceVertices.rows()); }
};

// Farthest-point subset of size m, seeded at the lowest vertex index, using
// the geodesic metric when the field covers every vertex and the Euclidean
// metric otherwise. Deterministic; ties broken toward the lowest index.
std::vector<int> selectNystromSubset(const Eigen::MatrixXd& positions, int m,
                                     const GeodesicField* geodesics = nullptr);

// Low-rank model from a Nystrom eigendecomposition on an m-point subset.
// Requested rank counts vector eigenpairs; fewer are returned (with a stored
// warning count) when the subset yields fewer positive eigenvalues.
LowRankGP buildLowRank(const KernelSpec& spec, const Mesh& mesh, int rank, int nystromSize);
LowRankGP buildLowRankOnSubset(const KernelSpec& spec, const Mesh& mesh, int rank,
                               const std::vector<int>& subset);

Eigen::VectorXd displacementField(const LowRankGP& model, const Eigen::VectorXd& alpha);

// Deterministic standard-normal coefficients for a seed.
Eigen::VectorXd sampleCoefficients(const LowRankGP& model, std::uint64_t seed);

Mesh sampleShape(const LowRankGP& model, const Eigen::VectorXd& alpha);
Mesh sampleShape(const LowRankGP& model, std::uint64_t seed);

// Landmark-conditioned model. The posterior mean is evaluated exactly from
// the predictive equations; the posterior covariance operator is re-expanded
// to a low-rank basis by running the Nystrom construction on the posterior
// kernel over the prior's subset.
struct PosteriorModel {
  LowRankGP model; // usable in place of the prior (mean + basis)
  std::vector<int> landmarkIndices;
  Eigen::MatrixXd observedDisplacements; // H x 3
  double noiseVariance = 0.0;
  KernelSpec spec;
  Eigen::LDLT<Eigen::MatrixXd> trainFactor; // K_H + sigma_n^2 I
  Eigen::MatrixXd trainSolve;               // (K_H + sigma_n^2 I)^{-1} Y

  // Exact posterior mean / variance at a vertex (not via the low-rank basis).
  Vec3 meanAt(int vertex) const;
  double posteriorKernelValue(int vi, int vj) const;
};

// Default noise variance relative to the prior variance when the caller
// passes no explicit value.
double defaultNoiseVariance(const KernelSpec& spec);

PosteriorModel conditionOnLandmarks(const LowRankGP& model, const KernelSpec& spec,
                                    const std::vector<int>& landmarkIndices,
                                    const Eigen::MatrixXd& observedDisplacements,
                                    double noiseVariance);

// Versioned binary container: eigenvalues, scalar basis, mean, subset,
// reference mesh hash and kernel description.
void saveModel(const LowRankGP& model, const std::string& path);
LowRankGP loadModel(const std::string& path);

} // namespace gpreg
