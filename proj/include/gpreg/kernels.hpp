#pragma once

#include "gpreg/geodesics.hpp"
#include "gpreg/mesh.hpp"

#include <string>
#include <vector>

namespace gpreg {

enum class KernelFamily { SquaredExponential, BSpline };
enum class Metric { Euclidean, Geodesic };

struct KernelLevel {
  double sigma; // lengthscale (SE) or support width (B-spline), mm
  double scale; // variance weight s
};

// Declarative description of a (possibly multiscale) scalar kernel. The full
// matrix-valued kernel is this scalar times the 3x3 identity, so every
// operation downstream works on the scalar form. Geodesic specs reference an
// externally owned distance field that must outlive the spec.
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  Metric metric = Metric::Euclidean;
  std::vector<KernelLevel> levels = {{25.0, 1.0}};
  const GeodesicField* geodesics = nullptr;

  void validate() const;
  double totalScale() const;
  std::string describe() const;
};

// Cubic B-spline bump: 2/3 - |x|^2 + |x|^3/2 on [0,1), (2-|x|)^3/6 on [1,2),
// zero beyond.
double evalBSplineScalar(double x);

// sum_{k in Z} b3(u - k) * b3(v - k); zero exactly when |u - v| >= 4.
double bsplineAxisSum(double u, double v);

// Tensor-product B-spline lattice kernel with support width sigma:
// sum over integer shifts of zeta(xi/sigma - k) * zeta(xj/sigma - k) with
// zeta(x) = b3(x1) b3(x2) b3(x3). The shift sum factorizes per axis.
double evalBSplineKernel(const Vec3& xi, const Vec3& xj, double sigma);

double evalKernel(const KernelSpec& spec, int i, int j, const Eigen::MatrixXd& positions);
double evalKernel(const KernelSpec& spec, int i, int j, const Mesh& mesh);

struct GramMatrix {
  Eigen::MatrixXd values; // symmetric
  std::vector<int> vertexIds;
};

// Symmetric Gram matrix over the vertex subset (all vertices when the subset
// is empty). Rows are filled in parallel, then mirrored so the result is
// exactly symmetric. For SE families the diagonal is verified against the
// total scale.
GramMatrix assembleGram(const KernelSpec& spec, const Eigen::MatrixXd& positions,
                        const std::vector<int>& subset);
GramMatrix assembleGram(const KernelSpec& spec, const Mesh& mesh, const std::vector<int>& subset);

// Rectangular kernel matrix K(rows, cols); empty rows means all vertices.
Eigen::MatrixXd crossKernelMatrix(const KernelSpec& spec, const Eigen::MatrixXd& positions,
                                  const std::vector<int>& rows, const std::vector<int>& cols);

// Multiscale expansion: sigma_n = ratio * sigma_{n-1}, s_n = ratio * s_{n-1}
// starting from the base spec's first level.
KernelSpec makeMultiscale(const KernelSpec& base, int levelCount, double ratio = 2.0);

// Key = value config: family, metric, sigma, scale, levels, level_ratio.
// `#` comments ignored.
KernelSpec parseKernelConfig(const std::string& path);
KernelSpec parseKernelConfigText(const std::string& text, const std::string& origin = "<config>");

} // namespace gpreg
