#include "gpreg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gpreg {

void KernelSpec::validate() const {
  if (levels.empty()) throw std::runtime_error("kernel spec: at least one level required");
  for (const auto& l : levels) {
    if (!(l.sigma > 0)) throw std::runtime_error("kernel spec: sigma must be positive");
    if (!(l.scale > 0)) throw std::runtime_error("kernel spec: scale must be positive");
  }
  if (family == KernelFamily::BSpline && metric == Metric::Geodesic)
    throw std::runtime_error("kernel spec: B-spline kernels are defined on Euclidean coordinates");
  if (metric == Metric::Geodesic && geodesics == nullptr)
    throw std::runtime_error("kernel spec: geodesic metric requires a distance field");
}

double KernelSpec::totalScale() const {
  double s = 0;
  for (const auto& l : levels) s += l.scale;
  return s;
}

std::string KernelSpec::describe() const {
  std::ostringstream ss;
  ss << (metric == Metric::Euclidean ? "euclidean" : "geodesic") << '-'
     << (family == KernelFamily::SquaredExponential ? "se" : "bspline");
  ss << " levels=";
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i) ss << ',';
    ss << "(sigma=" << levels[i].sigma << ",s=" << levels[i].scale << ')';
  }
  return ss.str();
}

double evalBSplineScalar(double x) {
  double a = std::abs(x);
  if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  if (a < 2.0) {
    double b = 2.0 - a;
    return b * b * b / 6.0;
  }
  return 0.0;
}

double bsplineAxisSum(double u, double v) {
  if (std::abs(u - v) >= 4.0) return 0.0; // disjoint supports
  double lo = std::max(u, v) - 2.0;
  double hi = std::min(u, v) + 2.0;
  double sum = 0.0;
  for (long k = static_cast<long>(std::floor(lo)) + 1; k < hi; ++k)
    sum += evalBSplineScalar(u - static_cast<double>(k)) *
           evalBSplineScalar(v - static_cast<double>(k));
  return sum;
}

double evalBSplineKernel(const Vec3& xi, const Vec3& xj, double sigma) {
  double value = 1.0;
  for (int c = 0; c < 3; ++c) {
    value *= bsplineAxisSum(xi[c] / sigma, xj[c] / sigma);
    if (value == 0.0) return 0.0;
  }
  return value;
}

double evalKernel(const KernelSpec& spec, int i, int j, const Eigen::MatrixXd& positions) {
  double value = 0.0;
  if (spec.family == KernelFamily::SquaredExponential) {
    double d;
    if (spec.metric == Metric::Geodesic) {
      d = spec.geodesics->distance(i, j);
    } else {
      d = (positions.row(i) - positions.row(j)).norm();
    }
    for (const auto& l : spec.levels)
      value += l.scale * std::exp(-d * d / (2.0 * l.sigma * l.sigma));
  } else {
    Vec3 xi = positions.row(i), xj = positions.row(j);
    for (const auto& l : spec.levels) value += l.scale * evalBSplineKernel(xi, xj, l.sigma);
  }
  return value;
}

double evalKernel(const KernelSpec& spec, int i, int j, const Mesh& mesh) {
  return evalKernel(spec, i, j, mesh.vertices);
}

GramMatrix assembleGram(const KernelSpec& spec, const Eigen::MatrixXd& positions,
                        const std::vector<int>& subset) {
  spec.validate();
  std::vector<int> ids = subset;
  if (ids.empty()) {
    ids.resize(positions.rows());
    std::iota(ids.begin(), ids.end(), 0);
  }
  const int m = static_cast<int>(ids.size());
  GramMatrix gram;
  gram.vertexIds = ids;
  gram.values.resize(m, m);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      gram.values(i, j) = evalKernel(spec, ids[i], ids[j], positions);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) gram.values(i, j) = gram.values(j, i);

  if (spec.family == KernelFamily::SquaredExponential) {
    double expect = spec.totalScale();
    for (int i = 0; i < m; ++i)
      if (std::abs(gram.values(i, i) - expect) > 1e-9 * expect)
        throw std::runtime_error("Gram diagonal deviates from total kernel scale");
  }
  return gram;
}

GramMatrix assembleGram(const KernelSpec& spec, const Mesh& mesh, const std::vector<int>& subset) {
  return assembleGram(spec, mesh.vertices, subset);
}

Eigen::MatrixXd crossKernelMatrix(const KernelSpec& spec, const Eigen::MatrixXd& positions,
                                  const std::vector<int>& rows, const std::vector<int>& cols) {
  spec.validate();
  std::vector<int> r = rows;
  if (r.empty()) {
    r.resize(positions.rows());
    std::iota(r.begin(), r.end(), 0);
  }
  Eigen::MatrixXd out(static_cast<int>(r.size()), static_cast<int>(cols.size()));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < static_cast<int>(r.size()); ++i)
    for (int j = 0; j < static_cast<int>(cols.size()); ++j)
      out(i, j) = evalKernel(spec, r[i], cols[j], positions);
  return out;
}

KernelSpec makeMultiscale(const KernelSpec& base, int levelCount, double ratio) {
  if (levelCount < 1) throw std::runtime_error("makeMultiscale: levelCount must be >= 1");
  KernelSpec spec = base;
  spec.levels.resize(1);
  for (int l = 1; l < levelCount; ++l)
    spec.levels.push_back({spec.levels.back().sigma * ratio, spec.levels.back().scale * ratio});
  return spec;
}

KernelSpec parseKernelConfigText(const std::string& text, const std::string& origin) {
  KernelSpec spec;
  spec.levels.clear();
  double sigma = 0, scale = 1, ratio = 2;
  int levels = 1;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::istringstream ws(line);
      std::string t;
      if (ws >> t)
        throw std::runtime_error(origin + ":" + std::to_string(lineNo) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "family") {
      if (value == "squared_exponential" || value == "se")
        spec.family = KernelFamily::SquaredExponential;
      else if (value == "bspline")
        spec.family = KernelFamily::BSpline;
      else
        throw std::runtime_error(origin + ": unknown family '" + value + "'");
    } else if (key == "metric") {
      if (value == "euclidean") spec.metric = Metric::Euclidean;
      else if (value == "geodesic") spec.metric = Metric::Geodesic;
      else throw std::runtime_error(origin + ": unknown metric '" + value + "'");
    } else if (key == "sigma") {
      sigma = std::stod(value);
    } else if (key == "scale") {
      scale = std::stod(value);
    } else if (key == "levels") {
      levels = std::stoi(value);
    } else if (key == "level_ratio") {
      ratio = std::stod(value);
    } else {
      throw std::runtime_error(origin + ": unknown key '" + key + "'");
    }
  }
  if (!(sigma > 0)) throw std::runtime_error(origin + ": sigma must be set and positive");
  spec.levels = {{sigma, scale}};
  if (levels > 1) spec = makeMultiscale(spec, levels, ratio);
  return spec;
}

KernelSpec parseKernelConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parseKernelConfigText(buf.str(), path);
}

} // namespace gpreg
