#include "gpreg/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gpreg {

Vec3 closestPointOnTriangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p,
                            Vec3* bary) {
  // Ericson, Real-Time Collision Detection, 5.1.5
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    if (bary) *bary = Vec3(1, 0, 0);
    return a;
  }
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    if (bary) *bary = Vec3(0, 1, 0);
    return b;
  }
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    double v = d1 / (d1 - d3);
    if (bary) *bary = Vec3(1 - v, v, 0);
    return a + v * ab;
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    if (bary) *bary = Vec3(0, 0, 1);
    return c;
  }
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    double w = d2 / (d2 - d6);
    if (bary) *bary = Vec3(1 - w, 0, w);
    return a + w * ac;
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    if (bary) *bary = Vec3(0, 1 - w, w);
    return b + w * (c - b);
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  if (bary) *bary = Vec3(1 - v - w, v, w);
  return a + ab * v + ac * w;
}

AabbTree::AabbTree(const Mesh& mesh) : vertices_(mesh.vertices), faces_(mesh.faces) {
  if (faces_.rows() == 0) throw std::runtime_error("AabbTree requires at least one face");
  const int f = static_cast<int>(faces_.rows());
  order_.resize(f);
  std::iota(order_.begin(), order_.end(), 0);
  centroids_.resize(f);
  for (int i = 0; i < f; ++i)
    centroids_[i] = (vertices_.row(faces_(i, 0)) + vertices_.row(faces_(i, 1)) +
                     vertices_.row(faces_(i, 2))) / 3.0;
  nodes_.reserve(2 * f);
  build(0, f);
}

int AabbTree::build(int start, int count) {
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = start; i < start + count; ++i) {
    int face = order_[i];
    for (int k = 0; k < 3; ++k) {
      Vec3 v = vertices_.row(faces_(face, k));
      node.lo = node.lo.cwiseMin(v);
      node.hi = node.hi.cwiseMax(v);
    }
  }
  int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (count <= 4) {
    nodes_[idx].start = start;
    nodes_[idx].count = count;
    return idx;
  }
  Vec3 extent = node.hi - node.lo;
  int axis = 0;
  extent.maxCoeff(&axis);
  int mid = start + count / 2;
  std::nth_element(order_.begin() + start, order_.begin() + mid, order_.begin() + start + count,
                   [&](int a, int b) {
                     if (centroids_[a][axis] != centroids_[b][axis])
                       return centroids_[a][axis] < centroids_[b][axis];
                     return a < b;
                   });
  int left = build(start, mid - start);
  int right = build(mid, start + count - mid);
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

double AabbTree::boxDist2(const Node& n, const Vec3& q) const {
  Vec3 d = (n.lo - q).cwiseMax(0.0).cwiseMax(q - n.hi);
  return d.squaredNorm();
}

void AabbTree::search(int nodeIdx, const Vec3& q, Hit& best) const {
  const Node& node = nodes_[nodeIdx];
  if (node.left < 0) {
    for (int i = node.start; i < node.start + node.count; ++i) {
      int face = order_[i];
      Vec3 bary;
      Vec3 p = closestPointOnTriangle(vertices_.row(faces_(face, 0)),
                                      vertices_.row(faces_(face, 1)),
                                      vertices_.row(faces_(face, 2)), q, &bary);
      double d2 = (p - q).squaredNorm();
      if (d2 < best.dist2 || (d2 == best.dist2 && face < best.face)) {
        best = {p, face, bary, d2};
      }
    }
    return;
  }
  double dl = boxDist2(nodes_[node.left], q);
  double dr = boxDist2(nodes_[node.right], q);
  int first = node.left, second = node.right;
  if (dr < dl) {
    std::swap(first, second);
    std::swap(dl, dr);
  }
  if (dl <= best.dist2) search(first, q, best);
  if (dr <= best.dist2) search(second, q, best);
}

AabbTree::Hit AabbTree::nearest(const Vec3& query) const {
  Hit best;
  best.dist2 = std::numeric_limits<double>::infinity();
  best.face = std::numeric_limits<int>::max();
  search(0, query, best);
  return best;
}

KdTree3::KdTree3(const Eigen::MatrixXd& points) : points_(points) {
  const int n = static_cast<int>(points_.rows());
  if (n == 0) throw std::runtime_error("KdTree3 requires at least one point");
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), 0);
  nodes_.reserve(n);
  root_ = build(0, n, 0);
}

int KdTree3::build(int start, int count, int depth) {
  if (count <= 0) return -1;
  int axis = depth % 3;
  int mid = start + count / 2;
  std::nth_element(perm_.begin() + start, perm_.begin() + mid, perm_.begin() + start + count,
                   [&](int a, int b) {
                     if (points_(a, axis) != points_(b, axis))
                       return points_(a, axis) < points_(b, axis);
                     return a < b;
                   });
  Node node;
  node.point = perm_[mid];
  node.axis = axis;
  int idx = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  int left = build(start, mid - start, depth + 1);
  int right = build(mid + 1, start + count - mid - 1, depth + 1);
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

void KdTree3::search(int nodeIdx, const Vec3& q, int& bestIdx, double& bestD2) const {
  if (nodeIdx < 0) return;
  const Node& node = nodes_[nodeIdx];
  Vec3 p = points_.row(node.point);
  double d2 = (p - q).squaredNorm();
  if (d2 < bestD2 || (d2 == bestD2 && node.point < bestIdx)) {
    bestD2 = d2;
    bestIdx = node.point;
  }
  double delta = q[node.axis] - points_(node.point, node.axis);
  int near = delta < 0 ? node.left : node.right;
  int far = delta < 0 ? node.right : node.left;
  search(near, q, bestIdx, bestD2);
  if (delta * delta <= bestD2) search(far, q, bestIdx, bestD2);
}

int KdTree3::nearest(const Vec3& query) const {
  int bestIdx = std::numeric_limits<int>::max();
  double bestD2 = std::numeric_limits<double>::infinity();
  search(root_, query, bestIdx, bestD2);
  return bestIdx;
}

ClosestPoint nearestPointOnSurface(const Mesh& mesh, const AabbTree& tree, const Vec3& query) {
  auto hit = tree.nearest(query);
  ClosestPoint cp;
  cp.point = hit.point;
  cp.face = hit.face;
  cp.distance = std::sqrt(hit.dist2);
  Vec3 n = hit.bary[0] * mesh.vertexNormals.row(mesh.faces(hit.face, 0)) +
           hit.bary[1] * mesh.vertexNormals.row(mesh.faces(hit.face, 1)) +
           hit.bary[2] * mesh.vertexNormals.row(mesh.faces(hit.face, 2));
  double len = n.norm();
  cp.normal = len > 0 ? Vec3(n / len) : Vec3::UnitZ();
  return cp;
}

std::vector<ClosestPoint> nearestPointsOnSurface(const Mesh& mesh, const AabbTree& tree,
                                                 const Eigen::MatrixXd& queries) {
  std::vector<ClosestPoint> out(queries.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (int i = 0; i < queries.rows(); ++i)
    out[i] = nearestPointOnSurface(mesh, tree, queries.row(i));
  return out;
}

} // namespace gpreg
