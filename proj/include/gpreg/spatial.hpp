#pragma once

#include "gpreg/mesh.hpp"

#include <vector>

namespace gpreg {

// Exact closest point on triangle (a,b,c) to p; bary receives barycentric
// coordinates of the result.
Vec3 closestPointOnTriangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p,
                            Vec3* bary = nullptr);

// Axis-aligned BVH over mesh faces for exact closest-point-on-surface
// queries. Immutable after construction; queries are const and safe to run
// concurrently. Holds a snapshot of the geometry so the source mesh may go
// out of scope.
class AabbTree {
public:
  explicit AabbTree(const Mesh& mesh);

  struct Hit {
    Vec3 point;
    int face = -1;
    Vec3 bary = Vec3::Zero();
    double dist2 = 0.0;
  };

  Hit nearest(const Vec3& query) const;
  int faceCount() const { return static_cast<int>(faces_.rows()); }

private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1; // internal children, or
    int start = 0, count = 0;  // leaf face range in order_
  };

  int build(int start, int count);
  void search(int node, const Vec3& q, Hit& best) const;
  double boxDist2(const Node& n, const Vec3& q) const;

  Eigen::MatrixXd vertices_;
  Eigen::MatrixXi faces_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
};

// Exact nearest-vertex queries; ties broken toward the lowest vertex index.
class KdTree3 {
public:
  explicit KdTree3(const Eigen::MatrixXd& points);

  int nearest(const Vec3& query) const;

private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(int start, int count, int depth);
  void search(int node, const Vec3& q, int& bestIdx, double& bestD2) const;

  Eigen::MatrixXd points_;
  std::vector<Node> nodes_;
  std::vector<int> perm_;
  int root_ = -1;
};

struct ClosestPoint {
  Vec3 point;
  int face = -1;
  Vec3 normal = Vec3::UnitZ();
  double distance = 0.0;
};

// Exact closest point on the triangle soup, with the normal interpolated
// from vertex normals at the hit's barycentric coordinates.
ClosestPoint nearestPointOnSurface(const Mesh& mesh, const AabbTree& tree, const Vec3& query);

// Batch closest-point queries, parallel over queries.
std::vector<ClosestPoint> nearestPointsOnSurface(const Mesh& mesh, const AabbTree& tree,
                                                 const Eigen::MatrixXd& queries);

} // namespace gpreg
