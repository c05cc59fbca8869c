#pragma once

#include "subdiff/errors.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <vector>

namespace subdiff {

using Point2 = Eigen::Vector2d;

enum class Shape { disk, ellipse };

/// One inclusion A = eps B + z. For an ellipse with aspect ratio rho the
/// semi-axes are eps sqrt(rho) along x and eps / sqrt(rho) along y.
struct Inclusion {
  Point2 center = Point2::Zero();
  double eps = 0.05;
  Shape shape = Shape::disk;
  double aspect = 1.0;
  double gamma = 50.0;

  double semi_x() const;
  double semi_y() const;
  bool contains(const Point2& x) const;
  /// Point on the boundary at parameter angle theta.
  Point2 boundary_point(double theta) const;
  /// Lower bound for the distance from x to the inclusion (0 inside).
  double distance_bound(const Point2& x) const;
  double area() const;
  double perimeter() const;
};

/// Inclusions in the unit disk with a background conductivity gamma0.
class InclusionSet {
public:
  InclusionSet() = default;
  InclusionSet(std::vector<Inclusion> items, double gamma0, double min_gap = 0.02);

  const std::vector<Inclusion>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Inclusion& operator[](std::size_t i) const { return items_[i]; }
  double gamma0() const { return gamma0_; }

private:
  std::vector<Inclusion> items_;
  double gamma0_ = 1.0;
};

/// Open unit disk; the only domain the mesher accepts.
struct DiskDomain {
  Point2 center = Point2::Zero();
  double radius = 1.0;
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  Point2 normal = Point2::Zero();
  double length = 0.0;
};

/// Conforming P1 triangulation. Tags are -1 for the background and the
/// inclusion index otherwise. Boundary nodes are listed counterclockwise and
/// boundary_edges[i] joins boundary_nodes[i] to boundary_nodes[i+1].
struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> tags;
  std::vector<int> boundary_nodes;
  std::vector<BoundaryEdge> boundary_edges;

  std::size_t n_vertices() const { return vertices.size(); }
  std::size_t n_triangles() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  double tagged_area(int tag) const;
  /// Longest edge of triangle t.
  double diameter(std::size_t t) const;
};

/// Graded mesh: element size <= h_near within 2 eps of each inclusion,
/// growing linearly to h_far. Inclusion boundaries are resolved by edges.
Mesh build_mesh(const DiskDomain& domain, const InclusionSet& inclusions, double h_far,
                double h_near);

/// Delaunay triangulation of a point cloud (counterclockwise triangles).
std::vector<std::array<int, 3>> delaunay(const std::vector<Point2>& points);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

}  // namespace subdiff
