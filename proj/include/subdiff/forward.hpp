#pragma once

#include "subdiff/fracmath.hpp"
#include "subdiff/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace subdiff {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Source term, initial datum and Neumann flux of the forward problem.
/// Empty handles stand for zero. The flux receives the point, the outward
/// edge normal and the time.
struct ForwardData {
  std::function<double(const Point2&, double)> f;
  std::function<double(const Point2&)> u0;
  std::function<double(const Point2&, const Point2&, double)> g;
};

/// Nodal values per time level (one column per level).
class SpaceTimeField {
public:
  SpaceTimeField(std::shared_ptr<const Mesh> mesh, TimeGrid grid, Eigen::MatrixXd values);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const TimeGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd level(std::size_t i) const { return values_.col(static_cast<Eigen::Index>(i)); }

private:
  std::shared_ptr<const Mesh> mesh_;
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

/// Boundary samples of a scalar field: one row per boundary node (in
/// counterclockwise order), one column per time level. Carries its own copy
/// of the boundary polygon so it can be integrated without the mesh.
class BoundaryTrace {
public:
  BoundaryTrace(TimeGrid grid, std::vector<Point2> points, Eigen::MatrixXd values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Point2>& points() const { return points_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t n_nodes() const { return points_.size(); }
  /// Outward unit normal and length of the edge from node i to node i+1.
  Point2 edge_normal(std::size_t i) const;
  double edge_length(std::size_t i) const;
  /// Half the length of the two edges adjacent to node i.
  double node_weight(std::size_t i) const;
  /// L1 norm over the boundary and [0, T].
  double l1_norm() const;

  BoundaryTrace operator-(const BoundaryTrace& other) const;
  BoundaryTrace scaled(double factor) const;

private:
  TimeGrid grid_;
  std::vector<Point2> points_;
  Eigen::MatrixXd values_;
};

/// Conductivity per triangle from the mesh tags.
std::vector<double> element_conductivity(const Mesh& mesh, const InclusionSet& inclusions);

SparseMatrix assemble_mass(const Mesh& mesh);
SparseMatrix assemble_stiffness(const Mesh& mesh, const std::vector<double>& conductivity);
/// Load vector of f(., t) (7-point rule) plus the Neumann flux g(., ., t)
/// (2-point Gauss per boundary edge).
Eigen::VectorXd assemble_load(const Mesh& mesh, const ForwardData& data, double t);
Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(const Point2&)>& u);

/// P1 Galerkin in space, L1 scheme in time, conductivity gamma0 outside and
/// gamma_l inside each tagged inclusion.
SpaceTimeField solve_subdiffusion(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                  const InclusionSet& inclusions, const ForwardData& data,
                                  const TimeGrid& grid);

/// Same scheme with the homogeneous conductivity gamma0.
SpaceTimeField solve_background(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                double gamma0, const ForwardData& data, const TimeGrid& grid);

BoundaryTrace boundary_restrict(const SpaceTimeField& field);

/// Result of add_noise: the noisy trace and the drawn relative level.
struct NoisyTrace {
  BoundaryTrace trace;
  double level = 0.0;
};

/// Gaussian nodal noise rescaled so that |zeta|_1 / |u|_1 = |delta| with
/// delta ~ N(0, sigma^2).
NoisyTrace add_noise(const BoundaryTrace& trace, double sigma, std::uint64_t seed);

/// Seed for background j derived from a run seed.
std::uint64_t background_seed(std::uint64_t seed, std::size_t j);

/// Boundary traces of u and U for a family of backgrounds.
struct TracePairs {
  std::vector<BoundaryTrace> u;
  std::vector<BoundaryTrace> U;

  std::size_t size() const { return u.size(); }
  /// u - U, with noise on u drawn from background_seed(seed, j) when sigma > 0.
  std::vector<BoundaryTrace> differences(double sigma = 0.0, std::uint64_t seed = 0) const;
};

void write_field_csv(std::ostream& out, const SpaceTimeField& field);
void write_trace_csv(std::ostream& out, const BoundaryTrace& trace);

}  // namespace subdiff
