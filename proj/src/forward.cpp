#include "subdiff/forward.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

namespace subdiff {

SpaceTimeField::SpaceTimeField(std::shared_ptr<const Mesh> mesh, TimeGrid grid,
                               Eigen::MatrixXd values)
    : mesh_(std::move(mesh)), grid_(grid), values_(std::move(values)) {
  if (!mesh_ || values_.rows() != static_cast<Eigen::Index>(mesh_->n_vertices()) ||
      values_.cols() != static_cast<Eigen::Index>(grid_.n_nodes())) {
    throw std::invalid_argument("SpaceTimeField: shape does not match mesh and grid");
  }
}

BoundaryTrace::BoundaryTrace(TimeGrid grid, std::vector<Point2> points, Eigen::MatrixXd values)
    : grid_(grid), points_(std::move(points)), values_(std::move(values)) {
  if (values_.rows() != static_cast<Eigen::Index>(points_.size()) ||
      values_.cols() != static_cast<Eigen::Index>(grid_.n_nodes())) {
    throw std::invalid_argument("BoundaryTrace: shape does not match nodes and grid");
  }
}

Point2 BoundaryTrace::edge_normal(std::size_t i) const {
  const Point2 d = points_[(i + 1) % points_.size()] - points_[i];
  return Point2(d.y(), -d.x()) / d.norm();
}

double BoundaryTrace::edge_length(std::size_t i) const {
  return (points_[(i + 1) % points_.size()] - points_[i]).norm();
}

double BoundaryTrace::node_weight(std::size_t i) const {
  const std::size_t n = points_.size();
  return 0.5 * (edge_length(i) + edge_length((i + n - 1) % n));
}

double BoundaryTrace::l1_norm() const {
  const double dt = grid_.step();
  double total = 0.0;
  for (Eigen::Index k = 0; k < values_.cols(); ++k) {
    const double wt = (k == 0 || k + 1 == values_.cols()) ? 0.5 * dt : dt;
    double s = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      s += node_weight(i) * std::abs(values_(static_cast<Eigen::Index>(i), k));
    }
    total += wt * s;
  }
  return total;
}

BoundaryTrace BoundaryTrace::operator-(const BoundaryTrace& other) const {
  if (!(grid_ == other.grid_) || points_.size() != other.points_.size()) {
    throw std::invalid_argument("BoundaryTrace: grid or node mismatch");
  }
  return BoundaryTrace(grid_, points_, values_ - other.values_);
}

BoundaryTrace BoundaryTrace::scaled(double factor) const {
  return BoundaryTrace(grid_, points_, values_ * factor);
}

std::vector<double> element_conductivity(const Mesh& mesh, const InclusionSet& inclusions) {
  std::vector<double> gamma(mesh.n_triangles(), inclusions.gamma0());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const int tag = mesh.tags[t];
    if (tag < 0) continue;
    if (static_cast<std::size_t>(tag) >= inclusions.size()) {
      throw std::invalid_argument("mesh tag " + std::to_string(tag) +
                                  " has no matching inclusion");
    }
    gamma[t] = inclusions[tag].gamma;
  }
  return gamma;
}

namespace {

struct Gradients {
  std::array<Point2, 3> grad;
  double area;
};

Gradients p1_gradients(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Point2& a = mesh.vertices[tri[0]];
  const Point2& b = mesh.vertices[tri[1]];
  const Point2& c = mesh.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  Gradients g;
  g.area = 0.5 * det;
  g.grad[0] = Point2(b.y() - c.y(), c.x() - b.x()) / det;
  g.grad[1] = Point2(c.y() - a.y(), a.x() - c.x()) / det;
  g.grad[2] = Point2(a.y() - b.y(), b.x() - a.x()) / det;
  return g;
}

// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
constexpr std::array<std::array<double, 4>, 7> kTri7 = {{
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.0597158717897698, 0.4701420641051151, 0.4701420641051151, 0.1323941527885062},
    {0.4701420641051151, 0.0597158717897698, 0.4701420641051151, 0.1323941527885062},
    {0.4701420641051151, 0.4701420641051151, 0.0597158717897698, 0.1323941527885062},
    {0.7974269853530873, 0.1012865073234563, 0.1012865073234563, 0.1259391805448271},
    {0.1012865073234563, 0.7974269853530873, 0.1012865073234563, 0.1259391805448271},
    {0.1012865073234563, 0.1012865073234563, 0.7974269853530873, 0.1259391805448271},
}};

SparseMatrix from_triplets(std::size_t n, const std::vector<Eigen::Triplet<double>>& trips) {
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace

SparseMatrix assemble_mass(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.n_triangles());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = mesh.triangle_area(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], a * (i == j ? 2.0 : 1.0) / 12.0);
    }
  }
  return from_triplets(mesh.n_vertices(), trips);
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const std::vector<double>& conductivity) {
  if (conductivity.size() != mesh.n_triangles()) {
    throw std::invalid_argument("assemble_stiffness: one conductivity per triangle expected");
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.n_triangles());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto g = p1_gradients(mesh, t);
    const double k = conductivity[t] * g.area;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], k * g.grad[i].dot(g.grad[j]));
    }
  }
  return from_triplets(mesh.n_vertices(), trips);
}

Eigen::VectorXd assemble_load(const Mesh& mesh, const ForwardData& data, double t) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_vertices()));
  if (data.f) {
    for (std::size_t e = 0; e < mesh.n_triangles(); ++e) {
      const auto& tri = mesh.triangles[e];
      const double area = mesh.triangle_area(e);
      for (const auto& q : kTri7) {
        const Point2 x = q[0] * mesh.vertices[tri[0]] + q[1] * mesh.vertices[tri[1]] +
                         q[2] * mesh.vertices[tri[2]];
        const double fx = data.f(x, t) * q[3] * area;
        for (int i = 0; i < 3; ++i) b(tri[i]) += fx * q[i];
      }
    }
  }
  if (data.g) {
    const double s = 0.5 / std::sqrt(3.0);
    for (const auto& edge : mesh.boundary_edges) {
      const Point2& a = mesh.vertices[edge.a];
      const Point2& c = mesh.vertices[edge.b];
      for (double xi : {0.5 - s, 0.5 + s}) {
        const Point2 x = (1.0 - xi) * a + xi * c;
        const double gx = 0.5 * edge.length * data.g(x, edge.normal, t);
        b(edge.a) += gx * (1.0 - xi);
        b(edge.b) += gx * xi;
      }
    }
  }
  return b;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(const Point2&)>& u) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_vertices()));
  if (!u) return v;
  for (std::size_t i = 0; i < mesh.n_vertices(); ++i) v(static_cast<Eigen::Index>(i)) = u(mesh.vertices[i]);
  return v;
}

namespace {

SpaceTimeField march(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                     const std::vector<double>& conductivity, const ForwardData& data,
                     const TimeGrid& grid) {
  const Mesh& m = *mesh;
  const SparseMatrix M = assemble_mass(m);
  const SparseMatrix K = assemble_stiffness(m, conductivity);
  const double a = alpha.value();
  const double c0 = std::pow(grid.step(), -a) / std::tgamma(2.0 - a);
  const SparseMatrix A = c0 * M + K;

  Eigen::SimplicialLDLT<SparseMatrix> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) {
    throw SolverError("forward solve: factorization failed (bad mesh or conductivity)");
  }

  const std::size_t n = grid.n_steps();
  const auto b = l1_weights(a, n);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(m.n_vertices()), static_cast<Eigen::Index>(n + 1));
  u.col(0) = interpolate(m, data.u0);
  Eigen::MatrixXd delta(u.rows(), static_cast<Eigen::Index>(n + 1));
  Eigen::VectorXd hist(u.rows());
  for (std::size_t k = 1; k <= n; ++k) {
    hist = u.col(static_cast<Eigen::Index>(k - 1));
    for (std::size_t j = 1; j < k; ++j) {
      hist -= b[j] * delta.col(static_cast<Eigen::Index>(k - j));
    }
    const Eigen::VectorXd rhs = c0 * (M * hist) + assemble_load(m, data, grid.node(k));
    u.col(static_cast<Eigen::Index>(k)) = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !u.col(static_cast<Eigen::Index>(k)).allFinite()) {
      throw SolverError("forward solve: linear solve failed at step " + std::to_string(k));
    }
    delta.col(static_cast<Eigen::Index>(k)) =
        u.col(static_cast<Eigen::Index>(k)) - u.col(static_cast<Eigen::Index>(k - 1));
  }
  return SpaceTimeField(std::move(mesh), grid, std::move(u));
}

}  // namespace

SpaceTimeField solve_subdiffusion(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                  const InclusionSet& inclusions, const ForwardData& data,
                                  const TimeGrid& grid) {
  if (!mesh) throw std::invalid_argument("solve_subdiffusion: null mesh");
  const auto gamma = element_conductivity(*mesh, inclusions);
  for (double g : gamma) {
    if (!(g > 0.0)) throw SolverError("solve_subdiffusion: conductivity must be positive");
  }
  return march(std::move(mesh), alpha, gamma, data, grid);
}

SpaceTimeField solve_background(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                double gamma0, const ForwardData& data, const TimeGrid& grid) {
  if (!mesh) throw std::invalid_argument("solve_background: null mesh");
  if (!(gamma0 > 0.0)) throw SolverError("solve_background: gamma0 must be positive");
  return march(mesh, alpha, std::vector<double>(mesh->n_triangles(), gamma0), data, grid);
}

BoundaryTrace boundary_restrict(const SpaceTimeField& field) {
  const Mesh& m = field.mesh();
  std::vector<Point2> pts;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(m.boundary_nodes.size()), field.values().cols());
  for (std::size_t i = 0; i < m.boundary_nodes.size(); ++i) {
    pts.push_back(m.vertices[m.boundary_nodes[i]]);
    v.row(static_cast<Eigen::Index>(i)) = field.values().row(m.boundary_nodes[i]);
  }
  return BoundaryTrace(field.grid(), std::move(pts), std::move(v));
}

NoisyTrace add_noise(const BoundaryTrace& trace, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return {trace, 0.0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double level = std::abs(sigma * normal(rng));
  Eigen::MatrixXd zeta(trace.values().rows(), trace.values().cols());
  for (Eigen::Index k = 0; k < zeta.cols(); ++k) {
    for (Eigen::Index i = 0; i < zeta.rows(); ++i) zeta(i, k) = normal(rng);
  }
  const BoundaryTrace z(trace.grid(), trace.points(), zeta);
  const double scale = level * trace.l1_norm() / z.l1_norm();
  return {BoundaryTrace(trace.grid(), trace.points(), trace.values() + scale * zeta), level};
}

std::uint64_t background_seed(std::uint64_t seed, std::size_t j) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(j + 1);
}

std::vector<BoundaryTrace> TracePairs::differences(double sigma, std::uint64_t seed) const {
  if (u.size() != U.size()) throw std::invalid_argument("TracePairs: size mismatch");
  std::vector<BoundaryTrace> out;
  out.reserve(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (sigma > 0.0) {
      out.push_back(add_noise(u[j], sigma, background_seed(seed, j)).trace - U[j]);
    } else {
      out.push_back(u[j] - U[j]);
    }
  }
  return out;
}

void write_field_csv(std::ostream& out, const SpaceTimeField& field) {
  out.precision(12);
  out << "node";
  for (std::size_t k = 0; k < field.grid().n_nodes(); ++k) out << ",t" << k;
  out << '\n';
  const auto& v = field.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < v.cols(); ++k) out << ',' << v(i, k);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& trace) {
  out.precision(12);
  out << "angle";
  for (std::size_t k = 0; k < trace.grid().n_nodes(); ++k) out << ",t" << k;
  out << '\n';
  const auto& v = trace.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const Point2& p = trace.points()[static_cast<std::size_t>(i)];
    out << std::atan2(p.y(), p.x());
    for (Eigen::Index k = 0; k < v.cols(); ++k) out << ',' << v(i, k);
    out << '\n';
  }
}

}  // namespace subdiff
