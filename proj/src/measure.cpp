#include "subdiff/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace subdiff {

template <int Dim>
PhiHandle<Dim> time_reversed(ApproxFundamental<Dim> psi, double final_time) {
  auto shared = std::make_shared<const ApproxFundamental<Dim>>(std::move(psi));
  return {[shared, final_time](const Vec<Dim>& x, double t) {
            return shared->value_or_zero(x, final_time - t);
          },
          [shared, final_time](const Vec<Dim>& x, double t) {
            return shared->grad_or_zero(x, final_time - t);
          }};
}

template PhiHandle<2> time_reversed(ApproxFundamental<2>, double);
template PhiHandle<3> time_reversed(ApproxFundamental<3>, double);

PhiHandle2 time_reversed(ExactFundamental2 psi, double final_time) {
  auto shared = std::make_shared<const ExactFundamental2>(std::move(psi));
  return {[shared, final_time](const Vec<2>& x, double t) {
            return shared->value_or_zero(x, final_time - t);
          },
          [shared, final_time](const Vec<2>& x, double t) {
            return shared->grad_or_zero(x, final_time - t);
          }};
}

Eigen::MatrixXd polarization_disk(int d, double gamma0, double gamma_l, double volB) {
  if (d != 2 && d != 3) throw std::invalid_argument("polarization_disk: d must be 2 or 3");
  if (!(gamma0 > 0.0 && gamma_l > 0.0) || gamma_l == gamma0 || !(volB > 0.0)) {
    throw std::invalid_argument("polarization_disk: need distinct positive conductivities");
  }
  const double m = -(d * gamma0 * volB) / (gamma_l + (d - 1) * gamma0);
  return m * Eigen::MatrixXd::Identity(d, d);
}

namespace {

double trapezoid_weight(const TimeGrid& grid, std::size_t k) {
  return (k == 0 || k == grid.n_steps()) ? 0.5 * grid.step() : grid.step();
}

}  // namespace

Measurement measurement_boundary(const BoundaryTrace& diff, const PhiHandle2& phi,
                                 double gamma0) {
  if (!phi.grad) throw std::invalid_argument("measurement_boundary: Phi needs a gradient");
  const auto& grid = diff.grid();
  const std::size_t nb = diff.n_nodes();
  const auto& pts = diff.points();
  std::vector<Point2> normal(nb);
  std::vector<double> length(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    normal[i] = diff.edge_normal(i);
    length[i] = diff.edge_length(i);
  }
  double total = 0.0;
  std::vector<Point2> g(nb);
  for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    const auto col = diff.values().col(static_cast<Eigen::Index>(k));
    if (col.cwiseAbs().maxCoeff() == 0.0) continue;
    for (std::size_t i = 0; i < nb; ++i) g[i] = phi.grad(pts[i], t);
    double s = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t j = (i + 1) % nb;
      s += 0.5 * length[i] *
           (col(static_cast<Eigen::Index>(i)) * g[i].dot(normal[i]) +
            col(static_cast<Eigen::Index>(j)) * g[j].dot(normal[i]));
    }
    total += trapezoid_weight(grid, k) * s;
  }
  return {gamma0 * total, "", "", 0};
}

Measurement measurement_interior(const SpaceTimeField& u, const PhiHandle2& phi,
                                 const InclusionSet& inclusions) {
  if (!phi.grad) throw std::invalid_argument("measurement_interior: Phi needs a gradient");
  const Mesh& m = u.mesh();
  if (m.tags.size() != m.n_triangles()) {
    throw std::invalid_argument("measurement_interior: mesh carries no region tags");
  }
  if (inclusions.empty()) return {};
  const auto& grid = u.grid();
  const double gamma0 = inclusions.gamma0();

  struct Element {
    std::array<int, 3> v;
    std::array<Point2, 3> grad;
    std::array<Point2, 3> qp;
    double area;
    double contrast;
  };
  std::vector<Element> elems;
  for (std::size_t t = 0; t < m.n_triangles(); ++t) {
    const int tag = m.tags[t];
    if (tag < 0) continue;
    if (static_cast<std::size_t>(tag) >= inclusions.size()) {
      throw std::invalid_argument("measurement_interior: tag without inclusion");
    }
    const auto& tri = m.triangles[t];
    const Point2& a = m.vertices[tri[0]];
    const Point2& b = m.vertices[tri[1]];
    const Point2& c = m.vertices[tri[2]];
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    Element e;
    e.v = tri;
    e.grad = {Point2(b.y() - c.y(), c.x() - b.x()) / det,
              Point2(c.y() - a.y(), a.x() - c.x()) / det,
              Point2(a.y() - b.y(), b.x() - a.x()) / det};
    e.qp = {(4.0 * a + b + c) / 6.0, (a + 4.0 * b + c) / 6.0, (a + b + 4.0 * c) / 6.0};
    e.area = 0.5 * det;
    e.contrast = gamma0 - inclusions[tag].gamma;
    elems.push_back(e);
  }

  double total = 0.0;
  for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
    const double t = grid.node(k);
    // The initial level enters through its right limit.
    const auto col = u.values().col(static_cast<Eigen::Index>(std::max<std::size_t>(k, 1)));
    double s = 0.0;
    for (const auto& e : elems) {
      Point2 gu = Point2::Zero();
      for (int i = 0; i < 3; ++i) gu += col(e.v[i]) * e.grad[i];
      Point2 gphi = Point2::Zero();
      for (const auto& q : e.qp) gphi += phi.grad(q, t);
      s += e.contrast * e.area / 3.0 * gu.dot(gphi);
    }
    total += trapezoid_weight(grid, k) * s;
  }
  return {total, "", "", 0};
}

template <int Dim>
double leading_term(std::span<const PointInclusion<Dim>> inclusions, double gamma0,
                    std::span<const Eigen::MatrixXd> tensors,
                    const std::vector<std::vector<Vec<Dim>>>& grad_u,
                    const std::vector<std::vector<Vec<Dim>>>& grad_phi, const TimeGrid& grid) {
  const std::size_t m = inclusions.size();
  if (tensors.size() != m || grad_u.size() != m || grad_phi.size() != m) {
    throw std::invalid_argument("leading_term: one tensor and gradient series per inclusion");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    if (grad_u[l].size() != grid.n_nodes() || grad_phi[l].size() != grid.n_nodes()) {
      throw std::invalid_argument("leading_term: gradient series length must match the grid");
    }
    if (tensors[l].rows() != Dim || tensors[l].cols() != Dim) {
      throw std::invalid_argument("leading_term: tensor dimension mismatch");
    }
    const Eigen::Matrix<double, Dim, Dim> M = tensors[l];
    double integral = 0.0;
    for (std::size_t k = 0; k < grid.n_nodes(); ++k) {
      integral += trapezoid_weight(grid, k) * grad_u[l][k].dot(M * grad_phi[l][k]);
    }
    total += std::pow(inclusions[l].eps, Dim) * (gamma0 - inclusions[l].gamma) * integral;
  }
  return -total;
}

template double leading_term<2>(std::span<const PointInclusion<2>>, double,
                                std::span<const Eigen::MatrixXd>,
                                const std::vector<std::vector<Vec<2>>>&,
                                const std::vector<std::vector<Vec<2>>>&, const TimeGrid&);
template double leading_term<3>(std::span<const PointInclusion<3>>, double,
                                std::span<const Eigen::MatrixXd>,
                                const std::vector<std::vector<Vec<3>>>&,
                                const std::vector<std::vector<Vec<3>>>&, const TimeGrid&);

double leading_term(const InclusionSet& inclusions, std::span<const Eigen::MatrixXd> tensors,
                    const std::vector<std::vector<Vec<2>>>& grad_u,
                    const std::vector<std::vector<Vec<2>>>& grad_phi, const TimeGrid& grid) {
  std::vector<PointInclusion<2>> pts;
  for (const auto& a : inclusions.items()) pts.push_back({a.center, a.eps, a.gamma});
  return leading_term<2>(pts, inclusions.gamma0(), tensors, grad_u, grad_phi, grid);
}

std::vector<Eigen::MatrixXd> disk_tensors(const InclusionSet& inclusions) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& a : inclusions.items()) {
    out.push_back(polarization_disk(2, inclusions.gamma0(), a.gamma, std::numbers::pi));
  }
  return out;
}

void write_measurements_csv(std::ostream& out, std::span<const Measurement> rows) {
  out.precision(15);
  out << "background,test_function,seed,value\n";
  for (const auto& r : rows) {
    out << r.background << ',' << r.test_function << ',' << r.seed << ',' << r.value << '\n';
  }
}

}  // namespace subdiff
