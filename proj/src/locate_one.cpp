#include "subdiff/locate_one.hpp"

#include "subdiff/errors.hpp"

#include <array>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace subdiff {

ProbePlane make_probe_plane(int j, const Vec<3>& a_j, const Vec<3>& a_3, double offset,
                            double half_width) {
  const Vec<3> n = a_j.cross(a_3);
  if (n.norm() < 1e-12 * a_j.norm() * a_3.norm()) {
    throw std::invalid_argument("make_probe_plane: a_j is parallel to a_3");
  }
  ProbePlane p;
  p.j = j;
  p.direction = a_j;
  p.e1 = a_j.normalized();
  p.e2 = (a_3 - a_3.dot(p.e1) * p.e1).normalized();
  p.origin = offset * n.normalized();
  p.lo = -half_width;
  p.hi = half_width;
  return p;
}

std::vector<ProbeSegment> default_segments(double offset) {
  return {ProbeSegment{0, Vec<2>(1.0, 0.0), Vec<2>(0.0, offset), -1.0, 1.0},
          ProbeSegment{1, Vec<2>(0.0, 1.0), Vec<2>(offset, 0.0), -1.0, 1.0}};
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisect: tol must be positive");
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw ReconstructionError("no sign change on the probe segment");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Vec<2> root_on_segment(const ProbeSegment& segment, const Probe<2>& probe, double tol) {
  const double scale = segment.direction.norm();
  const double s = bisect([&](double s) { return probe(segment.at(s), segment.j); },
                          segment.s_lo, segment.s_hi, tol / scale);
  return segment.at(s);
}

Vec<3> root_on_plane(const ProbePlane& plane, const Probe<3>& probe, double tol) {
  auto inner = [&](double s) {
    return bisect([&](double r) { return probe(plane.at(s, r), 2); }, plane.lo, plane.hi,
                  0.25 * tol);
  };
  const double s = bisect(
      [&](double s) { return probe(plane.at(s, inner(s)), plane.j); }, plane.lo, plane.hi, tol);
  return plane.at(s, inner(s));
}

Reconstruction1<2> intersect(const Vec<2>& P1, const Vec<2>& P2, const ProbeSegment& s1,
                             const ProbeSegment& s2) {
  Eigen::Matrix2d A;
  A.row(0) = s1.direction.transpose();
  A.row(1) = s2.direction.transpose();
  if (std::abs(A.determinant()) < 1e-12 * s1.direction.norm() * s2.direction.norm()) {
    throw ReconstructionError("intersect: probe directions are parallel");
  }
  const Vec<2> rhs(s1.direction.dot(P1), s2.direction.dot(P2));
  Reconstruction1<2> out;
  out.P = A.partialPivLu().solve(rhs);
  out.roots = {P1, P2};
  out.rho0 = 0.0;
  return out;
}

Reconstruction1<3> intersect(const Vec<3>& P1, const Vec<3>& P2, const ProbePlane& p1,
                             const ProbePlane& p2) {
  const Vec<3> d1 = p1.normal();
  const Vec<3> d2 = p2.normal();
  const double b = d1.dot(d2);
  const double denom = 1.0 - b * b;
  if (denom < 1e-14) throw ReconstructionError("intersect: probe axes are parallel");
  const Vec<3> w = P1 - P2;
  const double s = (b * d2.dot(w) - d1.dot(w)) / denom;
  const double r = (d2.dot(w) - b * d1.dot(w)) / denom;
  const Vec<3> c1 = P1 + s * d1;
  const Vec<3> c2 = P2 + r * d2;
  Reconstruction1<3> out;
  out.P = 0.5 * (c1 + c2);
  out.rho0 = 0.5 * (c1 - c2).norm();
  out.roots = {P1, P2};
  return out;
}

Reconstruction1<2> locate_one_inclusion(const Probe<2>& probe,
                                        std::span<const ProbeSegment> segments, double tol) {
  if (segments.size() != 2) throw std::invalid_argument("locate_one: two segments expected");
  const Vec<2> P1 = root_on_segment(segments[0], probe, tol);
  const Vec<2> P2 = root_on_segment(segments[1], probe, tol);
  return intersect(P1, P2, segments[0], segments[1]);
}

Reconstruction1<3> locate_one_inclusion(const Probe<3>& probe,
                                        std::span<const ProbePlane> planes, double tol) {
  if (planes.size() != 2) throw std::invalid_argument("locate_one: two planes expected");
  const Vec<3> P1 = root_on_plane(planes[0], probe, tol);
  const Vec<3> P2 = root_on_plane(planes[1], probe, tol);
  return intersect(P1, P2, planes[0], planes[1]);
}

template <int Dim>
SyntheticProbe<Dim>::SyntheticProbe(PointInclusion<Dim> inclusion, double gamma0,
                                    std::vector<Vec<Dim>> directions,
                                    std::shared_ptr<const GreenCoeffs> coeffs, int N,
                                    TimeGrid grid)
    : inclusion_(std::move(inclusion)),
      gamma0_(gamma0),
      directions_(std::move(directions)),
      coeffs_(std::move(coeffs)),
      N_(N),
      grid_(grid) {
  const double vol = Dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
  tensor_ = polarization_disk(Dim, gamma0_, inclusion_.gamma, vol);
}

template <int Dim>
double SyntheticProbe<Dim>::operator()(const Vec<Dim>& P, int background) const {
  if (background < 0 || static_cast<std::size_t>(background) >= directions_.size()) {
    throw std::out_of_range("SyntheticProbe: unknown background " + std::to_string(background));
  }
  const ApproxFundamental<Dim> psi(coeffs_, N_, SourcePoint<Dim>{P, 0.0}, gamma0_);
  const double T = grid_.final_time();
  std::vector<std::vector<Vec<Dim>>> gu(1), gp(1);
  for (std::size_t k = 0; k < grid_.n_nodes(); ++k) {
    gu[0].push_back(directions_[background]);
    gp[0].push_back(psi.grad_or_zero(inclusion_.center, T - grid_.node(k)));
  }
  const std::array<PointInclusion<Dim>, 1> inc{inclusion_};
  const std::array<Eigen::MatrixXd, 1> tensors{tensor_};
  return leading_term<Dim>(inc, gamma0_, tensors, gu, gp, grid_);
}

template class SyntheticProbe<2>;
template class SyntheticProbe<3>;

TracePairs linear_background_traces(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                    const InclusionSet& inclusions,
                                    std::span<const Vec<2>> directions, const TimeGrid& grid,
                                    Execution exec) {
  const int n = static_cast<int>(directions.size());
  std::vector<std::optional<BoundaryTrace>> u(directions.size()), U(directions.size());
  const double gamma0 = inclusions.gamma0();
  auto solve = [&](int j) {
    const Vec<2> a = directions[j];
    ForwardData data;
    data.u0 = [a](const Point2& x) { return a.dot(x); };
    data.g = [a, gamma0](const Point2&, const Point2& n, double) { return gamma0 * a.dot(n); };
    u[j] = boundary_restrict(solve_subdiffusion(mesh, alpha, inclusions, data, grid));
    U[j] = boundary_restrict(solve_background(mesh, alpha, gamma0, data, grid));
  };
  if (exec == Execution::parallel) {
    std::exception_ptr failure;
#pragma omp parallel for
    for (int j = 0; j < n; ++j) {
      try {
        solve(j);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int j = 0; j < n; ++j) solve(j);
  }
  TracePairs out;
  for (int j = 0; j < n; ++j) {
    out.u.push_back(std::move(*u[j]));
    out.U.push_back(std::move(*U[j]));
  }
  return out;
}

TraceProbe::TraceProbe(std::vector<BoundaryTrace> diffs, std::shared_ptr<const GreenCoeffs> coeffs,
                       int N, double gamma0)
    : diffs_(std::move(diffs)), coeffs_(std::move(coeffs)), N_(N), gamma0_(gamma0) {}

double TraceProbe::operator()(const Vec<2>& P, int background) const {
  if (background < 0 || static_cast<std::size_t>(background) >= diffs_.size()) {
    throw std::out_of_range("TraceProbe: unknown background " + std::to_string(background));
  }
  const auto& diff = diffs_[background];
  const auto phi = time_reversed(
      ApproxFundamental<2>(coeffs_, N_, SourcePoint<2>{P, 0.0}, gamma0_), diff.grid().final_time());
  return measurement_boundary(diff, phi, gamma0_).value;
}

void write_locate_one_csv(std::ostream& out, std::span<const LocateOneRow> rows) {
  out.precision(10);
  out << "z1,z2,eps,P1,P2,error,sigma,seed\n";
  for (const auto& r : rows) {
    out << r.truth.x() << ',' << r.truth.y() << ',' << r.eps << ',' << r.recovered.x() << ','
        << r.recovered.y() << ',' << (r.recovered - r.truth).norm() << ',' << r.sigma << ','
        << r.seed << '\n';
  }
}

}  // namespace subdiff
