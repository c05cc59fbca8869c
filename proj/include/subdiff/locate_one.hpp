#pragma once

#include "subdiff/forward.hpp"
#include "subdiff/greenfn.hpp"
#include "subdiff/measure.hpp"
#include "subdiff/parallel.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace subdiff {

/// Sigma~_j = { origin + s a_j : s in [s_lo, s_hi] }, a line segment parallel
/// to the background direction a_j and outside the closed domain.
struct ProbeSegment {
  int j = 0;
  Vec<2> direction = Vec<2>(1.0, 0.0);
  Vec<2> origin = Vec<2>(0.0, 2.0);
  double s_lo = -1.0;
  double s_hi = 1.0;

  Vec<2> at(double s) const { return origin + s * direction; }
};

/// Planar rectangle { origin + s e1 + r e2 } used in 3D, with e1 along a_j
/// and e2 completing an in-plane frame that contains a_3.
struct ProbePlane {
  int j = 0;
  Vec<3> direction = Vec<3>(1.0, 0.0, 0.0);
  Vec<3> origin = Vec<3>(0.0, 2.0, 0.0);
  Vec<3> e1 = Vec<3>(1.0, 0.0, 0.0);
  Vec<3> e2 = Vec<3>(0.0, 0.0, 1.0);
  double lo = -1.0;
  double hi = 1.0;

  Vec<3> at(double s, double r) const { return origin + s * e1 + r * e2; }
  /// Axis direction a_j x a_3 of the line that carries the inclusion.
  Vec<3> normal() const { return e1.cross(e2).normalized(); }
};

/// Plane through the point at distance `offset` along a_j x a_3 with the
/// in-plane frame built from a_j and a_3.
ProbePlane make_probe_plane(int j, const Vec<3>& a_j, const Vec<3>& a_3, double offset = 2.0,
                            double half_width = 1.0);

/// Default probe segments: y = 2 with a_1 = (1,0) and x = 2 with a_2 = (0,1).
std::vector<ProbeSegment> default_segments(double offset = 2.0);

template <int Dim>
struct Reconstruction1 {
  Vec<Dim> P = Vec<Dim>::Zero();
  std::vector<Vec<Dim>> roots;
  double rho0 = 0.0;
};

/// I_Phi(U_j) for Phi = Psi_{(P,0),N}(., T - .); `background` indexes U_j.
template <int Dim>
using Probe = std::function<double(const Vec<Dim>& P, int background)>;

/// Bisection on [lo, hi] until the bracket is no wider than tol; returns
/// the midpoint of the final bracket.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Root of probe(., segment.j) along the segment.
Vec<2> root_on_segment(const ProbeSegment& segment, const Probe<2>& probe, double tol);

/// Root of the pair (probe(., j), probe(., 2)) on the plane by nested bisection.
Vec<3> root_on_plane(const ProbePlane& plane, const Probe<3>& probe, double tol);

/// Intersection of the lines through P_j perpendicular to a_j.
Reconstruction1<2> intersect(const Vec<2>& P1, const Vec<2>& P2, const ProbeSegment& s1,
                             const ProbeSegment& s2);

/// Midpoint of the common perpendicular of the axes through P_j along
/// a_j x a_3; rho0 is half their distance.
Reconstruction1<3> intersect(const Vec<3>& P1, const Vec<3>& P2, const ProbePlane& p1,
                             const ProbePlane& p2);

Reconstruction1<2> locate_one_inclusion(const Probe<2>& probe,
                                        std::span<const ProbeSegment> segments, double tol);
Reconstruction1<3> locate_one_inclusion(const Probe<3>& probe,
                                        std::span<const ProbePlane> planes, double tol);

/// Leading-order data I~_Phi for one disk or ball inclusion.
template <int Dim>
class SyntheticProbe {
public:
  SyntheticProbe(PointInclusion<Dim> inclusion, double gamma0, std::vector<Vec<Dim>> directions,
                 std::shared_ptr<const GreenCoeffs> coeffs, int N, TimeGrid grid);
  double operator()(const Vec<Dim>& P, int background) const;

private:
  PointInclusion<Dim> inclusion_;
  double gamma0_;
  std::vector<Vec<Dim>> directions_;
  std::shared_ptr<const GreenCoeffs> coeffs_;
  int N_;
  TimeGrid grid_;
  Eigen::MatrixXd tensor_;
};

extern template class SyntheticProbe<2>;
extern template class SyntheticProbe<3>;

/// Traces of u and U for the backgrounds U_j = a_j . x (u0 = U_j, flux gamma0 a_j . n).
TracePairs linear_background_traces(std::shared_ptr<const Mesh> mesh, FracOrder alpha,
                                    const InclusionSet& inclusions,
                                    std::span<const Vec<2>> directions, const TimeGrid& grid,
                                    Execution exec = Execution::parallel);

/// Measured I_Phi(U_j) from boundary traces of u_j - U_j (2D).
class TraceProbe {
public:
  TraceProbe(std::vector<BoundaryTrace> diffs, std::shared_ptr<const GreenCoeffs> coeffs,
             int N, double gamma0);
  double operator()(const Vec<2>& P, int background) const;

private:
  std::vector<BoundaryTrace> diffs_;
  std::shared_ptr<const GreenCoeffs> coeffs_;
  int N_;
  double gamma0_;
};

struct LocateOneRow {
  Vec<2> truth = Vec<2>::Zero();
  Vec<2> recovered = Vec<2>::Zero();
  double eps = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

void write_locate_one_csv(std::ostream& out, std::span<const LocateOneRow> rows);

}  // namespace subdiff
