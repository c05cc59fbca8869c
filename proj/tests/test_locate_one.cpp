#include "subdiff/locate_one.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace subdiff;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const GreenCoeffs> coeffs(int d) {
  static const auto c2 = std::make_shared<const GreenCoeffs>(fit_green_coeffs(2, 0.5, 3));
  static const auto c3 = std::make_shared<const GreenCoeffs>(fit_green_coeffs(3, 0.5, 3));
  return d == 2 ? c2 : c3;
}

Vec<2> rotate(const Vec<2>& v, double th) {
  return Vec<2>(std::cos(th) * v.x() - std::sin(th) * v.y(), std::sin(th) * v.x() + std::cos(th) * v.y());
}

ProbeSegment segment_for(int j, const Vec<2>& a) {
  ProbeSegment s;
  s.j = j;
  s.direction = a;
  s.origin = 2.0 * Vec<2>(-a.y(), a.x());
  return s;
}

Reconstruction1<2> synthetic_2d(const Vec<2>& z, const Vec<2>& a1, const Vec<2>& a2, int N, double tol) {
  const SyntheticProbe<2> probe({z, 0.05, 50.0}, 1.0, {a1, a2}, coeffs(2), N, TimeGrid(1.0, 128));
  const std::vector<ProbeSegment> segs{segment_for(0, a1), segment_for(1, a2)};
  return locate_one_inclusion(Probe<2>(std::cref(probe)), segs, tol);
}

}  // namespace

TEST_CASE("bisection") {
  CHECK(bisect([](double s) { return s - 0.3; }, 0.0, 1.0, 1e-10) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(bisect([](double s) { return 0.3 - s; }, 0.0, 1.0, 1e-10) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK_THROWS_AS(bisect([](double s) { return s + 2.0; }, 0.0, 1.0, 1e-6), ReconstructionError);
  double prev_root = bisect([](double s) { return std::tanh(s - 0.123); }, -1.0, 1.0, 1e-2);
  for (double tol = 5e-3; tol > 1e-9; tol /= 2.0) {
    const double r = bisect([](double s) { return std::tanh(s - 0.123); }, -1.0, 1.0, tol);
    CHECK(std::abs(r - prev_root) <= 2.0 * tol);
    prev_root = r;
  }
}

TEST_CASE("line intersection in 2D") {
  const auto segs = default_segments();
  const auto r = intersect(Vec<2>(0.2, 2.0), Vec<2>(2.0, 0.3), segs[0], segs[1]);
  CHECK((r.P - Vec<2>(0.2, 0.3)).norm() < 1e-14);
  CHECK(r.rho0 == 0.0);
  ProbeSegment parallel = segs[0];
  parallel.origin = Vec<2>(0.0, -2.0);
  CHECK_THROWS_AS(intersect(Vec<2>(0.2, 2.0), Vec<2>(0.2, -2.0), segs[0], parallel), ReconstructionError);
}

TEST_CASE("axis intersection in 3D") {
  const Vec<3> a1(1, 0, 0), a2(0, 1, 0), a3(0, 0, 1);
  const ProbePlane p1 = make_probe_plane(0, a1, a3);
  const ProbePlane p2 = make_probe_plane(1, a2, a3);
  const Vec<3> z(0.2, -0.3, 0.1);
  auto on_plane = [](const ProbePlane& p, const Vec<3>& x) {
    const Vec<3> n = p.normal();
    return Vec<3>(x + (p.origin - x).dot(n) * n);
  };
  const auto r = intersect(on_plane(p1, z), on_plane(p2, z), p1, p2);
  CHECK((r.P - z).norm() < 1e-14);
  CHECK(r.rho0 < 1e-14);
  const Vec<3> shift(0, 0, 0.02);
  const auto s = intersect(on_plane(p1, z + shift), on_plane(p2, z - shift), p1, p2);
  CHECK(s.rho0 == doctest::Approx(0.02).epsilon(1e-12));
  CHECK((s.P - z).norm() < 1e-14);
}

TEST_CASE("synthetic probe root sits at the projection of the center") {
  const SyntheticProbe<2> probe({Vec<2>(0.2, 0.3), 0.05, 50.0}, 1.0, {Vec<2>(1, 0), Vec<2>(0, 1)}, coeffs(2), 3,
                                TimeGrid(1.0, 128));
  const Vec<2> root = root_on_segment(default_segments()[0], Probe<2>(std::cref(probe)), 1e-9);
  CHECK((root - Vec<2>(0.2, 2.0)).norm() < 1e-8);
  ProbeSegment off = default_segments()[0];
  off.s_lo = 0.5;
  CHECK_THROWS_AS(root_on_segment(off, Probe<2>(std::cref(probe)), 1e-6), ReconstructionError);
}

TEST_CASE("exact recovery for random planar configurations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec<2> z;
    do z = Vec<2>(0.7 * u(rng), 0.7 * u(rng));
    while (z.norm() > 0.7);
    const double th1 = kPi * u(rng);
    const double th2 = th1 + (0.5 + 0.4 * u(rng)) * kPi;
    const Vec<2> a1(std::cos(th1), std::sin(th1)), a2(std::cos(th2), std::sin(th2));
    for (int N : {1, 3}) CHECK((synthetic_2d(z, a1, a2, N, 1e-10).P - z).norm() <= 1e-6);
  }
}

TEST_CASE("rotation equivariance") {
  const Vec<2> z(0.25, -0.35), a1(1, 0), a2(0, 1);
  const Vec<2> P = synthetic_2d(z, a1, a2, 3, 1e-12).P;
  for (double th : {0.3, 1.9, -2.4}) {
    const Vec<2> Q = synthetic_2d(rotate(z, th), rotate(a1, th), rotate(a2, th), 3, 1e-12).P;
    CHECK((Q - rotate(P, th)).norm() < 1e-8);
  }
}

TEST_CASE("exact recovery in three dimensions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec<3> z;
    do z = Vec<3>(0.6 * u(rng), 0.6 * u(rng), 0.6 * u(rng));
    while (z.norm() > 0.6);
    const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
    const Eigen::Matrix3d R = q.toRotationMatrix();
    const std::vector<Vec<3>> a{R.col(0), R.col(1), R.col(2)};
    const SyntheticProbe<3> probe({z, 0.05, 50.0}, 1.0, a, coeffs(3), 3, TimeGrid(1.0, 128));
    const std::vector<ProbePlane> planes{make_probe_plane(0, a[0], a[2]), make_probe_plane(1, a[1], a[2])};
    const auto r = locate_one_inclusion(Probe<3>(std::cref(probe)), planes, 1e-9);
    CHECK((r.P - z).norm() <= 1e-6);
    CHECK(r.rho0 <= 1e-6);
  }
}

TEST_CASE("locate_one csv") {
  std::ostringstream os;
  const std::vector<LocateOneRow> rows{{Vec<2>(0.2, 0.3), Vec<2>(0.21, 0.3), 0.05, 0.01, 7}};
  write_locate_one_csv(os, rows);
  CHECK(os.str().rfind("z1,z2,eps,P1,P2,error,sigma,seed\n", 0) == 0);
  CHECK(os.str().find(",7\n") != std::string::npos);
}
