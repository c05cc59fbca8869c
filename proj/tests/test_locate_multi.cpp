#include "subdiff/locate_multi.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <algorithm>
#include <sstream>

using namespace subdiff;

namespace {

constexpr double kPi = std::numbers::pi;

const GreenCoeffs& coeffs(int N = 3) {
  static const GreenCoeffs c3 = fit_green_coeffs(2, 0.5, 3);
  static const GreenCoeffs c1 = fit_green_coeffs(2, 0.5, 1);
  return N == 1 ? c1 : c3;
}

DataMatrix model_data(const SourceSet& sources, std::span<const Vec<2>> centers) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(sources.size(), sources.size());
  for (const auto& z : centers) B += g_matrix(z, sources, coeffs(), 3, 1.0, 1.0);
  return DataMatrix(B);
}

Eigen::MatrixXd random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  }
  return A;
}

}  // namespace

TEST_CASE("source sets") {
  for (int config : {1, 2, 3}) {
    const SourceSet s = SourceSet::aperture(config);
    CHECK(s.size() == 10);
    for (int j = 0; j < s.size(); ++j) {
      CHECK(s[j].norm() == doctest::Approx(2.0));
      for (int k = 0; k < j; ++k) CHECK((s[j] - s[k]).norm() > 0.1);
    }
  }
  CHECK(SourceSet::aperture(1).cell_measure() == doctest::Approx(2.0 * 2.0 * kPi / 10.0));
  CHECK(SourceSet::aperture(3).cell_measure() == doctest::Approx(2.0 * kPi / 10.0));
  const SourceSet half = SourceSet::aperture(3);
  for (int j = 0; j < half.size(); ++j) CHECK(half[j].y() > 0.0);
  CHECK_THROWS(SourceSet::aperture(4));
  CHECK_THROWS(SourceSet(10, 0.9, 0.0, kPi));
}

TEST_CASE("truncation level selection") {
  CHECK(select_truncation(Eigen::Vector3d(1.0, 0.5, 1e-9), 1e-6) == 2);
  CHECK(select_truncation(Eigen::Vector3d(1.0, 0.5, 1e-9), 0.9) == 1);
  CHECK(select_truncation(Eigen::Vector3d(1.0, 0.5, 1e-9), 2.0) == 1);
  CHECK(select_truncation(Eigen::Vector3d(1.0, 0.5, 1e-9), 1e-12) == 3);
  CHECK_THROWS(select_truncation(Eigen::Vector3d::Zero(), 1e-6));
}

TEST_CASE("refined time rule") {
  const TimeQuadrature q = refined_time_rule(1.0);
  double w = 0.0, m3 = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    CHECK(q.nodes[i] > 0.0);
    CHECK(q.nodes[i] < 1.0);
    CHECK(q.weights[i] > 0.0);
    w += q.weights[i];
    m3 += q.weights[i] * std::pow(q.nodes[i], 7);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m3 == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(*std::min_element(q.nodes.begin(), q.nodes.end()) < 1e-3);
  CHECK(*std::max_element(q.nodes.begin(), q.nodes.end()) > 1.0 - 1e-3);
}

TEST_CASE("kernel C symmetry and sign") {
  const SourceSet s = SourceSet::aperture(1);
  const Vec<2> z(0.0, 0.0);
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < a; ++b) {
      CHECK(kernel_C(z, a, b, s, coeffs(), 3, 1.0, 1.0) ==
            doctest::Approx(kernel_C(z, b, a, s, coeffs(), 3, 1.0, 1.0)).epsilon(1e-12));
    }
  }
  for (const Vec<2>& p : {Vec<2>(0.0, 0.0), Vec<2>(0.5, -0.3), Vec<2>(-0.8, 0.2)}) {
    for (int a = 0; a < 10; a += 3) {
      for (int b = 0; b < 10; b += 2) CHECK(kernel_C(p, a, b, s, coeffs(1), 1, 1.0, 1.0) > 0.0);
    }
  }
}

TEST_CASE("g matrix symmetry and decay with source distance") {
  const SourceSet s = SourceSet::aperture(1);
  const Eigen::MatrixXd G = g_matrix(Vec<2>(0.0, 0.0), s, coeffs(), 3, 1.0, 1.0);
  CHECK((G - G.transpose()).norm() <= 1e-12 * G.norm());
  const Vec<2> z(0.2, 0.1);
  double prev = INFINITY;
  for (double R : {1.5, 2.0, 2.5, 3.0}) {
    const double v = g_matrix(z, SourceSet(10, R, 0.0, 2.0 * kPi), coeffs(), 3, 1.0, 1.0).cwiseAbs().maxCoeff();
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("complement projector") {
  const SourceSet s = SourceSet::aperture(1);
  const std::vector<Vec<2>> centers{Vec<2>(0.3, 0.2), Vec<2>(-0.4, 0.0)};
  const DataMatrix data = model_data(s, centers);
  for (int k = 0; k <= data.size(); ++k) {
    const Eigen::MatrixXd Q = complement_projector(data, k);
    CHECK((Q * Q - Q).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::MatrixXd A = random_matrix(data.size(), 17 + k);
    CHECK((Q * A).norm() <= A.norm() * (1.0 + 1e-12));
  }
  CHECK(complement_projector(data, 0) == Eigen::MatrixXd::Identity(10, 10));
  CHECK_THROWS(complement_projector(data, 11));
}

TEST_CASE("indicator bounds, monotonicity and sentinel") {
  const SourceSet s = SourceSet::aperture(1);
  const std::vector<Vec<2>> centers{Vec<2>(0.3, 0.2), Vec<2>(-0.4, 0.0)};
  const DataMatrix data = model_data(s, centers);
  const Eigen::MatrixXd G = g_matrix(Vec<2>(0.1, -0.5), s, coeffs(), 3, 1.0, 1.0);
  CHECK(indicator(data, 0, G).value == 1.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd A = random_matrix(10, 100 + t);
    double prev = 1.0;
    for (int k = 0; k < 10; ++k) {
      const IndicatorValue w = indicator(data, k, A);
      CHECK(w.value >= 1.0 - 1e-12);
      CHECK(w.value >= prev * (1.0 - 1e-12));
      prev = w.value;
    }
  }
  const Eigen::MatrixXd V = data.left_vectors().leftCols(2);
  const IndicatorValue inside = indicator(data, 2, V * V.transpose());
  CHECK(inside.flagged);
  CHECK(inside.value == doctest::Approx(1.0 / kIndicatorSentinelRatio));
  CHECK(std::isfinite(inside.value));
  CHECK_FALSE(indicator(data, 2, G).flagged);
}

TEST_CASE("indicator peaks recover model inclusions") {
  const SourceSet s = SourceSet::aperture(1);
  const std::vector<Vec<2>> centers{Vec<2>(0.3, 0.2), Vec<2>(-0.4, 0.0)};
  const DataMatrix data = model_data(s, centers);
  const int k = select_truncation(data.singular_values(), 1e-4);
  ScanRegion region;
  region.resolution = 41;
  const IndicatorGrid grid = scan_indicator(data, s, coeffs(), 3, 1.0, 1.0, region, k);
  const auto peaks = peak_extract(grid, 2, 0.1);
  REQUIRE(peaks.size() == 2);
  for (const auto& z : centers) {
    const double d = std::min((peaks[0] - z).norm(), (peaks[1] - z).norm());
    CHECK(d <= 0.05);
  }
  CHECK(std::isnan(grid.at(0, 0)));
  for (double v : grid.values) CHECK((std::isnan(v) || v >= 1.0 - 1e-12));
}

TEST_CASE("serial and parallel scans agree") {
  const SourceSet s = SourceSet::aperture(2);
  const std::vector<Vec<2>> centers{Vec<2>(0.3, 0.2)};
  const DataMatrix data = model_data(s, centers);
  ScanRegion region;
  region.resolution = 21;
  const auto a = scan_indicator(data, s, coeffs(), 3, 1.0, 1.0, region, 3, Execution::serial);
  const auto b = scan_indicator(data, s, coeffs(), 3, 1.0, 1.0, region, 3, Execution::parallel);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK((a.values[i] == b.values[i] || (std::isnan(a.values[i]) && std::isnan(b.values[i]))));
  }
  CHECK(a.flagged == b.flagged);
}

TEST_CASE("peak extraction on a flat field") {
  IndicatorGrid g;
  g.xs = {0.0, 0.1, 0.2, 0.3};
  g.ys = g.xs;
  g.values.assign(16, 1.0);
  g.flagged.assign(16, false);
  CHECK_THROWS_AS(peak_extract(g, 1, 0.1), ReconstructionError);
  g.values[5] = 2.0;
  const auto p = peak_extract(g, 1, 0.1);
  REQUIRE(p.size() == 1);
  CHECK((p[0] - Vec<2>(0.1, 0.1)).norm() < 1e-15);
  CHECK_THROWS_AS(peak_extract(g, 2, 0.1), ReconstructionError);
}

TEST_CASE("data matrix from forward solves") {
  const SourceSet s = SourceSet::aperture(1, 4);
  MultiSetup setup;
  setup.coeffs = std::make_shared<const GreenCoeffs>(coeffs());
  setup.grid = TimeGrid(1.0, 16);
  const InclusionSet none({}, 1.0);
  const auto coarse = std::make_shared<const Mesh>(build_mesh(DiskDomain{}, none, 0.2, 0.2));
  const DataMatrix zero = build_data_matrix(coarse, none, s, setup);
  CHECK(zero.matrix().cwiseAbs().maxCoeff() == 0.0);

  const InclusionSet one({Inclusion{Point2(0.3, 0.2), 0.1, Shape::disk, 1.0, 3.0}}, 1.0);
  const auto mesh = std::make_shared<const Mesh>(build_mesh(DiskDomain{}, one, 0.2, 0.025));
  const TracePairs a = source_traces(mesh, one, s, setup, Execution::serial);
  const TracePairs b = source_traces(mesh, one, s, setup, Execution::parallel);
  REQUIRE(a.size() == 4);
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK((a.u[j].values() - b.u[j].values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.U[j].values() - b.U[j].values()).cwiseAbs().maxCoeff() == 0.0);
  }
  const auto diffs = a.differences();
  const DataMatrix B = data_matrix_from_traces(diffs, s, setup);
  CHECK(B.matrix().cwiseAbs().maxCoeff() > 0.0);
  const auto& sv = B.singular_values();
  for (int i = 1; i < sv.size(); ++i) CHECK(sv(i) <= sv(i - 1));
  CHECK(sv(sv.size() - 1) >= 0.0);
  const DataMatrix noisy = data_matrix_from_traces(a.differences(0.01, 3), s, setup);
  CHECK((noisy.matrix() - B.matrix()).norm() > 0.0);
}

TEST_CASE("csv outputs") {
  const SourceSet s = SourceSet::aperture(1);
  const std::vector<Vec<2>> centers{Vec<2>(0.3, 0.2)};
  const DataMatrix data = model_data(s, centers);
  std::ostringstream a, b;
  write_singular_values_csv(a, data);
  write_data_matrix_csv(b, data);
  CHECK(a.str().find('\n') != std::string::npos);
  const std::string body = b.str();
  CHECK(std::count(body.begin(), body.end(), '\n') >= 10);
  ScanRegion region;
  region.resolution = 5;
  std::ostringstream c;
  write_indicator_csv(c, scan_indicator(data, s, coeffs(), 3, 1.0, 1.0, region, 2));
  CHECK(c.str().rfind("x,y,W,flagged\n", 0) == 0);
}
