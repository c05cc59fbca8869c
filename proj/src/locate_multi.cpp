#include "subdiff/locate_multi.hpp"

#include "subdiff/errors.hpp"
#include "subdiff/measure.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace subdiff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::pair<BoundaryTrace, BoundaryTrace> one_source_traces(
    const std::shared_ptr<const Mesh>& mesh, const InclusionSet& inclusions, const Vec<2>& source,
    const MultiSetup& setup) {
  const ApproxFundamental<2> psi(setup.coeffs, setup.N, SourcePoint<2>{source, -setup.t_init},
                                 setup.gamma0);
  const double gamma0 = setup.gamma0;
  ForwardData data;
  if (setup.t_init > 0.0) data.u0 = [psi](const Point2& x) { return psi.value(x, 0.0); };
  data.g = [psi, gamma0](const Point2& x, const Point2& n, double t) {
    return gamma0 * psi.grad_or_zero(x, t).dot(n);
  };
  return {boundary_restrict(solve_subdiffusion(mesh, setup.alpha, inclusions, data, setup.grid)),
          boundary_restrict(solve_background(mesh, setup.alpha, gamma0, data, setup.grid))};
}

// Scaled gradient factor S(r^2 / tau) tau^{-2} at every quadrature node.
Eigen::MatrixXd side_factors(const Vec<2>& z, const SourceSet& sources, const GreenCoeffs& coeffs,
                             int N, double gamma0, std::span<const double> times) {
  Eigen::MatrixXd A(sources.size(), static_cast<Eigen::Index>(times.size()));
  for (int j = 0; j < sources.size(); ++j) {
    const double r2 = (z - sources[j]).squaredNorm();
    for (std::size_t q = 0; q < times.size(); ++q) {
      const double tau = gamma0 * std::pow(times[q], coeffs.alpha);
      A(j, static_cast<Eigen::Index>(q)) = s_kernel(2, coeffs, N, r2 / tau) / (tau * tau);
    }
  }
  if (!A.allFinite()) throw std::domain_error("kernel_C: non-finite integrand");
  return A;
}

const TimeQuadrature& cached_rule(double final_time) {
  thread_local double cached_T = -1.0;
  thread_local TimeQuadrature rule;
  if (cached_T != final_time) {
    rule = refined_time_rule(final_time);
    cached_T = final_time;
  }
  return rule;
}

}  // namespace

SourceSet::SourceSet(int n, double radius, double arc_start, double arc_length)
    : radius_(radius), arc_start_(arc_start), arc_length_(arc_length) {
  if (n < 1) throw std::invalid_argument("SourceSet: n must be >= 1");
  if (!(radius > 1.0)) throw std::invalid_argument("SourceSet: radius must exceed the domain");
  if (!(arc_length > 0.0) || arc_length > kTwoPi + 1e-12) {
    throw std::invalid_argument("SourceSet: arc length must lie in (0, 2 pi]");
  }
  const double cell = arc_length / n;
  for (int j = 0; j < n; ++j) {
    const double s = arc_start + (j + 0.5) * cell;
    points_.emplace_back(radius * std::cos(s), radius * std::sin(s));
  }
}

SourceSet SourceSet::aperture(int config, int n, double radius) {
  switch (config) {
    case 1: return SourceSet(n, radius, 0.0, kTwoPi);
    case 2: return SourceSet(n, radius, 0.0, 1.5 * std::numbers::pi);
    case 3: return SourceSet(n, radius, 0.0, std::numbers::pi);
    default: throw std::invalid_argument("SourceSet: aperture config must be 1, 2 or 3");
  }
}

DataMatrix::DataMatrix(Eigen::MatrixXd B) : B_(std::move(B)) {
  if (B_.rows() != B_.cols()) throw std::invalid_argument("DataMatrix: B must be square");
  if (!B_.allFinite()) throw SolverError("DataMatrix: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B_, Eigen::ComputeFullU);
  s_ = svd.singularValues();
  U_ = svd.matrixU();
}

TracePairs source_traces(std::shared_ptr<const Mesh> mesh,
                                         const InclusionSet& inclusions, const SourceSet& sources,
                                         const MultiSetup& setup, Execution exec) {
  if (!setup.coeffs) throw std::invalid_argument("source_traces: missing coefficients");
  const int n = sources.size();
  std::vector<std::optional<std::pair<BoundaryTrace, BoundaryTrace>>> slots(
      static_cast<std::size_t>(n));
  if (exec == Execution::parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n; ++j) {
      try {
        slots[j] = one_source_traces(mesh, inclusions, sources[j], setup);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int j = 0; j < n; ++j) slots[j] = one_source_traces(mesh, inclusions, sources[j], setup);
  }
  TracePairs out;
  for (auto& s : slots) {
    out.u.push_back(std::move(s->first));
    out.U.push_back(std::move(s->second));
  }
  return out;
}

DataMatrix data_matrix_from_traces(std::span<const BoundaryTrace> diffs,
                                   const SourceSet& sources, const MultiSetup& setup) {
  const int n = sources.size();
  if (static_cast<int>(diffs.size()) != n) {
    throw std::invalid_argument("data_matrix: one trace per source expected");
  }
  for (const auto& d : diffs) {
    if (!(d.grid() == setup.grid)) throw std::invalid_argument("data_matrix: mismatched grids");
  }
  Eigen::MatrixXd B(n, n);
  const double T = setup.grid.final_time();
  for (int j2 = 0; j2 < n; ++j2) {
    const auto phi = time_reversed(
        ApproxFundamental<2>(setup.coeffs, setup.N, SourcePoint<2>{sources[j2], 0.0}, setup.gamma0),
        T);
    for (int j1 = 0; j1 < n; ++j1) {
      B(j1, j2) = measurement_boundary(diffs[j1], phi, setup.gamma0).value;
    }
  }
  return DataMatrix(std::move(B));
}

DataMatrix build_data_matrix(std::shared_ptr<const Mesh> mesh, const InclusionSet& inclusions,
                             const SourceSet& sources, const MultiSetup& setup, double sigma,
                             std::uint64_t seed, Execution exec) {
  const auto traces = source_traces(std::move(mesh), inclusions, sources, setup, exec);
  return data_matrix_from_traces(traces.differences(sigma, seed), sources, setup);
}

TimeQuadrature refined_time_rule(double final_time, int levels, double ratio) {
  if (!(final_time > 0.0) || levels < 0 || !(ratio > 1.0)) {
    throw std::invalid_argument("refined_time_rule: invalid parameters");
  }
  using Rule = boost::math::quadrature::gauss<double, 10>;
  std::vector<double> breaks{0.0};
  const double half = 0.5 * final_time;
  for (int i = levels; i >= 0; --i) breaks.push_back(half * std::pow(ratio, -i));
  for (int i = 1; i <= levels; ++i) breaks.push_back(final_time - half * std::pow(ratio, -i));
  breaks.push_back(final_time);
  TimeQuadrature rule;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
    const double rad = 0.5 * (breaks[p + 1] - breaks[p]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        if (x[i] == 0.0 && sgn > 0.0) continue;
        rule.nodes.push_back(mid + sgn * rad * x[i]);
        rule.weights.push_back(rad * w[i]);
      }
    }
  }
  return rule;
}

double kernel_C(const Vec<2>& z, int j1, int j2, const SourceSet& sources,
                const GreenCoeffs& coeffs, int N, double gamma0, double final_time) {
  const auto& rule = cached_rule(final_time);
  const double r1 = (z - sources[j1]).squaredNorm();
  const double r2 = (z - sources[j2]).squaredNorm();
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = rule.nodes[q];
    const double tau1 = gamma0 * std::pow(t, coeffs.alpha);
    const double tau2 = gamma0 * std::pow(final_time - t, coeffs.alpha);
    sum += rule.weights[q] * s_kernel(2, coeffs, N, r1 / tau1) / (tau1 * tau1) *
           s_kernel(2, coeffs, N, r2 / tau2) / (tau2 * tau2);
  }
  if (!std::isfinite(sum)) throw std::domain_error("kernel_C: non-finite integrand");
  return sum;
}

Eigen::MatrixXd g_matrix(const Vec<2>& z, const SourceSet& sources, const GreenCoeffs& coeffs,
                         int N, double gamma0, double final_time) {
  const auto& rule = cached_rule(final_time);
  std::vector<double> reversed(rule.nodes.size());
  std::transform(rule.nodes.begin(), rule.nodes.end(), reversed.begin(),
                 [final_time](double t) { return final_time - t; });
  const Eigen::MatrixXd A = side_factors(z, sources, coeffs, N, gamma0, rule.nodes);
  const Eigen::MatrixXd P = side_factors(z, sources, coeffs, N, gamma0, reversed);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.weights.size()));
  const Eigen::MatrixXd C = A * w.asDiagonal() * P.transpose();
  Eigen::MatrixXd D(sources.size(), 2);
  for (int j = 0; j < sources.size(); ++j) D.row(j) = (z - sources[j]).transpose();
  return (D * D.transpose()).cwiseProduct(C);
}

int select_truncation(const Eigen::VectorXd& s, double tau) {
  if (s.size() == 0 || !(s(0) > 0.0)) throw ReconstructionError("select_truncation: zero spectrum");
  int k = 1;
  for (Eigen::Index i = 1; i < s.size(); ++i) {
    if (s(i) / s(0) >= tau) k = static_cast<int>(i) + 1;
  }
  return k;
}

Eigen::MatrixXd complement_projector(const DataMatrix& data, int k) {
  if (k < 0 || k > data.size()) throw std::invalid_argument("complement_projector: k out of range");
  const auto V = data.left_vectors().leftCols(k);
  return Eigen::MatrixXd::Identity(data.size(), data.size()) - V * V.transpose();
}

IndicatorValue indicator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& G) {
  const double num = G.norm();
  const double den = (Q * G).norm();
  if (!(num > 0.0)) return {1.0, true};
  if (den < kIndicatorSentinelRatio * num) return {1.0 / kIndicatorSentinelRatio, true};
  return {num / den, false};
}

IndicatorValue indicator(const DataMatrix& data, int k, const Eigen::MatrixXd& G) {
  return indicator(complement_projector(data, k), G);
}

IndicatorGrid scan_indicator(const DataMatrix& data, const SourceSet& sources,
                             const GreenCoeffs& coeffs, int N, double gamma0, double final_time,
                             const ScanRegion& region, int k, Execution exec) {
  if (region.resolution < 2) throw std::invalid_argument("scan_indicator: resolution must be >= 2");
  if (!(region.radius < 1.0)) {
    throw std::invalid_argument("scan_indicator: scan region must lie inside the domain");
  }
  const int n = region.resolution;
  IndicatorGrid out;
  out.k = k;
  for (int i = 0; i < n; ++i) {
    out.xs.push_back(region.x_min + (region.x_max - region.x_min) * i / (n - 1));
    out.ys.push_back(region.y_min + (region.y_max - region.y_min) * i / (n - 1));
  }
  out.values.assign(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> flags(out.values.size(), 0);
  const Eigen::MatrixXd Q = complement_projector(data, k);
  auto row = [&](int j) {
    for (int i = 0; i < n; ++i) {
      const Vec<2> z(out.xs[i], out.ys[j]);
      if (z.norm() > region.radius) continue;
      const auto w = indicator(Q, g_matrix(z, sources, coeffs, N, gamma0, final_time));
      out.values[static_cast<std::size_t>(i) + n * j] = w.value;
      flags[static_cast<std::size_t>(i) + n * j] = w.flagged;
    }
  };
  if (exec == Execution::parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n; ++j) {
      try {
        row(j);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int j = 0; j < n; ++j) row(j);
  }
  out.flagged.assign(flags.begin(), flags.end());
  return out;
}

std::vector<Vec<2>> peak_extract(const IndicatorGrid& grid, int m, double min_separation) {
  const int nx = static_cast<int>(grid.xs.size());
  const int ny = static_cast<int>(grid.ys.size());
  struct Candidate {
    double value;
    Vec<2> point;
  };
  std::vector<Candidate> candidates;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double v = grid.at(i, j);
      if (std::isnan(v)) continue;
      bool is_max = true;
      bool strict = false;
      for (int dj = -1; dj <= 1 && is_max; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int a = i + di;
          const int b = j + dj;
          if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
          const double w = grid.at(a, b);
          if (std::isnan(w)) continue;
          if (w > v) {
            is_max = false;
            break;
          }
          if (w < v) strict = true;
        }
      }
      if (is_max && strict) candidates.push_back({v, Vec<2>(grid.xs[i], grid.ys[j])});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  std::vector<Vec<2>> peaks;
  for (const auto& c : candidates) {
    if (static_cast<int>(peaks.size()) == m) break;
    const bool separated = std::all_of(peaks.begin(), peaks.end(), [&](const Vec<2>& p) {
      return (p - c.point).norm() >= min_separation;
    });
    if (separated) peaks.push_back(c.point);
  }
  if (static_cast<int>(peaks.size()) < m) {
    throw ReconstructionError("peak_extract: fewer local maxima than requested");
  }
  return peaks;
}

void write_indicator_csv(std::ostream& out, const IndicatorGrid& grid) {
  out.precision(10);
  out << "x,y,W,flagged\n";
  for (std::size_t j = 0; j < grid.ys.size(); ++j) {
    for (std::size_t i = 0; i < grid.xs.size(); ++i) {
      const std::size_t idx = i + grid.xs.size() * j;
      if (std::isnan(grid.values[idx])) continue;
      out << grid.xs[i] << ',' << grid.ys[j] << ',' << grid.values[idx] << ','
          << (grid.flagged[idx] ? 1 : 0) << '\n';
    }
  }
}

void write_data_matrix_csv(std::ostream& out, const DataMatrix& data) {
  out.precision(15);
  const auto& B = data.matrix();
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) out << (j ? "," : "") << B(i, j);
    out << '\n';
  }
}

void write_singular_values_csv(std::ostream& out, const DataMatrix& data) {
  out.precision(15);
  out << "index,singular_value\n";
  const auto& s = data.singular_values();
  for (Eigen::Index i = 0; i < s.size(); ++i) out << i + 1 << ',' << s(i) << '\n';
}

}  // namespace subdiff
