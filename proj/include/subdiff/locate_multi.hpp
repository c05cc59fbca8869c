#pragma once

#include "subdiff/forward.hpp"
#include "subdiff/greenfn.hpp"
#include "subdiff/parallel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace subdiff {

/// n source points at the midpoints of n equal cells of the arc
/// { R (cos s, sin s) : s in [arc_start, arc_start + arc_length) }.
class SourceSet {
public:
  SourceSet(int n, double radius, double arc_start, double arc_length);

  /// Source layouts: 1 full circle, 2 three quarters, 3 half circle.
  static SourceSet aperture(int config, int n = 10, double radius = 2.0);

  int size() const { return static_cast<int>(points_.size()); }
  double radius() const { return radius_; }
  double arc_start() const { return arc_start_; }
  double arc_length() const { return arc_length_; }
  double cell_measure() const { return radius_ * arc_length_ / size(); }
  const Vec<2>& operator[](int j) const { return points_[static_cast<std::size_t>(j)]; }
  std::span<const Vec<2>> points() const { return points_; }

private:
  double radius_;
  double arc_start_;
  double arc_length_;
  std::vector<Vec<2>> points_;
};

struct MultiSetup {
  FracOrder alpha{0.5};
  double gamma0 = 1.0;
  std::shared_ptr<const GreenCoeffs> coeffs;
  int N = 3;
  TimeGrid grid{1.0, 128};
  /// Background starts from Psi(., t_init); 0 means the zero initial state.
  double t_init = 0.0;
};

class DataMatrix {
public:
  explicit DataMatrix(Eigen::MatrixXd B);

  /// Rows follow the background source j', columns the test-function source j''.
  const Eigen::MatrixXd& matrix() const { return B_; }
  const Eigen::VectorXd& singular_values() const { return s_; }
  const Eigen::MatrixXd& left_vectors() const { return U_; }
  int size() const { return static_cast<int>(B_.rows()); }

private:
  Eigen::MatrixXd B_;
  Eigen::VectorXd s_;
  Eigen::MatrixXd U_;
};

/// Boundary traces of u and U for every background source.
TracePairs source_traces(std::shared_ptr<const Mesh> mesh,
                                         const InclusionSet& inclusions, const SourceSet& sources,
                                         const MultiSetup& setup,
                                         Execution exec = Execution::parallel);

/// B[j', j''] = I_Phi(U_j') with Phi = Psi_{(x_j'',0),N}(., T - .).
DataMatrix data_matrix_from_traces(std::span<const BoundaryTrace> diffs,
                                   const SourceSet& sources, const MultiSetup& setup);

/// Noise level sigma on u with background_seed(seed, j') per source.
DataMatrix build_data_matrix(std::shared_ptr<const Mesh> mesh, const InclusionSet& inclusions,
                             const SourceSet& sources, const MultiSetup& setup, double sigma = 0.0,
                             std::uint64_t seed = 0, Execution exec = Execution::parallel);

/// Quadrature nodes and weights on [0, T] refined geometrically toward both ends.
struct TimeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
TimeQuadrature refined_time_rule(double final_time, int levels = 6, double ratio = 2.0);

/// C_{j',j'',n}(z).
double kernel_C(const Vec<2>& z, int j1, int j2, const SourceSet& sources,
                const GreenCoeffs& coeffs, int N, double gamma0, double final_time);

/// G_n(z)[j', j''] = (z - x_j').(z - x_j'') C_{j',j'',n}(z).
Eigen::MatrixXd g_matrix(const Vec<2>& z, const SourceSet& sources, const GreenCoeffs& coeffs,
                         int N, double gamma0, double final_time);

/// Largest k with s_k / s_1 >= tau, at least 1.
int select_truncation(const Eigen::VectorXd& singular_values, double tau);

/// I - V_k V_k^T.
Eigen::MatrixXd complement_projector(const DataMatrix& data, int k);

struct IndicatorValue {
  double value = 1.0;
  bool flagged = false;
};

/// Denominators below this fraction of the numerator are flagged.
inline constexpr double kIndicatorSentinelRatio = 1e-14;

/// W_{n,k}(z) = |G|_F / |Q_{n,k} G|_F.
IndicatorValue indicator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& G);
IndicatorValue indicator(const DataMatrix& data, int k, const Eigen::MatrixXd& G);

struct ScanRegion {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
  int resolution = 101;
  /// Points farther than this from the origin are skipped.
  double radius = 0.95;
};

struct IndicatorGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  /// values[i + nx * j] at (xs[i], ys[j]); NaN outside the scan radius.
  std::vector<double> values;
  std::vector<bool> flagged;
  int k = 0;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) + xs.size() * j]; }
};

IndicatorGrid scan_indicator(const DataMatrix& data, const SourceSet& sources,
                             const GreenCoeffs& coeffs, int N, double gamma0, double final_time,
                             const ScanRegion& region, int k,
                             Execution exec = Execution::parallel);

/// Top m local maxima (8-neighborhood) separated by at least min_separation.
std::vector<Vec<2>> peak_extract(const IndicatorGrid& grid, int m, double min_separation);

void write_indicator_csv(std::ostream& out, const IndicatorGrid& grid);
void write_data_matrix_csv(std::ostream& out, const DataMatrix& data);
void write_singular_values_csv(std::ostream& out, const DataMatrix& data);

}  // namespace subdiff
