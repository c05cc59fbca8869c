#pragma once

#include "subdiff/errors.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <memory>
#include <vector>

namespace subdiff {

// ---------------------------------------------------------------------------
// Exact reduced Green functions.
//
// Psi_{d,alpha} is the inverse Fourier transform of xi -> E_alpha(-|xi|^2).
// It is evaluated through subordination to the heat kernel,
//
//   Psi_{d,alpha}(r) = int_0^inf M_alpha(s) (4 pi s)^{-d/2} exp(-r^2 / 4s) ds,
//
// with M_alpha the Wright M-function (the Laplace pre-image of E_alpha(-.)).
// Every factor is positive, so the value keeps full relative accuracy where
// it is exponentially small.
// ---------------------------------------------------------------------------

/// Wright M-function M_alpha(s), s >= 0, alpha in (0, 1).
double wright_m(double alpha, double s);
double log_wright_m(double alpha, double s);

/// log Psi at radius r > 0 for any Gaussian dimension 1..6 (the odd and
/// higher dimensions are used for radial derivatives).
double log_reduced_green_oracle(int dim, double alpha, double r);

/// Psi_{d,alpha}(r), d in {2, 3}. Throws std::invalid_argument for other d.
double reduced_green_oracle(int d, double alpha, double r);

/// d/dr Psi_{d,alpha}(r) = -2 pi r Psi_{d+2,alpha}(r).
double reduced_green_oracle_derivative(int d, double alpha, double r);

/// Exponent a0 = (1 - alpha/2) (alpha/2)^{alpha/(2-alpha)} of the
/// large-radius decay exp(-a0 r^{2/(2-alpha)}).
double green_decay_exponent(double alpha);

// ---------------------------------------------------------------------------
// Asymptotic series.
// ---------------------------------------------------------------------------

/// Coefficients of the large-radius expansions of Psi_{1,alpha} (a1) and
/// Psi_{2,alpha} (a2). The d = 3 expansion is obtained from a1.
struct GreenCoeffs {
  int d = 2;
  double alpha = 0.5;
  double a0 = 0.0;
  std::vector<double> a1;
  std::vector<double> a2;

  int terms() const { return static_cast<int>(a2.size()); }
};

/// Recover a0 and the a_{j,k} (k < N) from the oracle. a0 comes from a
/// log-linear regression, the a_{j,k} from a linear least-squares fit of an
/// extended model on a far-field window; the first N are kept.
GreenCoeffs fit_green_coeffs(int d, double alpha, int N);

/// Max relative error of the N-term series against the oracle on [r_lo, r_hi].
double green_fit_residual(const GreenCoeffs& coeffs, int N, double r_lo,
                          double r_hi, int samples = 24);

/// N-term truncated Psi_{d,alpha,N}(r) for d = coeffs.d.
double reduced_green_series(const GreenCoeffs& coeffs, int N, double r);

/// N-term truncated Psi_{1,alpha,N}(r).
double reduced_green_series_1d(const GreenCoeffs& coeffs, int N, double r);

/// S_{d,N}(y) with grad Psi_{d,alpha,N}(x) = x S_{d,N}(|x|^2).
double s_kernel(int d, const GreenCoeffs& coeffs, int N, double y);

void write_green_coeffs(std::ostream& out, const GreenCoeffs& coeffs);
GreenCoeffs read_green_coeffs(std::istream& in);

// ---------------------------------------------------------------------------
// Space-time kernels.
// ---------------------------------------------------------------------------

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

/// Source location and time offset of a fundamental solution.
template <int Dim>
struct SourcePoint {
  Vec<Dim> x0 = Vec<Dim>::Zero();
  double t0 = 0.0;
};

/// Psi_{(x0,t0),N}(x,t) = Psi_{d,alpha,N}((x-x0)/sqrt(g0 (t-t0)^alpha)) (g0 (t-t0)^alpha)^{-d/2}.
template <int Dim>
class ApproxFundamental {
public:
  ApproxFundamental(std::shared_ptr<const GreenCoeffs> coeffs, int N,
                    SourcePoint<Dim> source, double gamma0);

  double value(const Vec<Dim>& x, double t) const;
  Vec<Dim> grad(const Vec<Dim>& x, double t) const;

  /// Limit-aware variants: zero for t <= t0 (the kernel vanishes to all
  /// orders there when x != x0).
  double value_or_zero(const Vec<Dim>& x, double t) const;
  Vec<Dim> grad_or_zero(const Vec<Dim>& x, double t) const;

  const SourcePoint<Dim>& source() const { return source_; }
  int terms() const { return N_; }

private:
  std::shared_ptr<const GreenCoeffs> coeffs_;
  int N_;
  SourcePoint<Dim> source_;
  double gamma0_;
};

extern template class ApproxFundamental<2>;
extern template class ApproxFundamental<3>;

/// Spline table of the exact log Psi_{d} and log Psi_{d+2} on a log-radius
/// grid. Values beyond r_max are treated as zero.
class GreenTable {
public:
  GreenTable(int d, double alpha, double r_min = 0.05, double r_max = 250.0,
             int samples = 640);
  ~GreenTable();
  GreenTable(GreenTable&&) noexcept;
  GreenTable& operator=(GreenTable&&) noexcept;

  int dim() const { return d_; }
  double alpha() const { return alpha_; }
  double value(double r) const;
  double derivative(double r) const;

private:
  struct Impl;
  int d_;
  double alpha_;
  double r_min_;
  double r_max_;
  std::unique_ptr<Impl> impl_;
};

/// Exact fundamental solution built from a GreenTable (2D only).
class ExactFundamental2 {
public:
  ExactFundamental2(std::shared_ptr<const GreenTable> table, Vec<2> x0,
                    double gamma0);
  double value_or_zero(const Vec<2>& x, double t) const;
  Vec<2> grad_or_zero(const Vec<2>& x, double t) const;

private:
  std::shared_ptr<const GreenTable> table_;
  Vec<2> x0_;
  double gamma0_;
};

}  // namespace subdiff
