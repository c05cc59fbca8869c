#pragma once

#include "subdiff/forward.hpp"
#include "subdiff/greenfn.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace subdiff {

/// Test function Phi given through its value and gradient at (x, t).
template <int Dim>
struct PhiHandle {
  std::function<double(const Vec<Dim>&, double)> value;
  std::function<Vec<Dim>(const Vec<Dim>&, double)> grad;
};
using PhiHandle2 = PhiHandle<2>;

/// Phi(x, t) = Psi_{(x0,0),N}(x, T - t).
template <int Dim>
PhiHandle<Dim> time_reversed(ApproxFundamental<Dim> psi, double final_time);
/// Phi(x, t) = Psi_{(x0,0)}(x, T - t) with the exact reduced Green function.
PhiHandle2 time_reversed(ExactFundamental2 psi, double final_time);

struct Measurement {
  double value = 0.0;
  std::string background;
  std::string test_function;
  std::uint64_t seed = 0;
};

/// -(d gamma0 |B|) / (gamma_l + (d-1) gamma0) times the identity.
Eigen::MatrixXd polarization_disk(int d, double gamma0, double gamma_l, double volB);

/// int_0^T int_{dOmega} gamma0 (u - U) d_n Phi, trapezoid in time and
/// edgewise trapezoid in arc length.
Measurement measurement_boundary(const BoundaryTrace& diff, const PhiHandle2& phi, double gamma0);

/// sum_l (gamma0 - gamma_l) int_0^T int_{A_l} grad u . grad Phi, trapezoid in
/// time with the t = 0 level replaced by its right limit.
Measurement measurement_interior(const SpaceTimeField& u, const PhiHandle2& phi,
                                 const InclusionSet& inclusions);

/// Inclusion description for the leading-order model in any dimension.
template <int Dim>
struct PointInclusion {
  Vec<Dim> center = Vec<Dim>::Zero();
  double eps = 0.05;
  double gamma = 50.0;
};

/// -eps^d sum_l (gamma0 - gamma_l) int_0^T grad U(z_l,t) . M_l grad Phi(z_l,t) dt
/// with grad_u[l][k], grad_phi[l][k] sampled at the grid nodes.
template <int Dim>
double leading_term(std::span<const PointInclusion<Dim>> inclusions, double gamma0,
                    std::span<const Eigen::MatrixXd> tensors,
                    const std::vector<std::vector<Vec<Dim>>>& grad_u,
                    const std::vector<std::vector<Vec<Dim>>>& grad_phi, const TimeGrid& grid);

double leading_term(const InclusionSet& inclusions, std::span<const Eigen::MatrixXd> tensors,
                    const std::vector<std::vector<Vec<2>>>& grad_u,
                    const std::vector<std::vector<Vec<2>>>& grad_phi, const TimeGrid& grid);

/// Disk tensors for every inclusion of the set (|B| = pi).
std::vector<Eigen::MatrixXd> disk_tensors(const InclusionSet& inclusions);

void write_measurements_csv(std::ostream& out, std::span<const Measurement> rows);

}  // namespace subdiff
