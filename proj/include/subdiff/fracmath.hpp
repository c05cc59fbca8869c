#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace subdiff {

/// Order of the Caputo derivative. Accepts (0, 1]; the endpoint 1 is only
/// meaningful for limit checks (classical derivative / trapezoid integral).
class FracOrder {
public:
  explicit FracOrder(double alpha);
  double value() const { return alpha_; }

private:
  double alpha_;
};

/// Uniform grid t_i = i T / n_steps on [0, T].
class TimeGrid {
public:
  TimeGrid(double final_time, std::size_t n_steps);

  double final_time() const { return final_time_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_nodes() const { return n_steps_ + 1; }
  double step() const { return final_time_ / static_cast<double>(n_steps_); }
  double node(std::size_t i) const;
  std::vector<double> nodes() const;

  bool operator==(const TimeGrid&) const = default;

private:
  double final_time_;
  std::size_t n_steps_;
};

/// E_alpha(z) on the decaying branch z <= 0, alpha in (0, 1].
double mittag_leffler(double alpha, double z);

/// L1 convolution weights b_j = (j+1)^{1-alpha} - j^{1-alpha}, j = 0..count-1.
std::vector<double> l1_weights(double alpha, std::size_t count);

/// Discrete Caputo derivative at t_1..t_n from samples at t_0..t_n.
std::vector<double> caputo_l1_apply(FracOrder alpha, const TimeGrid& grid,
                                    std::span<const double> samples);

/// Riemann-Liouville integral of order alpha at t_{t_index}; product
/// trapezoid rule (kernel integrated exactly against the piecewise-linear
/// interpolant of the samples).
double rl_integral(FracOrder alpha, const TimeGrid& grid,
                   std::span<const double> samples, std::size_t t_index);

/// Weights w_j with rl_integral = sum_j w_j samples[j], j = 0..t_index.
std::vector<double> rl_weights(FracOrder alpha, const TimeGrid& grid,
                               std::size_t t_index);

}  // namespace subdiff
