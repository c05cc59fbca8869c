#include "subdiff/fracmath.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace subdiff {

FracOrder::FracOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("fractional order must lie in (0, 1], got " +
                                std::to_string(alpha));
  }
}

TimeGrid::TimeGrid(double final_time, std::size_t n_steps)
    : final_time_(final_time), n_steps_(n_steps) {
  if (!(final_time > 0.0) || n_steps == 0) {
    throw std::invalid_argument("time grid needs T > 0 and n_steps >= 1");
  }
}

double TimeGrid::node(std::size_t i) const {
  if (i == n_steps_) return final_time_;
  return final_time_ * static_cast<double>(i) / static_cast<double>(n_steps_);
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> t(n_nodes());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = node(i);
  return t;
}

namespace {

constexpr double kTaylorRadius = 1.0;
constexpr double kAsymptoticRadius = 40.0;

double ml_taylor(double alpha, double z) {
  double sum = 0.0;
  double zk = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double term = zk / std::tgamma(alpha * k + 1.0);
    sum += term;
    if (k > 4 && std::abs(term) < 1e-18 * std::abs(sum)) break;
    zk *= z;
  }
  return sum;
}

// -sum_{k>=1} z^{-k} / Gamma(1 - alpha k); returns NaN when the divergent
// series does not reach the requested accuracy before its terms turn around.
double ml_asymptotic(double alpha, double z) {
  double sum = 0.0;
  double zk = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 400; ++k) {
    zk /= z;
    const double arg = 1.0 - alpha * k;
    // 1/Gamma vanishes at the poles 0, -1, -2, ...
    const bool at_pole = std::abs(arg - std::round(arg)) < 1e-14 && arg <= 0.0;
    const double term = at_pole ? 0.0 : -zk / std::tgamma(arg);
    const double magnitude = std::abs(zk) * (at_pole ? 0.0 : 1.0 / std::abs(std::tgamma(arg)));
    sum += term;
    if (!at_pole) {
      if (magnitude < 1e-16 * std::abs(sum)) return sum;
      if (magnitude > previous && k > 3) break;
      previous = magnitude;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// E_a(-x) = sin(a pi)/(a pi) int_0^inf exp(-(s x)^{1/a}) / (s^2 + 2 s cos(a pi) + 1) ds
double ml_integral(double alpha, double x) {
  using boost::math::quadrature::gauss_kronrod;
  const double c = std::cos(alpha * std::numbers::pi);
  auto integrand = [=](double s) {
    const double e = std::exp(-std::pow(s * x, 1.0 / alpha));
    return e / (s * s + 2.0 * s * c + 1.0);
  };
  // Split where the exponential turns over (s ~ 1/x) and at the Lorentzian
  // peak near s = 1.
  const double knee = 1.0 / x;
  double total = 0.0;
  double a = 0.0;
  for (double b : {std::min(knee, 1.0), std::max(knee, 1.0)}) {
    if (b > a) {
      total += gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, 1e-14);
      a = b;
    }
  }
  total += gauss_kronrod<double, 31>::integrate(
      integrand, a, std::numeric_limits<double>::infinity(), 15, 1e-14);
  return std::sin(alpha * std::numbers::pi) / (alpha * std::numbers::pi) * total;
}

}  // namespace

double mittag_leffler(double alpha, double z) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("mittag_leffler: alpha must lie in (0, 1]");
  }
  if (!(z <= 0.0)) {
    throw std::invalid_argument("mittag_leffler: only z <= 0 is supported");
  }
  if (alpha == 1.0) return std::exp(z);
  if (z == 0.0) return 1.0;
  if (-z <= kTaylorRadius) return ml_taylor(alpha, z);
  if (-z >= kAsymptoticRadius) {
    const double v = ml_asymptotic(alpha, z);
    if (std::isfinite(v)) return v;
  }
  return ml_integral(alpha, -z);
}

std::vector<double> l1_weights(double alpha, std::size_t count) {
  std::vector<double> b(count);
  const double p = 1.0 - alpha;
  for (std::size_t j = 0; j < count; ++j) {
    const double jj = static_cast<double>(j);
    b[j] = std::pow(jj + 1.0, p) - (j == 0 ? 0.0 : std::pow(jj, p));
  }
  return b;
}

std::vector<double> caputo_l1_apply(FracOrder alpha, const TimeGrid& grid,
                                    std::span<const double> samples) {
  const std::size_t n = grid.n_steps();
  if (samples.size() != n + 1) {
    throw std::invalid_argument("caputo_l1_apply: expected " +
                                std::to_string(n + 1) + " samples, got " +
                                std::to_string(samples.size()));
  }
  const double a = alpha.value();
  const double scale = std::pow(grid.step(), -a) / std::tgamma(2.0 - a);
  const auto b = l1_weights(a, n);
  std::vector<double> out(n);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      acc += b[j] * (samples[k - j] - samples[k - j - 1]);
    }
    out[k - 1] = scale * acc;
  }
  return out;
}

std::vector<double> rl_weights(FracOrder alpha, const TimeGrid& grid,
                               std::size_t t_index) {
  if (t_index > grid.n_steps()) {
    throw std::out_of_range("rl_integral: time index out of range");
  }
  std::vector<double> w(t_index + 1, 0.0);
  if (t_index == 0) return w;
  const double a = alpha.value();
  const double scale = std::pow(grid.step(), a) / std::tgamma(a + 2.0);
  const auto pw = [a](double m) { return m <= 0.0 ? 0.0 : std::pow(m, a + 1.0); };
  const double n = static_cast<double>(t_index);
  w[0] = scale * (pw(n - 1.0) - (n - 1.0 - a) * std::pow(n, a));
  for (std::size_t j = 1; j < t_index; ++j) {
    const double m = n - static_cast<double>(j);
    w[j] = scale * (pw(m + 1.0) + pw(m - 1.0) - 2.0 * pw(m));
  }
  w[t_index] = scale;
  return w;
}

double rl_integral(FracOrder alpha, const TimeGrid& grid,
                   std::span<const double> samples, std::size_t t_index) {
  if (samples.size() != grid.n_nodes()) {
    throw std::invalid_argument("rl_integral: sample count does not match grid");
  }
  const auto w = rl_weights(alpha, grid, t_index);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * samples[j];
  return acc;
}

}  // namespace subdiff
