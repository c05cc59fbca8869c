#include "subdiff/greenfn.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace subdiff {

namespace {

using boost::math::quadrature::gauss_kronrod;
constexpr double kPi = std::numbers::pi;

void check_open_order(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(std::string(who) + ": alpha must lie in (0, 1)");
  }
}

double recip_gamma(double x) {
  if (x <= 0.0 && std::abs(x - std::round(x)) < 1e-13) return 0.0;
  return 1.0 / std::tgamma(x);
}

double wright_series(double alpha, double s) {
  double sum = 0.0;
  double pk = 1.0;  // (-s)^k / k!
  int quiet = 0;
  for (int k = 0; k < 300; ++k) {
    const double term = pk * recip_gamma(1.0 - alpha - alpha * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) {
      if (++quiet > 3) break;
    } else {
      quiet = 0;
    }
    pk *= -s / (k + 1);
  }
  return sum;
}

double zolotarev_a(double alpha, double phi) {
  const double p = 1.0 / (1.0 - alpha);
  return std::pow(std::sin(alpha * phi), alpha * p) *
         std::sin((1.0 - alpha) * phi) / std::pow(std::sin(phi), p);
}

constexpr double kLaplaceThreshold = 1e8;

// log M_alpha(s) through the Zolotarev representation, with exp(-sigma A0)
// factored out of the integral.
double log_wright_zolotarev(double alpha, double s) {
  const double p = 1.0 / (1.0 - alpha);
  const double sigma = std::pow(s, p);
  const double a0 = std::pow(alpha, alpha * p) * (1.0 - alpha);
  const double prefactor = alpha * p * std::log(s) - std::log((1.0 - alpha) * kPi) - sigma * a0;
  if (sigma * a0 > kLaplaceThreshold) {
    // a(phi) = a0 (1 + alpha phi^2 / 2 + O(phi^4)) near the minimum at phi = 0.
    return prefactor + std::log(0.5 * a0 * std::sqrt(2.0 * kPi / (sigma * a0 * alpha)));
  }
  auto f = [&](double phi) {
    const double a = zolotarev_a(alpha, phi);
    const double e = sigma * (a - a0);
    if (!(e < 700.0)) return 0.0;
    return a * std::exp(-e);
  };
  const double w = std::min(0.5, 1.0 / std::sqrt(sigma));
  std::array<double, 6> cuts{0.0, w, 3.0 * w, 10.0 * w, 30.0 * w, kPi};
  const double tol = 1e-10;
  double total = 0.0;
  double err_total = 0.0;
  double lo = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double hi = std::min(cuts[i], kPi);
    if (hi <= lo) continue;
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, lo, hi, 6, tol, &err);
    err_total += err;
    lo = hi;
  }
  if (!(total > 0.0) || err_total > 1e-6 * std::max(1.0, sigma * a0) * total) {
    throw QuadratureError("wright_m: quadrature did not converge at s = " +
                          std::to_string(s));
  }
  return prefactor + std::log(total);
}

constexpr double kSeriesLimit = 1.0;

// Log-integrand of the subordination integral in u = log s.
struct SubordinationIntegrand {
  int dim;
  double alpha;
  double r;

  double operator()(double u) const {
    const double s = std::exp(u);
    return log_wright_m(alpha, s) - 0.5 * dim * std::log(4.0 * kPi * s) + u -
           r * r / (4.0 * s);
  }
};

double golden_max(const SubordinationIntegrand& L, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = L(c);
  double fd = L(d);
  for (int it = 0; it < 60 && b - a > 1e-7; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = L(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = L(d);
    }
  }
  return 0.5 * (a + b);
}

double rho_of(double alpha, double r) { return std::pow(r, 2.0 / (2.0 - alpha)); }

}  // namespace

double log_wright_m(double alpha, double s) {
  check_open_order(alpha, "wright_m");
  if (!(s >= 0.0)) throw std::invalid_argument("wright_m: s must be >= 0");
  if (s <= kSeriesLimit) return std::log(wright_series(alpha, s));
  return log_wright_zolotarev(alpha, s);
}

double wright_m(double alpha, double s) {
  check_open_order(alpha, "wright_m");
  if (!(s >= 0.0)) throw std::invalid_argument("wright_m: s must be >= 0");
  if (s <= kSeriesLimit) return wright_series(alpha, s);
  return std::exp(log_wright_zolotarev(alpha, s));
}

double green_decay_exponent(double alpha) {
  return (1.0 - 0.5 * alpha) * std::pow(0.5 * alpha, alpha / (2.0 - alpha));
}

double log_reduced_green_oracle(int dim, double alpha, double r) {
  if (dim < 1 || dim > 6) {
    throw std::invalid_argument("reduced green oracle: dimension out of range");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("reduced green oracle: alpha must lie in (0, 1]");
  }
  if (!(r > 0.0)) throw std::invalid_argument("reduced green oracle: r must be > 0");
  if (alpha == 1.0) return -0.5 * dim * std::log(4.0 * kPi) - 0.25 * r * r;

  const SubordinationIntegrand L{dim, alpha, r};
  const double a0 = std::pow(alpha, alpha / (1.0 - alpha)) * (1.0 - alpha);
  const double guess = (1.0 - alpha) / (2.0 - alpha) *
                       std::log(r * r * (1.0 - alpha) / (4.0 * a0));

  double u_best = guess;
  double l_best = L(guess);
  for (double u : {std::log(r * r / (2.0 * dim)), 0.0}) {
    const double v = L(u);
    if (v > l_best) {
      l_best = v;
      u_best = u;
    }
  }

  constexpr double kStep = 0.25;
  constexpr double kDrop = 70.0;
  double u_hi = u_best;
  for (int i = 0; i < 400; ++i) {
    u_hi += kStep;
    const double v = L(u_hi);
    if (v > l_best) {
      l_best = v;
      u_best = u_hi;
    } else if (v < l_best - kDrop) {
      break;
    }
  }
  double u_lo = u_best;
  for (int i = 0; i < 400; ++i) {
    u_lo -= kStep;
    const double v = L(u_lo);
    if (v > l_best) {
      l_best = v;
      u_best = u_lo;
    } else if (v < l_best - kDrop) {
      break;
    }
  }
  const double u_pk = golden_max(L, std::max(u_lo, u_best - kStep),
                                 std::min(u_hi, u_best + kStep));
  const double l_pk = std::max(l_best, L(u_pk));

  auto f = [&](double u) { return std::exp(L(u) - l_pk); };
  std::vector<double> cuts{u_lo};
  if (u_pk - 1.0 > u_lo + kStep) cuts.push_back(u_pk - 1.0);
  if (u_pk > u_lo && u_pk < u_hi) cuts.push_back(u_pk);
  if (u_pk + 1.0 < u_hi - kStep) cuts.push_back(u_pk + 1.0);
  cuts.push_back(u_hi);
  double total = 0.0;
  double err_total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[i - 1], cuts[i], 8,
                                                  1e-8, &err);
    err_total += err;
  }
  if (!(total > 0.0) || err_total > 1e-6 * total) {
    throw QuadratureError("reduced green oracle: quadrature did not converge at r = " +
                          std::to_string(r));
  }
  return l_pk + std::log(total);
}

double reduced_green_oracle(int d, double alpha, double r) {
  if (d != 2 && d != 3) {
    throw std::invalid_argument("reduced_green_oracle: d must be 2 or 3");
  }
  return std::exp(log_reduced_green_oracle(d, alpha, r));
}

double reduced_green_oracle_derivative(int d, double alpha, double r) {
  if (d != 2 && d != 3) {
    throw std::invalid_argument("reduced_green_oracle_derivative: d must be 2 or 3");
  }
  return -2.0 * kPi * r * std::exp(log_reduced_green_oracle(d + 2, alpha, r));
}

GreenCoeffs fit_green_coeffs(int d, double alpha, int N) {
  if (d != 2 && d != 3) throw std::invalid_argument("fit_green_coeffs: d must be 2 or 3");
  if (N < 1 || N > 5) throw std::invalid_argument("fit_green_coeffs: N must lie in 1..5");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("fit_green_coeffs: alpha must lie in (0, 1]");
  }

  constexpr int kSamples = 40;
  constexpr int kExtended = 8;
  constexpr int kLogTerms = 6;
  const double r_lo = 20.0;
  const double r_hi = 200.0;

  Eigen::VectorXd rho(kSamples), log1(kSamples), log2(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const double r = r_lo * std::pow(r_hi / r_lo, double(i) / (kSamples - 1));
    rho(i) = rho_of(alpha, r);
    log1(i) = log_reduced_green_oracle(1, alpha, r);
    log2(i) = log_reduced_green_oracle(2, alpha, r);
  }
  const double rho_min = rho.minCoeff();
  const double rho_max = rho.maxCoeff();

  // log Psi_2 + (1-alpha) log rho = -a0 rho + sum_k c_k rho^{-k}
  Eigen::MatrixXd A(kSamples, kLogTerms + 1);
  Eigen::VectorXd y(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    A(i, 0) = -rho(i) / rho_max;
    for (int k = 0; k < kLogTerms; ++k) A(i, k + 1) = std::pow(rho_min / rho(i), k);
    y(i) = log2(i) + (1.0 - alpha) * std::log(rho(i));
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);

  GreenCoeffs out;
  out.d = d;
  out.alpha = alpha;
  out.a0 = c(0) / rho_max;

  auto linear_fit = [&](const Eigen::VectorXd& logs, double power) {
    Eigen::MatrixXd B(kSamples, kExtended);
    Eigen::VectorXd rhs(kSamples);
    for (int i = 0; i < kSamples; ++i) {
      const double F = std::exp(logs(i) + out.a0 * rho(i) + power * std::log(rho(i)));
      for (int k = 0; k < kExtended; ++k) B(i, k) = std::pow(rho_min / rho(i), k) / F;
      rhs(i) = 1.0;
    }
    const Eigen::VectorXd a = B.colPivHouseholderQr().solve(rhs);
    const double resid = (B * a - rhs).cwiseAbs().maxCoeff();
    if (!(resid < 1e-7)) {
      throw QuadratureError("fit_green_coeffs: oracle residual " + std::to_string(resid) +
                            " exceeds tolerance");
    }
    std::vector<double> coef(N);
    for (int k = 0; k < N; ++k) coef[k] = a(k) * std::pow(rho_min, k);
    return coef;
  };
  out.a1 = linear_fit(log1, 0.5 * (1.0 - alpha));
  out.a2 = linear_fit(log2, 1.0 - alpha);

  if (!(out.a0 > 0.0 && out.a0 < 1.0) || !(out.a1[0] > 0.0) || !(out.a2[0] > 0.0)) {
    throw QuadratureError("fit_green_coeffs: fitted coefficients violate positivity");
  }
  return out;
}

namespace {

void check_terms(const GreenCoeffs& c, int N) {
  if (N < 1 || N > static_cast<int>(c.a1.size()) || N > static_cast<int>(c.a2.size())) {
    throw std::invalid_argument("green series: N exceeds the available coefficients");
  }
}

double exponent_e(double alpha, int k) {
  return -(1.0 - alpha + 2.0 * k) / (2.0 - alpha);
}

double exponent_f(double alpha, int k) {
  return -(2.0 - 2.0 * alpha + 2.0 * k) / (2.0 - alpha);
}

}  // namespace

double reduced_green_series_1d(const GreenCoeffs& c, int N, double r) {
  check_terms(c, N);
  const double q = 2.0 / (2.0 - c.alpha);
  double sum = 0.0;
  for (int k = 0; k < N; ++k) sum += c.a1[k] * std::pow(r, exponent_e(c.alpha, k));
  return std::exp(-c.a0 * std::pow(r, q)) * sum;
}

double reduced_green_series(const GreenCoeffs& c, int N, double r) {
  check_terms(c, N);
  if (!(r > 0.0)) throw std::invalid_argument("reduced_green_series: r must be > 0");
  const double alpha = c.alpha;
  const double q = 2.0 / (2.0 - alpha);
  const double decay = std::exp(-c.a0 * std::pow(r, q));
  double sum = 0.0;
  if (c.d == 2) {
    for (int k = 0; k < N; ++k) sum += c.a2[k] * std::pow(r, exponent_f(alpha, k));
    return decay * sum;
  }
  for (int k = 0; k < N; ++k) {
    const double e = exponent_e(alpha, k);
    sum += c.a1[k] * (c.a0 * q * std::pow(r, q - 2.0) - e / (r * r)) * std::pow(r, e);
  }
  return decay * sum / (2.0 * kPi);
}

double s_kernel(int d, const GreenCoeffs& c, int N, double y) {
  check_terms(c, N);
  if (!(y > 0.0)) throw std::invalid_argument("s_kernel: y must be > 0");
  const double alpha = c.alpha;
  const double q = 2.0 / (2.0 - alpha);
  const double r = std::sqrt(y);
  const double rq = std::pow(r, q);
  const double decay = std::exp(-c.a0 * rq);
  if (decay == 0.0) return 0.0;
  double sum = 0.0;
  if (d == 2) {
    for (int k = 0; k < N; ++k) {
      const double f = exponent_f(alpha, k);
      sum += c.a2[k] * (-c.a0 * q * rq + f) * std::pow(r, f - 2.0);
    }
    return decay * sum;
  }
  if (d == 3) {
    const double g = c.a0 * q;
    for (int k = 0; k < N; ++k) {
      const double e = exponent_e(alpha, k);
      const double lead = g * rq - e;  // r^{2-e} times the bracket of Psi_3
      const double dlead = g * q * rq;  // r d/dr of lead
      sum += c.a1[k] * (-g * rq * lead + dlead + (e - 2.0) * lead) * std::pow(r, e - 4.0);
    }
    return decay * sum / (2.0 * kPi);
  }
  throw std::invalid_argument("s_kernel: d must be 2 or 3");
}

double green_fit_residual(const GreenCoeffs& c, int N, double r_lo, double r_hi,
                          int samples) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double r = r_lo * std::pow(r_hi / r_lo, double(i) / std::max(1, samples - 1));
    const double exact = reduced_green_oracle(c.d, c.alpha, r);
    worst = std::max(worst, std::abs(reduced_green_series(c, N, r) - exact) / exact);
  }
  return worst;
}

void write_green_coeffs(std::ostream& out, const GreenCoeffs& c) {
  out.precision(17);
  out << "d " << c.d << "\nalpha " << c.alpha << "\nN " << c.terms() << "\na0 " << c.a0
      << "\na1";
  for (double v : c.a1) out << ' ' << v;
  out << "\na2";
  for (double v : c.a2) out << ' ' << v;
  out << '\n';
}

GreenCoeffs read_green_coeffs(std::istream& in) {
  GreenCoeffs c;
  int n = -1;
  std::string line;
  auto fail = [](const std::string& what) {
    throw std::runtime_error("green coefficient table: " + what);
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "d") {
      ls >> c.d;
    } else if (key == "alpha") {
      ls >> c.alpha;
    } else if (key == "N") {
      ls >> n;
    } else if (key == "a0") {
      ls >> c.a0;
    } else if (key == "a1" || key == "a2") {
      auto& dst = key == "a1" ? c.a1 : c.a2;
      for (double v; ls >> v;) dst.push_back(v);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (n < 1 || static_cast<int>(c.a1.size()) != n || static_cast<int>(c.a2.size()) != n) {
    fail("coefficient count mismatch");
  }
  if (c.d != 2 && c.d != 3) fail("d must be 2 or 3");
  return c;
}

template <int Dim>
ApproxFundamental<Dim>::ApproxFundamental(std::shared_ptr<const GreenCoeffs> coeffs,
                                          int N, SourcePoint<Dim> source, double gamma0)
    : coeffs_(std::move(coeffs)), N_(N), source_(std::move(source)), gamma0_(gamma0) {
  if (!coeffs_ || coeffs_->d != Dim) {
    throw std::invalid_argument("approx_fundamental: coefficient dimension mismatch");
  }
  check_terms(*coeffs_, N_);
  if (!(gamma0_ > 0.0)) throw std::invalid_argument("approx_fundamental: gamma0 must be > 0");
}

template <int Dim>
double ApproxFundamental<Dim>::value(const Vec<Dim>& x, double t) const {
  if (!(t > source_.t0)) throw std::domain_error("approx_fundamental: t must exceed t0");
  const double tau = gamma0_ * std::pow(t - source_.t0, coeffs_->alpha);
  const double r = (x - source_.x0).norm() / std::sqrt(tau);
  if (!(r > 0.0)) throw std::domain_error("approx_fundamental: x coincides with x0");
  return reduced_green_series(*coeffs_, N_, r) * std::pow(tau, -0.5 * Dim);
}

template <int Dim>
Vec<Dim> ApproxFundamental<Dim>::grad(const Vec<Dim>& x, double t) const {
  if (!(t > source_.t0)) throw std::domain_error("approx_fundamental: t must exceed t0");
  const double tau = gamma0_ * std::pow(t - source_.t0, coeffs_->alpha);
  const Vec<Dim> dx = x - source_.x0;
  const double y = dx.squaredNorm() / tau;
  if (!(y > 0.0)) throw std::domain_error("approx_fundamental: x coincides with x0");
  return dx * (s_kernel(Dim, *coeffs_, N_, y) * std::pow(tau, -0.5 * (Dim + 2)));
}

template <int Dim>
double ApproxFundamental<Dim>::value_or_zero(const Vec<Dim>& x, double t) const {
  return t > source_.t0 ? value(x, t) : 0.0;
}

template <int Dim>
Vec<Dim> ApproxFundamental<Dim>::grad_or_zero(const Vec<Dim>& x, double t) const {
  return t > source_.t0 ? grad(x, t) : Vec<Dim>::Zero();
}

template class ApproxFundamental<2>;
template class ApproxFundamental<3>;

struct GreenTable::Impl {
  boost::math::interpolators::cardinal_cubic_b_spline<double> log_psi;
  boost::math::interpolators::cardinal_cubic_b_spline<double> log_psi_up;
};

GreenTable::GreenTable(int d, double alpha, double r_min, double r_max, int samples)
    : d_(d), alpha_(alpha), r_min_(r_min), r_max_(r_max) {
  if (d != 2 && d != 3) throw std::invalid_argument("GreenTable: d must be 2 or 3");
  if (!(r_min > 0.0 && r_max > r_min) || samples < 8) {
    throw std::invalid_argument("GreenTable: bad radius range");
  }
  const double v0 = std::log(r_min);
  const double h = (std::log(r_max) - v0) / (samples - 1);
  std::vector<double> lo(samples), up(samples);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < samples; ++i) {
    const double r = std::exp(v0 + h * i);
    lo[i] = log_reduced_green_oracle(d, alpha, r);
    up[i] = log_reduced_green_oracle(d + 2, alpha, r);
  }
  impl_ = std::make_unique<Impl>(
      Impl{{lo.begin(), lo.end(), v0, h}, {up.begin(), up.end(), v0, h}});
}

GreenTable::~GreenTable() = default;
GreenTable::GreenTable(GreenTable&&) noexcept = default;
GreenTable& GreenTable::operator=(GreenTable&&) noexcept = default;

double GreenTable::value(double r) const {
  if (r > r_max_) return 0.0;
  if (r < r_min_) return reduced_green_oracle(d_, alpha_, r);
  return std::exp(impl_->log_psi(std::log(r)));
}

double GreenTable::derivative(double r) const {
  if (r > r_max_) return 0.0;
  if (r < r_min_) return reduced_green_oracle_derivative(d_, alpha_, r);
  return -2.0 * kPi * r * std::exp(impl_->log_psi_up(std::log(r)));
}

ExactFundamental2::ExactFundamental2(std::shared_ptr<const GreenTable> table, Vec<2> x0,
                                     double gamma0)
    : table_(std::move(table)), x0_(std::move(x0)), gamma0_(gamma0) {
  if (!table_ || table_->dim() != 2) {
    throw std::invalid_argument("ExactFundamental2: needs a 2D table");
  }
}

double ExactFundamental2::value_or_zero(const Vec<2>& x, double t) const {
  if (!(t > 0.0)) return 0.0;
  const double tau = gamma0_ * std::pow(t, table_->alpha());
  return table_->value((x - x0_).norm() / std::sqrt(tau)) / tau;
}

Vec<2> ExactFundamental2::grad_or_zero(const Vec<2>& x, double t) const {
  if (!(t > 0.0)) return Vec<2>::Zero();
  const double tau = gamma0_ * std::pow(t, table_->alpha());
  const Vec<2> dx = x - x0_;
  const double dist = dx.norm();
  const double dpsi = table_->derivative(dist / std::sqrt(tau));
  return dx * (dpsi / (dist * std::pow(tau, 1.5)));
}

}  // namespace subdiff
