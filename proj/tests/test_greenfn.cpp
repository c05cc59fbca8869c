#include "subdiff/fracmath.hpp"
#include "subdiff/greenfn.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace subdiff;

namespace {

constexpr double kPi = std::numbers::pi;

const GreenCoeffs& coeffs2() {
  static const GreenCoeffs c = fit_green_coeffs(2, 0.5, 5);
  return c;
}

const GreenCoeffs& coeffs3() {
  static const GreenCoeffs c = fit_green_coeffs(3, 0.5, 3);
  return c;
}

double loglog_slope(const GreenCoeffs& c, int N, double r1, double r2) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    const double r = r1 * std::pow(r2 / r1, i / (n - 1.0));
    const double e = std::abs(reduced_green_series(c, N, r) / reduced_green_oracle(2, c.alpha, r) - 1.0);
    const double x = std::log(r), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Psi_2 by the Hankel transform of E_alpha(-xi^2), with the slowly decaying
// part c / (1 + xi^2) subtracted and added back as c K0(r).
double hankel_psi2(double alpha, double r, int zeros) {
  using boost::math::cyl_bessel_j;
  const double c = 1.0 / std::tgamma(1.0 - alpha);
  auto f = [&](double x) {
    return (mittag_leffler(alpha, -x * x) - c / (1.0 + x * x)) * x * cyl_bessel_j(0, r * x);
  };
  double total = 0.0, lo = 0.0;
  for (int k = 1; k <= zeros; ++k) {
    const double hi = boost::math::cyl_bessel_j_zero(0.0, k) / r;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 6, 1e-12);
    lo = hi;
  }
  return (total + c * boost::math::cyl_bessel_k(0, r)) / (2.0 * kPi);
}

}  // namespace

TEST_CASE("wright M at half order is a half Gaussian") {
  for (double s : {0.0, 0.3, 0.99, 1.5, 4.0, 12.0}) {
    CHECK(wright_m(0.5, s) == doctest::Approx(std::exp(-s * s / 4.0) / std::sqrt(kPi)).epsilon(1e-10));
  }
  CHECK(log_wright_m(0.5, 1e4) == doctest::Approx(-2.5e7 - 0.5 * std::log(kPi)).epsilon(1e-12));
}

TEST_CASE("oracle reduces to the heat kernel at alpha = 1") {
  for (double r : {0.1, 1.0, 3.0, 8.0}) {
    CHECK(reduced_green_oracle(2, 1.0, r) ==
          doctest::Approx(std::exp(-r * r / 4.0) / (4.0 * kPi)).epsilon(1e-12));
    CHECK(reduced_green_oracle(3, 1.0, r) ==
          doctest::Approx(std::exp(-r * r / 4.0) / std::pow(4.0 * kPi, 1.5)).epsilon(1e-12));
  }
}

TEST_CASE("golden value Psi_2(0.5, 1)") {
  CHECK(reduced_green_oracle(2, 0.5, 1.0) == doctest::Approx(0.0632911907498449).epsilon(1e-10));
}

TEST_CASE("golden value agrees with an independent Hankel quadrature") {
  CHECK(hankel_psi2(0.5, 1.0, 600) == doctest::Approx(0.0632911907498449).epsilon(1e-6));
}

TEST_CASE("three-dimensional oracle from the one-dimensional derivative") {
  for (double alpha : {0.5, 0.8}) {
    for (double r : {0.5, 2.0, 6.0}) {
      const double h = 1e-4 * r;
      const double d1 = (std::exp(log_reduced_green_oracle(1, alpha, r + h)) -
                         std::exp(log_reduced_green_oracle(1, alpha, r - h))) / (2.0 * h);
      CHECK(reduced_green_oracle(3, alpha, r) == doctest::Approx(-d1 / (2.0 * kPi * r)).epsilon(1e-6));
    }
  }
}

TEST_CASE("oracle derivative matches finite differences") {
  for (double r : {0.7, 3.0, 12.0}) {
    const double h = 1e-4 * r;
    const double fd = (reduced_green_oracle(2, 0.5, r + h) - reduced_green_oracle(2, 0.5, r - h)) / (2.0 * h);
    CHECK(reduced_green_oracle_derivative(2, 0.5, r) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("oracle argument checks") {
  CHECK_THROWS_AS(reduced_green_oracle(4, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(reduced_green_oracle(2, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_green_coeffs(2, 0.5, 9), std::invalid_argument);
}

TEST_CASE("fitted coefficients at alpha = 0.5") {
  const auto& c = coeffs2();
  CHECK(c.a0 == doctest::Approx(green_decay_exponent(0.5)).epsilon(1e-10));
  CHECK(c.a0 == doctest::Approx(0.472470393710577).epsilon(1e-10));
  CHECK(c.a0 > 0.0);
  CHECK(c.a0 < 1.0);
  CHECK(c.a1[0] == doctest::Approx(std::pow(2.0, 1.0 / 6.0) / std::sqrt(3.0 * kPi)).epsilon(1e-8));
  CHECK(c.a1[1] == doctest::Approx(-0.112854359529).epsilon(1e-6));
  CHECK(c.a1[2] == doctest::Approx(0.136850434).epsilon(1e-5));
  CHECK(c.a2[0] == doctest::Approx(0.115771813463).epsilon(1e-8));
  CHECK(c.a2[1] == doctest::Approx(-0.0204195916239).epsilon(1e-6));
  CHECK(c.a2[2] == doctest::Approx(0.00180188816787).epsilon(1e-4));
}

TEST_CASE("fit reproduces the Gaussian at alpha = 1") {
  const auto c = fit_green_coeffs(2, 1.0, 1);
  CHECK(c.a0 == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(c.a2[0] == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-10));
}

TEST_CASE("nested fits: residual monotone and a0 independent of N") {
  const auto c1 = fit_green_coeffs(2, 0.5, 1);
  const auto c2 = fit_green_coeffs(2, 0.5, 2);
  const auto c3 = fit_green_coeffs(2, 0.5, 3);
  CHECK(std::abs(c1.a0 - c3.a0) < 1e-4);
  CHECK(std::abs(c2.a0 - c3.a0) < 1e-4);
  const double r1 = green_fit_residual(c1, 1, 5.0, 30.0);
  const double r2 = green_fit_residual(c2, 2, 5.0, 30.0);
  const double r3 = green_fit_residual(c3, 3, 5.0, 30.0);
  CHECK(r3 <= r2);
  CHECK(r2 <= r1);
}

TEST_CASE("series accuracy and decay") {
  const auto& c = coeffs2();
  CHECK(std::abs(reduced_green_series(c, 3, 10.0) / reduced_green_oracle(2, 0.5, 10.0) - 1.0) <= 1e-3);
  CHECK(reduced_green_series(c, 3, 100.0) <= 1e-30);
  CHECK(reduced_green_series(c, 3, 100.0) > 0.0);
}

TEST_CASE("truncation error slope") {
  const auto& c = coeffs2();
  for (int N : {1, 3}) {
    const double expect = -2.0 * N / 1.5;
    CHECK(std::abs(loglog_slope(c, N, 8.0, 30.0) / expect - 1.0) < 0.15);
  }
  CHECK(std::abs(loglog_slope(c, 2, 30.0, 100.0) / (-4.0 / 1.5) - 1.0) < 0.15);
}

TEST_CASE("series positive beyond r = 5") {
  for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
    const auto c = fit_green_coeffs(2, alpha, 3);
    for (int N = 1; N <= 3; ++N) {
      for (double r = 5.0; r < 60.0; r *= 1.2) CHECK(reduced_green_series(c, N, r) > 0.0);
    }
  }
}

TEST_CASE("three-dimensional series is the termwise derivative of the one-dimensional series") {
  const auto& c = coeffs3();
  const double alpha = c.alpha;
  const double q = 2.0 / (2.0 - alpha);
  for (int N = 1; N <= 3; ++N) {
    for (double r : {6.0, 10.0, 25.0}) {
      double d1 = 0.0;
      for (int k = 0; k < N; ++k) {
        const double e = -(1.0 - alpha + 2.0 * k) / (2.0 - alpha);
        d1 += c.a1[k] * std::exp(-c.a0 * std::pow(r, q)) * std::pow(r, e - 1.0) *
              (e - c.a0 * q * std::pow(r, q));
      }
      CHECK(reduced_green_series(c, N, r) == doctest::Approx(-d1 / (2.0 * kPi * r)).epsilon(1e-10));
    }
  }
}

TEST_CASE("s_kernel matches finite differences of the series") {
  for (const GreenCoeffs* c : {&coeffs2(), &coeffs3()}) {
    for (int N = 1; N <= 3; ++N) {
      const double x = 8.0, h = 1e-4;
      const double fd = (reduced_green_series(*c, N, x + h) - reduced_green_series(*c, N, x - h)) / (2.0 * h);
      CHECK(x * s_kernel(c->d, *c, N, x * x) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("s_kernel signs") {
  for (double y = 1e-2; y <= 1e4; y *= 1.5) CHECK(s_kernel(2, coeffs2(), 1, y) < 0.0);
  for (int N = 1; N <= 3; ++N) {
    for (double y = 100.0; y < 1e4; y *= 1.7) CHECK(s_kernel(3, coeffs3(), N, y) < 0.0);
  }
}

TEST_CASE("coefficient table round trip") {
  std::stringstream ss;
  write_green_coeffs(ss, coeffs2());
  const auto back = read_green_coeffs(ss);
  CHECK(back.d == 2);
  CHECK(back.alpha == coeffs2().alpha);
  CHECK(back.a0 == coeffs2().a0);
  CHECK(back.a2 == coeffs2().a2);
  CHECK(back.a1 == coeffs2().a1);
}

TEST_CASE("approximate fundamental solution: symmetry, direction and scaling") {
  const auto c = std::make_shared<const GreenCoeffs>(coeffs2());
  const Vec<2> x0(2.0, 0.5);
  const ApproxFundamental<2> psi(c, 3, SourcePoint<2>{x0, 0.0}, 1.3);
  const Vec<2> v(0.6, -1.1);
  const double th = 0.7;
  const Vec<2> w(std::cos(th) * v.x() - std::sin(th) * v.y(), std::sin(th) * v.x() + std::cos(th) * v.y());
  CHECK(psi.value(x0 + v, 0.4) == doctest::Approx(psi.value(x0 + w, 0.4)).epsilon(1e-13));

  const ApproxFundamental<2> psi1(c, 1, SourcePoint<2>{x0, 0.0}, 1.0);
  const Vec<2> g = psi1.grad(x0 + v, 0.5);
  CHECK(g.dot(-v) > 0.0);
  CHECK(std::abs(g.x() * v.y() - g.y() * v.x()) < 1e-12 * g.norm() * v.norm());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < 5; ++i) {
    const double lam = u(rng), t = u(rng) * 0.5;
    const double scaled = psi.value(x0 + lam * v, std::pow(lam, 2.0 / 0.5) * t);
    CHECK(scaled == doctest::Approx(psi.value(x0 + v, t) / (lam * lam)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(psi.value(x0 + v, 0.0), std::domain_error);
  CHECK(psi.value_or_zero(x0 + v, 0.0) == 0.0);
}

TEST_CASE("series gradient error shrinks as the source recedes") {
  const auto table = std::make_shared<const GreenTable>(2, 0.5);
  const auto c = std::make_shared<const GreenCoeffs>(coeffs2());
  double prev = INFINITY;
  for (double R : {2.0, 3.0, 4.5}) {
    const Vec<2> x0(R, 0.0);
    const ApproxFundamental<2> approx(c, 2, SourcePoint<2>{x0, 0.0}, 1.0);
    const ExactFundamental2 exact(table, x0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 64; ++k) {
      const double s = 2.0 * kPi * k / 64.0;
      const Vec<2> x(std::cos(s), std::sin(s));
      for (double t : {0.25, 0.5, 1.0}) {
        worst = std::max(worst, (approx.grad(x, t) - exact.grad_or_zero(x, t)).norm() /
                                    exact.grad_or_zero(x, t).norm());
      }
    }
    CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("green table interpolates the oracle") {
  const GreenTable t(2, 0.5);
  for (double r : {0.08, 0.5, 1.0, 3.3, 17.0, 90.0}) {
    CHECK(t.value(r) == doctest::Approx(reduced_green_oracle(2, 0.5, r)).epsilon(1e-7));
    CHECK(t.derivative(r) == doctest::Approx(reduced_green_oracle_derivative(2, 0.5, r)).epsilon(1e-6));
  }
  CHECK(t.value(300.0) == 0.0);
}
