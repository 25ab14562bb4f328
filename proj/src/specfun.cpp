#include "csi/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace csi::specfun {
namespace {

using real_t = long double;

constexpr real_t kPi = std::numbers::pi_v<long double>;
constexpr real_t kEulerGamma = std::numbers::egamma_v<long double>;
constexpr int kMaxTerms = 200;

void check_order(int order) {
  if (order != 0 && order != 1) {
    throw std::invalid_argument("specfun: only orders 0 and 1 are supported");
  }
}

// Ascending series for J0/J1/Y0/Y1. The alternating terms peak near
// I_0(x) so the sum is carried in long double.
struct SeriesValues {
  real_t j0, j1, y0, y1;
};

SeriesValues ascending_series(real_t x, bool want_y) {
  const real_t q = x * x / 4;
  const real_t eps = std::numeric_limits<real_t>::epsilon();

  // t0_k = (-1)^k q^k / (k!)^2,  t1_k = (-1)^k q^k / (k! (k+1)!)
  real_t t0 = 1, t1 = 1;
  real_t j0 = 1, j1 = 1;
  real_t harmonic = 0;  // H_k
  real_t y0_tail = 0;   // sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2
  // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
  real_t y1_tail = 1 - 2 * kEulerGamma;
  for (int k = 1; k < kMaxTerms; ++k) {
    t0 *= -q / (real_t(k) * k);
    t1 *= -q / (real_t(k) * (k + 1));
    j0 += t0;
    j1 += t1;
    harmonic += real_t(1) / k;
    if (want_y) {
      y0_tail -= harmonic * t0;
      y1_tail += (2 * harmonic + real_t(1) / (k + 1) - 2 * kEulerGamma) * t1;
    }
    if (std::fabs(t0) < eps * std::fabs(j0) * 1e-2L &&
        std::fabs(t1) < eps * std::fabs(j1) * 1e-2L && k > 2) {
      break;
    }
  }
  SeriesValues out{};
  out.j0 = j0;
  out.j1 = (x / 2) * j1;
  if (want_y) {
    const real_t log_term = std::log(x / 2);
    out.y0 = (2 / kPi) * ((log_term + kEulerGamma) * out.j0 + y0_tail);
    out.y1 = (2 / kPi) * log_term * out.j1 - 2 / (kPi * x) -
             (x / (2 * kPi)) * y1_tail;
  }
  return out;
}

// Hankel asymptotic expansion: returns (P, Q) for order nu, so that
// J = sqrt(2/(pi x)) (P cos chi - Q sin chi), Y = sqrt(2/(pi x)) (P sin chi + Q cos chi).
void asymptotic_pq(int order, double x, double& p, double& q) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  p = 1.0;
  q = 0.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double a = std::fabs(term);
    if (a > prev_abs || a < 1e-18) {
      break;
    }
    prev_abs = a;
    // k = 1 -> +Q, k = 2 -> -P, k = 3 -> -Q, k = 4 -> +P, ...
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      case 0: p += term; break;
    }
  }
}

void asymptotic(int order, double x, double& j, double& y) {
  double p = 0.0, q = 0.0;
  asymptotic_pq(order, x, p, q);
  const double chi = x - (0.5 * order + 0.25) * std::numbers::pi;
  const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
  const double c = std::cos(chi), s = std::sin(chi);
  j = amp * (p * c - q * s);
  y = amp * (p * s + q * c);
}

}  // namespace

double bessel_j(int order, double x) {
  check_order(order);
  if (!(x >= 0.0)) {
    throw std::invalid_argument("bessel_j: argument must be non-negative");
  }
  if (x < kSeriesCutoff) {
    const auto s = ascending_series(x, false);
    return static_cast<double>(order == 0 ? s.j0 : s.j1);
  }
  double j = 0.0, y = 0.0;
  asymptotic(order, x, j, y);
  return j;
}

double bessel_y(int order, double x) {
  check_order(order);
  if (!(x > 0.0)) {
    throw std::domain_error("bessel_y: argument must be positive");
  }
  if (x < kSeriesCutoff) {
    const auto s = ascending_series(x, true);
    return static_cast<double>(order == 0 ? s.y0 : s.y1);
  }
  double j = 0.0, y = 0.0;
  asymptotic(order, x, j, y);
  return y;
}

std::complex<double> hankel2(int order, double x) {
  check_order(order);
  if (!(x > 0.0)) {
    throw std::domain_error("hankel2: argument must be positive");
  }
  if (x < kSeriesCutoff) {
    const auto s = ascending_series(x, true);
    return order == 0 ? std::complex<double>(double(s.j0), -double(s.y0))
                      : std::complex<double>(double(s.j1), -double(s.y1));
  }
  double j = 0.0, y = 0.0;
  asymptotic(order, x, j, y);
  return {j, -y};
}

}  // namespace csi::specfun
