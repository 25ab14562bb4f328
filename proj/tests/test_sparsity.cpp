#include <doctest.h>

#include <cmath>
#include <random>

#include "csi/sparsity.hpp"

using namespace csi;

namespace {

Eigen::VectorXcd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXcd v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

// chi with ||Thr^chi(z)||_1 = radius by bisection; the map is continuous and
// non-increasing in chi.
double bisect_level(const Eigen::VectorXcd& z, double radius) {
  double lo = 0.0, hi = z.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (l1_norm(soft_threshold(z, mid)) > radius ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("soft_threshold examples") {
  Eigen::VectorXcd z(3);
  z << 3.0, cplx(0.0, 4.0), cplx(0.3, -0.4);
  const Eigen::VectorXcd t = soft_threshold(z, 1.0);
  CHECK(std::abs(t[0] - cplx(2.0, 0.0)) < 1e-15);
  CHECK(std::abs(t[1] - cplx(0.0, 3.0)) < 1e-15);
  CHECK(t[2] == cplx(0.0, 0.0));
  CHECK(soft_threshold(z, 0.0) == z);
  CHECK_THROWS_AS(soft_threshold(z, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(soft_threshold(z, std::nan("")), std::invalid_argument);

  // Phase is preserved and |z| <= chi vanishes.
  std::mt19937_64 rng(4);
  const Eigen::VectorXcd r = random_vector(rng, 200);
  const Eigen::VectorXcd s = soft_threshold(r, 0.8);
  for (Eigen::Index m = 0; m < r.size(); ++m) {
    if (std::abs(r[m]) <= 0.8) {
      CHECK(s[m] == cplx(0.0, 0.0));
    } else {
      CHECK(std::abs(std::abs(s[m]) - (std::abs(r[m]) - 0.8)) < 1e-14);
      CHECK(std::abs(std::arg(s[m]) - std::arg(r[m])) < 1e-12);
    }
  }
}

TEST_CASE("literal threshold rule differs off the real axis") {
  Eigen::VectorXcd z(2);
  z << 3.0, cplx(0.0, 4.0);
  const Eigen::VectorXcd lit = soft_threshold(z, 1.0, ThresholdRule::literal);
  CHECK(std::abs(lit[0] - cplx(2.0, 0.0)) < 1e-15);
  // |4j - 1| = sqrt(17), so the factor is sqrt(17) / (sqrt(17) + 1).
  const double s = std::sqrt(17.0);
  CHECK(std::abs(lit[1] - cplx(0.0, 4.0 * s / (s + 1.0))) < 1e-14);
  CHECK(std::abs(lit[1]) > std::abs(soft_threshold(z, 1.0)[1]));
}

TEST_CASE("project_l1 examples") {
  Eigen::VectorXcd z(2);
  z << 3.0, 1.0;
  const Eigen::VectorXcd p = project_l1(z, 2.0);
  CHECK(std::abs(p[0] - cplx(2.0, 0.0)) < 1e-12);
  CHECK(std::abs(p[1]) < 1e-12);
  CHECK(l1_threshold_level(z, 2.0) == doctest::Approx(1.0));

  // Interior and exact boundary are returned unchanged.
  CHECK(project_l1(z, 5.0) == z);
  CHECK(project_l1(z, 4.0) == z);
  CHECK(l1_threshold_level(z, 4.0) == 0.0);

  CHECK_THROWS_AS(project_l1(z, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(project_l1(z, -2.0), std::invalid_argument);
  CHECK(project_l1(Eigen::VectorXcd(0), 1.0).size() == 0);
}

TEST_CASE("project_l1 matches the bisection oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  int projected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXcd z = random_vector(rng, len(rng), trial % 3 == 0 ? 10.0 : 1.0);
    const double radius = frac(rng) * l1_norm(z);
    const Eigen::VectorXcd p = project_l1(z, radius);
    const Eigen::VectorXcd q = soft_threshold(z, bisect_level(z, radius));
    CHECK((p - q).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(l1_norm(p) - radius) <= 1e-9 * std::max(1.0, radius));
    CHECK((project_l1(p, radius) - p).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, radius));
    ++projected;
  }
  CHECK(projected == 1000);
}

TEST_CASE("ties in magnitude") {
  Eigen::VectorXcd z(5);
  z << 2.0, cplx(0.0, -2.0), cplx(std::sqrt(2.0), std::sqrt(2.0)), 1.0, 1.0;
  for (double radius : {0.3, 1.5, 3.0, 5.0, 6.5}) {
    const Eigen::VectorXcd p = project_l1(z, radius);
    CHECK(std::abs(l1_norm(p) - radius) < 1e-12);
    CHECK((p - soft_threshold(z, bisect_level(z, radius))).cwiseAbs().maxCoeff() < 1e-12);
    // Equal inputs stay equal in magnitude.
    CHECK(std::abs(std::abs(p[0]) - std::abs(p[1])) < 1e-14);
    CHECK(std::abs(std::abs(p[0]) - std::abs(p[2])) < 1e-14);
    CHECK(p[3] == p[4]);
  }
  Eigen::VectorXcd flat = Eigen::VectorXcd::Constant(10, cplx(0.6, 0.8));
  const Eigen::VectorXcd p = project_l1(flat, 4.0);
  CHECK((p.array() - cplx(0.24, 0.32)).abs().maxCoeff() < 1e-14);
}

TEST_CASE("support monotonicity") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXcd z = random_vector(rng, 40);
    double previous_support = 41;
    for (double chi = 0.0; chi < 3.0; chi += 0.1) {
      const Eigen::VectorXcd lo = soft_threshold(z, chi), hi = soft_threshold(z, chi + 0.05);
      for (Eigen::Index m = 0; m < z.size(); ++m)
        if (hi[m] != cplx(0.0, 0.0)) CHECK(lo[m] != cplx(0.0, 0.0));
      const double support = static_cast<double>((lo.array() != cplx(0.0, 0.0)).count());
      CHECK(support <= previous_support);
      previous_support = support;
    }
  }
}

TEST_CASE("projection is non-expansive") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXcd a = random_vector(rng, 30), b = random_vector(rng, 30, trial % 2 ? 0.2 : 3.0);
    const double radius = 0.5 + 0.1 * (trial % 40);
    CHECK((project_l1(a, radius) - project_l1(b, radius)).norm() <= (a - b).norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("projection is the nearest point of the ball") {
  // Against random feasible points, P(z) is never farther from z.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXcd z = random_vector(rng, 12, 2.0);
    const double radius = 1.0;
    const double best = (project_l1(z, radius) - z).norm();
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXcd w = random_vector(rng, 12);
      w *= radius / l1_norm(w) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      CHECK(best <= (w - z).norm() + 1e-12);
    }
  }
}
