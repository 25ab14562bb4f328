#include "csi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include "csi/specfun.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace csi::kernels {

namespace {

constexpr cplx kJ{0.0, 1.0};

void check_product(Eigen::Index inner_a, Eigen::Index inner_b) {
  if (inner_a != inner_b) throw std::invalid_argument("kernels: inner dimensions differ");
}

// One contiguous block of rows per thread keeps each product a full GEMM.
Eigen::Index block_count(Eigen::Index rows) {
#ifdef _OPENMP
  const Eigen::Index threads = omp_get_max_threads();
#else
  const Eigen::Index threads = 1;
#endif
  return std::max<Eigen::Index>(1, std::min(threads, rows));
}

}  // namespace

double equivalent_radius(double cell_size) { return cell_size / std::sqrt(std::numbers::pi); }

cplx disc_integral(double k0, double radius, double distance) {
  const double ka = k0 * radius;
  const double scale = std::numbers::pi * ka / 2.0;
  if (distance >= radius) {
    // (2 pi a / k0) J1(k0 a) H0(k0 R) times k0^2 / (4j)
    return -kJ * scale * specfun::bessel_j(1, ka) * specfun::hankel2(0, k0 * distance);
  }
  // (2 pi a / k0) H1(k0 a) J0(k0 R) - 4j / k0^2, times k0^2 / (4j)
  return -kJ * scale * specfun::hankel2(1, ka) * specfun::bessel_j(0, k0 * distance) - 1.0;
}

namespace serial {

Eigen::MatrixXcd assemble_domain(const Grid& grid, double k0) {
  const int n = grid.size();
  const double a = equivalent_radius(grid.cell_size());
  Eigen::MatrixXcd g(n, n);
  for (int m = 0; m < n; ++m) {
    const Point2 pm = grid.center(m);
    for (int j = 0; j < n; ++j) {
      const double r = m == j ? 0.0 : distance(pm, grid.center(j));
      g(m, j) = disc_integral(k0, a, r);
    }
  }
  return g;
}

Eigen::MatrixXcd assemble_radiation(const Grid& grid, std::span<const Point2> receivers, double k0) {
  const int n = grid.size();
  const double a = equivalent_radius(grid.cell_size());
  Eigen::MatrixXcd g(static_cast<Eigen::Index>(receivers.size()), n);
  for (std::size_t m = 0; m < receivers.size(); ++m) {
    for (int j = 0; j < n; ++j) {
      g(static_cast<Eigen::Index>(m), j) = disc_integral(k0, a, distance(receivers[m], grid.center(j)));
    }
  }
  return g;
}

Eigen::MatrixXcd line_source_fields(const Grid& grid, std::span<const Point2> sources, double k0) {
  const int n = grid.size();
  Eigen::MatrixXcd e(n, static_cast<Eigen::Index>(sources.size()));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      e(j, static_cast<Eigen::Index>(i)) = specfun::hankel2(0, k0 * distance(sources[i], grid.center(j))) / (4.0 * kJ);
    }
  }
  return e;
}

Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  check_product(a.cols(), b.rows());
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(a.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const cplx bkj = b(k, j);
      for (Eigen::Index i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

Eigen::MatrixXcd multiply_adjoint(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  check_product(a.rows(), b.rows());
  Eigen::MatrixXcd c(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      cplx s = 0.0;
      for (Eigen::Index k = 0; k < a.rows(); ++k) s += std::conj(a(k, i)) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace serial

namespace parallel {

// On a uniform grid G^S(m, n) depends only on |ix_m - ix_n| and |iy_m - iy_n|,
// so the nx * ny distinct values are tabulated once and scattered.
Eigen::MatrixXcd assemble_domain(const Grid& grid, double k0) {
  const int n = grid.size();
  const int nx = grid.nx, ny = grid.ny;
  const double d = grid.cell_size();
  const double a = equivalent_radius(d);
  Eigen::MatrixXcd table(nx, ny);
#pragma omp parallel for schedule(static)
  for (int dy = 0; dy < ny; ++dy) {
    for (int dx = 0; dx < nx; ++dx) {
      const double r = (dx == 0 && dy == 0) ? 0.0 : std::hypot(dx * d, dy * d);
      table(dx, dy) = disc_integral(k0, a, r);
    }
  }
  Eigen::MatrixXcd g(n, n);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const int jx = j % nx, jy = j / nx;
    for (int m = 0; m < n; ++m) {
      const int mx = m % nx, my = m / nx;
      g(m, j) = table(std::abs(mx - jx), std::abs(my - jy));
    }
  }
  return g;
}

Eigen::MatrixXcd assemble_radiation(const Grid& grid, std::span<const Point2> receivers, double k0) {
  const int n = grid.size();
  const auto nr = static_cast<Eigen::Index>(receivers.size());
  const double a = equivalent_radius(grid.cell_size());
  const double c = -std::numbers::pi * k0 * a / 2.0 * specfun::bessel_j(1, k0 * a);
  Eigen::MatrixXcd g(nr, n);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const Point2 pj = grid.center(j);
    for (Eigen::Index m = 0; m < nr; ++m) {
      const double r = distance(receivers[static_cast<std::size_t>(m)], pj);
      g(m, j) = r >= a ? kJ * c * specfun::hankel2(0, k0 * r) : disc_integral(k0, a, r);
    }
  }
  return g;
}

Eigen::MatrixXcd line_source_fields(const Grid& grid, std::span<const Point2> sources, double k0) {
  const int n = grid.size();
  const auto nt = static_cast<Eigen::Index>(sources.size());
  Eigen::MatrixXcd e(n, nt);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const Point2 pj = grid.center(j);
    for (Eigen::Index i = 0; i < nt; ++i) {
      e(j, i) = specfun::hankel2(0, k0 * distance(sources[static_cast<std::size_t>(i)], pj)) / (4.0 * kJ);
    }
  }
  return e;
}

Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  check_product(a.cols(), b.rows());
  Eigen::MatrixXcd c(a.rows(), b.cols());
  const Eigen::Index rows = a.rows();
  const Eigen::Index blocks = block_count(rows);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = rows * blk / blocks, r1 = rows * (blk + 1) / blocks;
    c.middleRows(r0, r1 - r0).noalias() = a.middleRows(r0, r1 - r0) * b;
  }
  return c;
}

Eigen::MatrixXcd multiply_adjoint(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  check_product(a.rows(), b.rows());
  Eigen::MatrixXcd c(a.cols(), b.cols());
  const Eigen::Index cols = a.cols();
  const Eigen::Index blocks = block_count(cols);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index c0 = cols * blk / blocks, c1 = cols * (blk + 1) / blocks;
    c.middleRows(c0, c1 - c0).noalias() = a.middleCols(c0, c1 - c0).adjoint() * b;
  }
  return c;
}

}  // namespace parallel

}  // namespace csi::kernels
