#pragma once

// Dense kernels behind the Green-operator assembly and the contrast-source
// operator. Each kernel has a serial reference in kernels::serial and an
// OpenMP version in kernels::parallel; both produce the same result up to
// floating-point summation order. Library code calls kernels::parallel; the
// serial versions exist for tests and benchmarks.

#include <span>

#include <Eigen/Dense>

#include "csi/grid.hpp"

namespace csi::kernels {

namespace serial {

/// k0^2 * integral of G over the equivalent disc of every cell, observed at
/// every cell centre (N x N).
Eigen::MatrixXcd assemble_domain(const Grid& grid, double k0);

/// Same cell integrals observed at the receivers (NR x N).
Eigen::MatrixXcd assemble_radiation(const Grid& grid, std::span<const Point2> receivers, double k0);

/// H0^(2)(k0 |r_n - r_i|)/(4j) for every cell n and source i (N x NT).
Eigen::MatrixXcd line_source_fields(const Grid& grid, std::span<const Point2> sources, double k0);

/// a * b
Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// a^H * b
Eigen::MatrixXcd multiply_adjoint(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace serial

namespace parallel {

Eigen::MatrixXcd assemble_domain(const Grid& grid, double k0);
Eigen::MatrixXcd assemble_radiation(const Grid& grid, std::span<const Point2> receivers, double k0);
Eigen::MatrixXcd line_source_fields(const Grid& grid, std::span<const Point2> sources, double k0);
Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
Eigen::MatrixXcd multiply_adjoint(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace parallel

/// Closed form of k0^2 * int_{disc} G(r, r') ds' over a disc of the given
/// radius, for an observation point at `distance` from the disc centre
/// (inside or outside the disc; 0 gives the self term).
cplx disc_integral(double k0, double radius, double distance);

/// Radius of the disc with the same area as a square cell of side d.
double equivalent_radius(double cell_size);

}  // namespace csi::kernels
