#include "csi/greens.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "csi/kernels.hpp"

namespace csi {

double ArrayConfig::wavenumber() const {
  return 2.0 * std::numbers::pi * frequency / kSpeedOfLight;
}

void ArrayConfig::validate(const Grid& domain) const {
  if (transmitters.empty() || receivers.empty()) {
    throw std::invalid_argument("ArrayConfig: need at least one transmitter and one receiver");
  }
  if (!(frequency > 0.0)) throw std::invalid_argument("ArrayConfig: frequency must be positive");
  const auto inside = [&](const Point2& p) {
    return std::fabs(p.x) <= 0.5 * domain.extent_x && std::fabs(p.y) <= 0.5 * domain.extent_y;
  };
  for (const auto& p : transmitters)
    if (inside(p)) throw std::invalid_argument("ArrayConfig: transmitter inside the investigation domain");
  for (const auto& p : receivers)
    if (inside(p)) throw std::invalid_argument("ArrayConfig: receiver inside the investigation domain");
}

ArrayConfig uniform_array(int n_t, int n_r, double radius, double frequency, double domain_extent) {
  if (n_t < 1 || n_r < 1) throw std::invalid_argument("uniform_array: need n_t >= 1 and n_r >= 1");
  if (!(frequency > 0.0)) throw std::invalid_argument("uniform_array: frequency must be positive");
  const double half_diagonal = domain_extent / std::sqrt(2.0);
  if (!(radius > half_diagonal)) {
    throw std::invalid_argument("uniform_array: radius must exceed the domain half-diagonal");
  }
  ArrayConfig a;
  a.frequency = frequency;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < n_t; ++i) {
    const double phi = two_pi * i / n_t;
    a.transmitters.push_back({radius * std::cos(phi), radius * std::sin(phi)});
  }
  for (int m = 0; m < n_r; ++m) {
    const double phi = two_pi * m / n_r + std::numbers::pi / n_r;
    a.receivers.push_back({radius * std::cos(phi), radius * std::sin(phi)});
  }
  return a;
}

GreensOperators assemble_operators(const Grid& grid, const ArrayConfig& array) {
  array.validate(grid);
  const double k0 = array.wavenumber();
  GreensOperators ops;
  ops.grid = grid;
  ops.array = array;
  ops.domain = kernels::parallel::assemble_domain(grid, k0);
  ops.radiation = kernels::parallel::assemble_radiation(grid, array.receivers, k0);
  return ops;
}

Eigen::VectorXcd incident_field(const ArrayConfig& array, int i, const Grid& grid) {
  if (i < 0 || i >= array.n_tx()) throw std::invalid_argument("incident_field: transmitter index out of range");
  const Point2 src = array.transmitters[static_cast<std::size_t>(i)];
  return kernels::parallel::line_source_fields(grid, std::span<const Point2>(&src, 1), array.wavenumber()).col(0);
}

Eigen::MatrixXcd incident_fields(const ArrayConfig& array, const Grid& grid) {
  return kernels::parallel::line_source_fields(grid, array.transmitters, array.wavenumber());
}

Eigen::MatrixXcd solve_state(const GreensOperators& ops, const ContrastMap& contrast,
                             const Eigen::MatrixXcd& incident) {
  const Eigen::Index n = ops.grid.size();
  if (contrast.values.size() != n || incident.rows() != n) {
    throw std::invalid_argument("solve_state: dimension mismatch");
  }
  const Eigen::VectorXcd& tau = contrast.values;
  const Eigen::MatrixXcd rhs = tau.asDiagonal() * incident;
  if (tau.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXcd::Zero(n, incident.cols());

  Eigen::MatrixXcd system = -(tau.asDiagonal() * ops.domain);
  system.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    throw IllConditionedError("solve_state: system is singular or ill-conditioned (rcond " +
                              std::to_string(rcond) + ")");
  }
  Eigen::MatrixXcd currents = lu.solve(rhs);
  // One step of iterative refinement keeps the residual at the 1e-10 level
  // for moderately conditioned systems.
  const Eigen::MatrixXcd residual = rhs - system * currents;
  currents += lu.solve(residual);
  const double res = (rhs - system * currents).norm();
  if (res > 1e-10 * rhs.norm()) {
    throw IllConditionedError("solve_state: residual above tolerance");
  }
  return currents;
}

Eigen::MatrixXcd scattered_field(const GreensOperators& ops, const ContrastMap& contrast) {
  const Eigen::MatrixXcd currents = solve_state(ops, contrast, incident_fields(ops.array, ops.grid));
  return kernels::parallel::multiply(ops.radiation, currents);
}

void add_measurement_noise(Eigen::MatrixXcd& data, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  if (std::isnan(snr_db)) throw std::invalid_argument("add_measurement_noise: SNR is NaN");
  const double rows = static_cast<double>(data.rows());
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double power = data.col(i).squaredNorm() * std::pow(10.0, -snr_db / 10.0) / rows;
    const double sigma = std::sqrt(power / 2.0);
    for (Eigen::Index m = 0; m < data.rows(); ++m) {
      const double re = normal(rng);
      const double im = normal(rng);
      data(m, i) += cplx(sigma * re, sigma * im);
    }
  }
}

MeasurementSet synthesize(const GreensOperators& ops, const ContrastMap& reference, double snr_db,
                          std::uint64_t seed) {
  MeasurementSet out;
  out.array = ops.array;
  out.snr_db = snr_db;
  out.seed = seed;
  out.synthesis_grid = {ops.grid.extent_x, ops.grid.nx};
  out.data = scattered_field(ops, reference);
  add_measurement_noise(out.data, snr_db, seed);
  return out;
}

}  // namespace csi
