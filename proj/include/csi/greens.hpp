#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csi/grid.hpp"

namespace csi {

/// Line-source transmitters and point receivers around the investigation domain.
struct ArrayConfig {
  std::vector<Point2> transmitters;
  std::vector<Point2> receivers;
  double frequency = 0.0;  // Hz

  double wavenumber() const;  // k0 = omega / c0
  int n_tx() const { return static_cast<int>(transmitters.size()); }
  int n_rx() const { return static_cast<int>(receivers.size()); }

  /// Throws std::invalid_argument unless every antenna lies strictly
  /// outside `domain` and both sets are non-empty.
  void validate(const Grid& domain) const;
};

/// Transmitters at angles 2 pi i / n_t and receivers at 2 pi m / n_r + pi / n_r
/// on a circle of `radius`; the circle must clear the corners of a square
/// domain of side `domain_extent`.
ArrayConfig uniform_array(int n_t, int n_r, double radius, double frequency, double domain_extent);

/// Discretized radiation (receivers x cells) and domain (cells x cells)
/// operators, both carrying the k0^2 factor.
struct GreensOperators {
  Grid grid;
  ArrayConfig array;
  Eigen::MatrixXcd radiation;  // G^R, NR x N
  Eigen::MatrixXcd domain;     // G^S, N x N
};

GreensOperators assemble_operators(const Grid& grid, const ArrayConfig& array);

/// E_i^inc at every cell centre for transmitter i (0-based).
Eigen::VectorXcd incident_field(const ArrayConfig& array, int i, const Grid& grid);

/// All incident fields as columns (N x NT).
Eigen::MatrixXcd incident_fields(const ArrayConfig& array, const Grid& grid);

class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves (I - D[tau] G^S) J_i = D[tau] E_i^inc for one or more excitations
/// (columns of `incident`). Throws IllConditionedError if the condition
/// estimate exceeds 1e12.
Eigen::MatrixXcd solve_state(const GreensOperators& ops, const ContrastMap& contrast,
                             const Eigen::MatrixXcd& incident);

struct SynthesisGridInfo {
  double extent = 0.0;
  int n = 0;
};

struct MeasurementSet {
  ArrayConfig array;
  Eigen::MatrixXcd data;  // NR x NT, column i = E_i^mea
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  SynthesisGridInfo synthesis_grid;
};

/// Noise-free receiver data G^R J_i for the given contrast.
Eigen::MatrixXcd scattered_field(const GreensOperators& ops, const ContrastMap& contrast);

/// Scattered data plus complex white Gaussian noise at `snr_db` per
/// transmitter (infinite SNR disables noise). Transmitter i draws from its
/// own stream seeded with (seed, i).
MeasurementSet synthesize(const GreensOperators& ops, const ContrastMap& reference, double snr_db,
                          std::uint64_t seed);

/// Adds noise in place; exposed for the SNR statistics tests.
void add_measurement_noise(Eigen::MatrixXcd& data, double snr_db, std::uint64_t seed);

}  // namespace csi
