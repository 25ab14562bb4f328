#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csi/greens.hpp"
#include "csi/grid.hpp"
#include "csi/inversion.hpp"

namespace csi {

enum class Algorithm { apasd, nlw };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm algo);

struct GridSpec {
  double extent = 7.5;
  int n = 30;
};

struct ArraySpec {
  int n_t = 8;
  int n_r = 16;
  double radius = 6.0;
};

/// One synthesize + invert experiment. Everything the CLI needs lives here so
/// that a single JSON file reproduces a run.
struct ExperimentConfig {
  std::string preset = "coaxial";
  PhantomSpec phantom = coaxial_phantom();
  GridSpec synthesis{7.5, 36};
  GridSpec inversion{7.5, 30};
  ArraySpec array;
  double frequency = 1.25e8;
  double snr_db = 25.0;
  std::uint64_t seed = 1;

  Algorithm algorithm = Algorithm::apasd;
  SolverParams solver;
  RowWeights row_weights;
  std::optional<double> l1;    // explicit radius; otherwise the oracle is used
  double oracle_l1_scale = 1.0;
  // NLW step as a multiple of 1/alpha^2, alpha the preconditioned Jacobian bound.
  double nlw_step_factor = 1.0;
  int nlw_bound_samples = 4;

  Grid synthesis_grid() const { return make_grid(synthesis.extent, synthesis.n); }
  Grid inversion_grid() const { return make_grid(inversion.extent, inversion.n); }
  ArrayConfig array_config() const;

  /// True when the synthesis grid is not strictly finer than the inversion grid.
  bool inverse_crime() const;
  void validate() const;
};

/// Data-row weight of the presets. It lifts the receiver equations, whose
/// G^R columns are about 11x weaker than the identity part of the state rows.
inline constexpr double kPresetDataWeight = 4.0;

/// Geometry and solver parameters of a named experiment:
/// coaxial, austria or lossy-austria.
ExperimentConfig experiment_preset(const std::string& name);

ExperimentConfig read_config(std::istream& is);
ExperimentConfig read_config(const std::string& path);
void write_config(std::ostream& os, const ExperimentConfig& config);
void write_config(const std::string& path, const ExperimentConfig& config);

void write_measurements(std::ostream& os, const MeasurementSet& ms);
void write_measurements(const std::string& path, const MeasurementSet& ms);
MeasurementSet read_measurements(std::istream& is);
MeasurementSet read_measurements(const std::string& path);

enum class MapPart { real, imag, abs };

MapPart map_part_from_string(const std::string& name);

/// 8-bit grayscale pixels, min-max normalized over the selected part, row 0
/// is the top (largest y). A constant map renders as 128 everywhere.
std::vector<std::uint8_t> render_pixels(const ContrastMap& map, MapPart part);
void write_pgm(std::ostream& os, const ContrastMap& map, MapPart part);
void write_pgm(const std::string& path, const ContrastMap& map, MapPart part);

/// Everything needed to invert a measurement set under a configuration.
struct InversionSetup {
  GreensOperators ops;
  ContrastMap reference;  // on the synthesis grid
  Eigen::MatrixXcd incident;
  double l1 = 0.0;
};

/// Checks the measurement metadata against the configuration and assembles
/// the inversion operators. Throws std::invalid_argument on a mismatch.
InversionSetup prepare_inversion(const ExperimentConfig& config, const MeasurementSet& ms);

/// Synthesizes the measurement set the configuration describes.
MeasurementSet synthesize_experiment(const ExperimentConfig& config);

/// Runs the configured algorithm; the NLW step is resolved from the
/// preconditioned Jacobian bound when the algorithm is nlw.
SolveResult run_inversion(const ExperimentConfig& config, const MeasurementSet& ms, bool track_error = true);

}  // namespace csi
