#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "csi/greens.hpp"

namespace csi {

/// Stacked unknown z = [tau; J_1; ...; J_NT]. Stored contiguously so the
/// whole vector can be projected and normed as one.
class StateVector {
 public:
  StateVector() = default;
  StateVector(Eigen::Index cells, Eigen::Index transmitters);
  StateVector(Eigen::Index cells, Eigen::Index transmitters, Eigen::VectorXcd flat);

  static StateVector zeros(Eigen::Index cells, Eigen::Index transmitters) {
    return StateVector(cells, transmitters);
  }

  Eigen::Index cells() const { return cells_; }
  Eigen::Index transmitters() const { return transmitters_; }
  Eigen::Index size() const { return flat_.size(); }

  auto contrast() { return flat_.head(cells_); }
  auto contrast() const { return flat_.head(cells_); }
  /// Current blocks as a cells x transmitters matrix; column i is J_i.
  Eigen::Map<Eigen::MatrixXcd> currents() {
    return {flat_.data() + cells_, cells_, transmitters_};
  }
  Eigen::Map<const Eigen::MatrixXcd> currents() const {
    return {flat_.data() + cells_, cells_, transmitters_};
  }

  Eigen::VectorXcd& flat() { return flat_; }
  const Eigen::VectorXcd& flat() const { return flat_; }

  double l1_norm() const { return flat_.cwiseAbs().sum(); }
  double norm() const { return flat_.norm(); }

  StateVector& operator+=(const StateVector& o);
  StateVector& operator-=(const StateVector& o);
  StateVector& operator*=(cplx s);

 private:
  Eigen::Index cells_ = 0;
  Eigen::Index transmitters_ = 0;
  Eigen::VectorXcd flat_;
};

StateVector operator+(StateVector a, const StateVector& b);
StateVector operator-(StateVector a, const StateVector& b);
StateVector operator*(cplx s, StateVector a);
cplx inner(const StateVector& a, const StateVector& b);  // a^H b

/// Layout of T(z) and y: state-equation blocks (N x NT) then data blocks (NR x NT).
struct ResidualVector {
  Eigen::MatrixXcd state;
  Eigen::MatrixXcd data;

  double squared_norm() const { return state.squaredNorm() + data.squaredNorm(); }
  double norm() const { return std::sqrt(squared_norm()); }

  ResidualVector& operator+=(const ResidualVector& o);
  ResidualVector& operator-=(const ResidualVector& o);
  ResidualVector& operator*=(cplx s);
};

ResidualVector operator+(ResidualVector a, const ResidualVector& b);
ResidualVector operator-(ResidualVector a, const ResidualVector& b);
ResidualVector operator*(cplx s, ResidualVector a);
cplx inner(const ResidualVector& a, const ResidualVector& b);

/// Row weights applied to the state and data equations (left scaling).
struct RowWeights {
  double state = 1.0;
  double data = 1.0;
};

/// Block-diagonal scaling of the ascent direction: the contrast block is
/// multiplied by `contrast_scale` and every current block by `current_scale`.
struct Preconditioner {
  double contrast_scale = 1.0;
  double current_scale = 1.0;
  RowWeights rows;
  /// Set when the construction fell back to unit scales.
  bool fallback = false;

  void validate() const;
  StateVector apply(StateVector direction) const;
};

struct ForwardResult {
  ResidualVector value;  // T(z)
  double misfit = 0.0;   // 0.5 ||y - T(z)||^2
};

/// The cascaded contrast-source operator
///   T(z) = [J_i - D[tau] E_i - D[tau] G^S J_i ; G^R J_i]_{i=1..NT}
/// together with its Frechet derivatives. Row weights, when set, scale the
/// state and data rows of T, of y and of every derivative consistently.
class CsOperator {
 public:
  CsOperator(const GreensOperators& ops, Eigen::MatrixXcd incident, Eigen::MatrixXcd measured,
             RowWeights weights = {});

  Eigen::Index cells() const { return ops_->grid.size(); }
  Eigen::Index transmitters() const { return incident_.cols(); }
  Eigen::Index receivers() const { return ops_->radiation.rows(); }

  const GreensOperators& ops() const { return *ops_; }
  const Eigen::MatrixXcd& incident() const { return incident_; }
  const RowWeights& weights() const { return weights_; }

  /// y = [0; E^mea] in the row-weighted layout.
  const ResidualVector& target() const { return target_; }

  ResidualVector apply(const StateVector& z) const;
  ForwardResult apply_with_misfit(const StateVector& z) const;
  double misfit(const StateVector& z) const;

  /// dT(z) u
  ResidualVector jacobian(const StateVector& z, const StateVector& u) const;
  /// dT(z)^H v
  StateVector adjoint(const StateVector& z, const ResidualVector& v) const;
  /// d^2 T(z; u, u); independent of z because T is bilinear in (tau, J).
  ResidualVector second_directional(const StateVector& u) const;

  StateVector zero_state() const { return StateVector::zeros(cells(), transmitters()); }
  ResidualVector zero_residual() const;

 private:
  void check(const StateVector& z) const;
  void check(const ResidualVector& v) const;

  const GreensOperators* ops_;
  Eigen::MatrixXcd incident_;
  RowWeights weights_;
  ResidualVector target_;
};

/// Largest singular value of a linear map given its forward and adjoint
/// application, by power iteration on A^H A from a seeded random start.
double spectral_norm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& forward,
                     const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& adjoint,
                     Eigen::Index dimension, int max_iterations = 50, double tolerance = 1e-6,
                     std::uint64_t seed = 1);

struct SpectralBounds {
  double alpha = 0.0;  // max ||dT(z)||_2 over sampled z in the l1 ball
  double psi = 0.0;    // max 2 ||d^2T(z, u)||_2 / ||u||_2^2 over sampled u
};

enum class PreconditionerRule {
  /// current_scale = max|g_tau| / max|g_J| with g = dT(z0)^H (y - T(z0)).
  gradient_balance,
  /// current_scale = mean squared Jacobian column norm of the contrast
  /// block over that of the current blocks (diagonal Gauss-Newton scaling).
  column_balance,
};

/// Sampled lower estimates of the suprema defining alpha and psi; states
/// are Gaussian draws rescaled onto the l1 ball of the given radius. With a
/// preconditioner, alpha bounds dT(z) P^(1/2) instead (psi is unchanged).
SpectralBounds estimate_bounds(const CsOperator& op, double l1_radius, int samples, std::uint64_t seed = 7,
                               const Preconditioner* precond = nullptr);

/// Builds the ascent-direction scaling at z0. Scales are clamped to
/// [1e-6, 1e6]; an all-zero reference quantity falls back to unit scales.
Preconditioner build_preconditioner(const CsOperator& op, const StateVector& z0,
                                    PreconditionerRule rule = PreconditionerRule::column_balance);

/// current_scale = contrast_measure / current_measure clamped to [1e-6, 1e6],
/// contrast_scale = 1. Falls back to unit scales when both measures vanish
/// or either is not finite.
Preconditioner balance_blocks(double contrast_measure, double current_measure, RowWeights rows = {});

}  // namespace csi
