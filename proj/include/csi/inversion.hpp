#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csi/cs_operator.hpp"
#include "csi/grid.hpp"

namespace csi {

struct SolverParams {
  // Spectral bounds; they enter through r = max{2 alpha, 2 psi sqrt(Gamma(z0))}.
  double alpha = 0.0824;
  double psi = 0.02;
  double delta = 0.2;    // descent-condition slack (cond9), in (0, 1)
  double mu = 0.75;      // backtracking factor, in (0, 1)
  double rho = 0.8;      // expansion level (cond10), in (0, 1)
  double lambda0 = 0.25; // step re-expansion, gamma = (1 + lambda0) beta
  double gamma0 = 1.0;   // gamma_0 = beta_0
  double l1_radius = 1.0;

  int max_iterations = 5000;
  double time_budget_s = 600.0;

  double fixed_point_tolerance = 1e-4;
  int fixed_point_cap = 10;
  int backtrack_cap = 60;

  int stagnation_window = 50;
  double stagnation_tolerance = 1e-8;

  // Multiplies the right-hand sides of both acceptance tests.
  double condition_scale = 1.0;
  // When set, the first backtracking trial already shrinks: beta = mu^p gamma
  // with p >= 1. The default tries gamma_k itself first (beta = mu^(p-1) gamma).
  bool shrink_first_trial = false;

  PreconditionerRule preconditioner = PreconditionerRule::column_balance;
  bool precondition = true;

  // Thresholded nonlinear Landweber baseline.
  double nlw_step = 1.0;
  double nlw_threshold = 0.0;
  double divergence_factor = 10.0;

  void validate() const;
};

/// Solver parameters of the coaxial, austria and lossy-austria experiments.
SolverParams preset_params(const std::string& name);

struct IterationRecord {
  int k = 0;
  double t_s = 0.0;
  double gamma = 0.0;  // gamma_{k} after the update of iteration k
  double beta = 0.0;
  int p = 0;
  double misfit = 0.0;
  double l1_norm = 0.0;
  double err = std::numeric_limits<double>::quiet_NaN();
  bool cond9 = false;
  bool cond10 = false;
};

/// Row 0 describes the initial state; rows k >= 1 the accepted iterates.
struct IterationTrace {
  std::vector<IterationRecord> records;
};

void write_trace_csv(std::ostream& os, const IterationTrace& trace);
void write_trace_csv(const std::string& path, const IterationTrace& trace);
IterationTrace read_trace_csv(std::istream& is);

enum class StopReason {
  max_iterations,
  time_budget,
  stagnation,
  converged,        // zero step or zero misfit
  step_failure,     // backtracking cap exceeded
  numerical_failure,
  divergence,
};

std::string to_string(StopReason reason);

class StepFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericalFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// r = max{2 alpha, 2 psi sqrt(Gamma_0)}
double compute_r(double alpha, double psi, double initial_misfit);

/// Everything an A-PASD step needs besides the iterate.
struct StepContext {
  const CsOperator* op = nullptr;
  Preconditioner preconditioner;
  double r = 1.0;
};

struct StepResult {
  StateVector next;
  ForwardResult forward;  // T(next) and its misfit
  double beta = 0.0;
  double gamma_next = 0.0;
  int p = 0;
  int fixed_point_iterations = 0;
  bool cond9 = false;
  bool cond10 = false;
};

/// One outer iteration: backtracking on beta until the descent test (cond9) holds for
/// the fixed point of the projected preconditioned ascent map, then the
/// step re-expansion test (cond10). `current` must be T(z_k).
StepResult apasd_step(const StateVector& z, const ForwardResult& current, double gamma,
                      const SolverParams& params, const StepContext& ctx);

struct SolveResult {
  ContrastMap contrast;
  StateVector state;
  IterationTrace trace;
  StopReason reason = StopReason::max_iterations;
  std::string diagnostic;
  Preconditioner preconditioner;
  double r = 0.0;
};

/// Relative L2 error of `estimate` against `reference`, after resampling the
/// reference onto the estimate's grid.
double reconstruction_error(const ContrastMap& estimate, const ContrastMap& reference);

/// A-PASD from z0 = 0. Errors in the trace are computed when a reference is given.
SolveResult apasd_solve(const CsOperator& op, const SolverParams& params,
                        const std::optional<ContrastMap>& reference = std::nullopt);

/// z_{k+1} = Thr^chi(z_k + step * P(dT(z_k)^H (y - T(z_k)))) with constant step and chi.
SolveResult nlw_solve(const CsOperator& op, const SolverParams& params,
                      const std::optional<ContrastMap>& reference = std::nullopt);

/// l1 radius c * (||tau||_1 + sum_i ||J_i||_1) of the reference contrast
/// resampled to the inversion grid, with currents from the forward solve there.
double oracle_l1_radius(const GreensOperators& inversion_ops, const ContrastMap& reference, double scale = 1.0);

}  // namespace csi
