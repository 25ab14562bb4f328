#include "csi/inversion.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csi/sparsity.hpp"

namespace csi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

bool finite(const ResidualVector& r) { return r.state.allFinite() && r.data.allFinite(); }

}  // namespace

void SolverParams::validate() const {
  if (!(alpha > 0.0) || !(psi > 0.0)) throw std::invalid_argument("SolverParams: alpha and psi must be positive");
  if (!in_open_unit(delta)) throw std::invalid_argument("SolverParams: delta must lie in (0, 1)");
  if (!in_open_unit(mu)) throw std::invalid_argument("SolverParams: mu must lie in (0, 1)");
  if (!in_open_unit(rho)) throw std::invalid_argument("SolverParams: rho must lie in (0, 1)");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("SolverParams: lambda0 must be positive");
  if (!(gamma0 > 0.0)) throw std::invalid_argument("SolverParams: gamma0 must be positive");
  if (!(l1_radius > 0.0)) throw std::invalid_argument("SolverParams: l1 radius must be positive");
  if (max_iterations < 0) throw std::invalid_argument("SolverParams: negative iteration limit");
  if (!(time_budget_s > 0.0)) throw std::invalid_argument("SolverParams: time budget must be positive");
  if (!(fixed_point_tolerance > 0.0) || fixed_point_cap < 1) {
    throw std::invalid_argument("SolverParams: invalid fixed-point settings");
  }
  if (backtrack_cap < 1) throw std::invalid_argument("SolverParams: backtrack cap must be at least 1");
  if (!(condition_scale > 0.0)) throw std::invalid_argument("SolverParams: condition scale must be positive");
  if (!(nlw_step > 0.0) || !(nlw_threshold >= 0.0)) throw std::invalid_argument("SolverParams: invalid NLW settings");
}

SolverParams preset_params(const std::string& name) {
  SolverParams p;
  if (name == "coaxial") {
    p.alpha = 0.0824;
    p.psi = 0.02;
    p.delta = 0.2;
    p.mu = 0.75;
    p.rho = 0.8;
    p.lambda0 = 0.25;
  } else if (name == "austria" || name == "lossy-austria") {
    p.alpha = 0.0491;
    p.psi = 0.02;
    p.delta = 0.25;
    p.mu = 0.5;
    p.rho = 0.8;
    p.lambda0 = 0.25;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return p;
}

// ---------------------------------------------------------------------- trace

void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
  os << "k,t_s,gamma,beta,p,misfit,l1_norm,err,cond9,cond10\n";
  char buf[320];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%d,%d\n", r.k, r.t_s, r.gamma,
                  r.beta, r.p, r.misfit, r.l1_norm, r.err, r.cond9 ? 1 : 0, r.cond10 ? 1 : 0);
    os << buf;
  }
}

void write_trace_csv(const std::string& path, const IterationTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_csv(os, trace);
}

IterationTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "k,t_s,gamma,beta,p,misfit,l1_norm,err,cond9,cond10") {
    throw std::invalid_argument("trace CSV: line 1: unexpected header");
  }
  IterationTrace trace;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) {
      throw std::invalid_argument("trace CSV: line " + std::to_string(line_no) + ": expected 10 fields");
    }
    IterationRecord r;
    r.k = std::stoi(cells[0]);
    r.t_s = std::strtod(cells[1].c_str(), nullptr);
    r.gamma = std::strtod(cells[2].c_str(), nullptr);
    r.beta = std::strtod(cells[3].c_str(), nullptr);
    r.p = std::stoi(cells[4]);
    r.misfit = std::strtod(cells[5].c_str(), nullptr);
    r.l1_norm = std::strtod(cells[6].c_str(), nullptr);
    r.err = std::strtod(cells[7].c_str(), nullptr);
    r.cond9 = cells[8] == "1";
    r.cond10 = cells[9] == "1";
    trace.records.push_back(r);
  }
  return trace;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iterations: return "max-iterations";
    case StopReason::time_budget: return "time-budget";
    case StopReason::stagnation: return "stagnation";
    case StopReason::converged: return "converged";
    case StopReason::step_failure: return "step-failure";
    case StopReason::numerical_failure: return "numerical-failure";
    case StopReason::divergence: return "divergence";
  }
  return "unknown";
}

// ---------------------------------------------------------------------- A-PASD

double compute_r(double alpha, double psi, double initial_misfit) {
  return std::max(2.0 * alpha, 2.0 * psi * std::sqrt(std::max(initial_misfit, 0.0)));
}

StepResult apasd_step(const StateVector& z, const ForwardResult& current, double gamma,
                      const SolverParams& params, const StepContext& ctx) {
  const CsOperator& op = *ctx.op;
  const ResidualVector residual = op.target() - current.value;
  const double tiny = std::numeric_limits<double>::min();

  StepResult out;
  for (int p = 1;; ++p) {
    const int exponent = params.shrink_first_trial ? p : p - 1;
    const double beta = std::pow(params.mu, exponent) * gamma;
    const double step = beta / ctx.r;

    StateVector w = z;
    int iterations = 0;
    for (int j = 0; j < params.fixed_point_cap; ++j) {
      const StateVector direction = ctx.preconditioner.apply(op.adjoint(w, residual));
      StateVector trial(z.cells(), z.transmitters(), project_l1(z.flat() + step * direction.flat(),
                                                                  params.l1_radius));
      const double change = (trial.flat() - w.flat()).norm();
      const double scale = std::max(w.norm(), tiny);
      w = std::move(trial);
      iterations = j + 1;
      if (change <= params.fixed_point_tolerance * scale) break;
    }

    ForwardResult next = op.apply_with_misfit(w);
    if (!finite(next.value) || !std::isfinite(next.misfit)) {
      throw NumericalFailureError("apasd_step: non-finite residual at backtrack " + std::to_string(p));
    }
    const double lhs = (next.value - current.value).squared_norm();
    const double dz = (w.flat() - z.flat()).squaredNorm();
    const double rhs9 = params.condition_scale * (1.0 - params.delta) * ctx.r / beta * dz;
    if (lhs <= rhs9) {
      out.cond9 = true;
      out.cond10 = lhs <= params.condition_scale * params.rho * ctx.r / beta * dz;
      out.beta = beta;
      out.gamma_next = out.cond10 ? (1.0 + params.lambda0) * beta : beta;
      out.p = p;
      out.fixed_point_iterations = iterations;
      out.next = std::move(w);
      out.forward = std::move(next);
      return out;
    }
    if (p >= params.backtrack_cap) {
      throw StepFailureError("apasd_step: descent condition (cond9) not met after " + std::to_string(p) + " backtracking steps");
    }
  }
}

double reconstruction_error(const ContrastMap& estimate, const ContrastMap& reference) {
  const ContrastMap ref = resample(reference, estimate.grid);
  const double denom = ref.values.norm();
  if (!(denom > 0.0)) throw std::invalid_argument("reconstruction_error: reference contrast is zero");
  return (estimate.values - ref.values).norm() / denom;
}

namespace {

struct ErrorTracker {
  Eigen::VectorXcd ref;  // empty without a reference
  double ref_norm = 0.0;

  ErrorTracker(const std::optional<ContrastMap>& reference, const Grid& grid) {
    if (!reference) return;
    ref = resample(*reference, grid).values;
    ref_norm = ref.norm();
    if (!(ref_norm > 0.0)) throw std::invalid_argument("reconstruction_error: reference contrast is zero");
  }
  double operator()(const StateVector& z) const {
    if (ref.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    return (z.contrast() - ref).norm() / ref_norm;
  }
};

bool stagnated(const IterationTrace& trace, const SolverParams& params) {
  const auto& rec = trace.records;
  const auto window = static_cast<std::size_t>(params.stagnation_window);
  if (window == 0 || rec.size() <= window) return false;
  const double old = rec[rec.size() - 1 - window].misfit;
  const double now = rec.back().misfit;
  if (!(old > 0.0)) return false;
  return (old - now) / old < params.stagnation_tolerance;
}

SolveResult finish(SolveResult result, const CsOperator& op, StateVector z) {
  result.contrast = ContrastMap(op.ops().grid, Eigen::VectorXcd(z.contrast()));
  result.state = std::move(z);
  return result;
}

}  // namespace

SolveResult apasd_solve(const CsOperator& op, const SolverParams& params, const std::optional<ContrastMap>& reference) {
  params.validate();
  const auto start = Clock::now();
  const ErrorTracker error(reference, op.ops().grid);

  SolveResult result;
  StateVector z = op.zero_state();
  ForwardResult current = op.apply_with_misfit(z);

  StepContext ctx;
  ctx.op = &op;
  ctx.r = compute_r(params.alpha, params.psi, current.misfit);
  if (params.precondition) ctx.preconditioner = build_preconditioner(op, z, params.preconditioner);
  ctx.preconditioner.validate();
  result.r = ctx.r;
  result.preconditioner = ctx.preconditioner;

  double gamma = params.gamma0;
  result.trace.records.push_back({0, seconds_since(start), gamma, gamma, 0, current.misfit, z.l1_norm(), error(z),
                                  false, false});
  if (current.misfit == 0.0) {
    result.reason = StopReason::converged;
    return finish(std::move(result), op, std::move(z));
  }

  result.reason = StopReason::max_iterations;
  for (int k = 1; k <= params.max_iterations; ++k) {
    StepResult step;
    try {
      step = apasd_step(z, current, gamma, params, ctx);
    } catch (const StepFailureError& e) {
      result.reason = StopReason::step_failure;
      result.diagnostic = e.what();
      break;
    } catch (const NumericalFailureError& e) {
      result.reason = StopReason::numerical_failure;
      result.diagnostic = e.what();
      break;
    }
    const bool unchanged = step.next.flat() == z.flat();
    gamma = step.gamma_next;
    z = std::move(step.next);
    current = std::move(step.forward);
    result.trace.records.push_back({k, seconds_since(start), gamma, step.beta, step.p, current.misfit, z.l1_norm(),
                                    error(z), step.cond9, step.cond10});
    if (unchanged || current.misfit == 0.0) {
      result.reason = StopReason::converged;
      break;
    }
    if (stagnated(result.trace, params)) {
      result.reason = StopReason::stagnation;
      break;
    }
    if (seconds_since(start) >= params.time_budget_s) {
      result.reason = StopReason::time_budget;
      break;
    }
  }
  return finish(std::move(result), op, std::move(z));
}

// ------------------------------------------------------------------------ NLW

SolveResult nlw_solve(const CsOperator& op, const SolverParams& params, const std::optional<ContrastMap>& reference) {
  params.validate();
  const auto start = Clock::now();
  const ErrorTracker error(reference, op.ops().grid);

  SolveResult result;
  StateVector z = op.zero_state();
  ForwardResult current = op.apply_with_misfit(z);
  const double initial = current.misfit;
  Preconditioner precond;
  if (params.precondition) precond = build_preconditioner(op, z, params.preconditioner);
  result.preconditioner = precond;

  result.trace.records.push_back({0, seconds_since(start), params.nlw_step, params.nlw_step, 0, current.misfit,
                                  z.l1_norm(), error(z), false, false});
  if (current.misfit == 0.0) {
    result.reason = StopReason::converged;
    return finish(std::move(result), op, std::move(z));
  }

  result.reason = StopReason::max_iterations;
  for (int k = 1; k <= params.max_iterations; ++k) {
    const StateVector direction = precond.apply(op.adjoint(z, op.target() - current.value));
    StateVector next(z.cells(), z.transmitters(),
                     soft_threshold(z.flat() + params.nlw_step * direction.flat(), params.nlw_threshold));
    ForwardResult forward = op.apply_with_misfit(next);
    if (!finite(forward.value) || !std::isfinite(forward.misfit)) {
      result.reason = StopReason::numerical_failure;
      result.diagnostic = "nlw_solve: non-finite residual at iteration " + std::to_string(k);
      break;
    }
    const bool unchanged = next.flat() == z.flat();
    z = std::move(next);
    current = std::move(forward);
    result.trace.records.push_back({k, seconds_since(start), params.nlw_step, params.nlw_step, 0, current.misfit,
                                    z.l1_norm(), error(z), false, false});
    if (current.misfit > params.divergence_factor * initial) {
      result.reason = StopReason::divergence;
      result.diagnostic = "nlw_solve: misfit grew beyond " + std::to_string(params.divergence_factor) +
                          "x its initial value at iteration " + std::to_string(k);
      break;
    }
    if (unchanged || current.misfit == 0.0) {
      result.reason = StopReason::converged;
      break;
    }
    if (stagnated(result.trace, params)) {
      result.reason = StopReason::stagnation;
      break;
    }
    if (seconds_since(start) >= params.time_budget_s) {
      result.reason = StopReason::time_budget;
      break;
    }
  }
  return finish(std::move(result), op, std::move(z));
}

double oracle_l1_radius(const GreensOperators& inversion_ops, const ContrastMap& reference, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("oracle_l1_radius: scale must be positive");
  const ContrastMap tau = resample(reference, inversion_ops.grid);
  const Eigen::MatrixXcd currents =
      solve_state(inversion_ops, tau, incident_fields(inversion_ops.array, inversion_ops.grid));
  return scale * (tau.values.cwiseAbs().sum() + currents.cwiseAbs().sum());
}

}  // namespace csi
