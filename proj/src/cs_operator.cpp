#include "csi/cs_operator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "csi/kernels.hpp"

namespace csi {

namespace kp = kernels::parallel;

// ---------------------------------------------------------------- StateVector

StateVector::StateVector(Eigen::Index cells, Eigen::Index transmitters)
    : cells_(cells), transmitters_(transmitters),
      flat_(Eigen::VectorXcd::Zero(cells * (transmitters + 1))) {}

StateVector::StateVector(Eigen::Index cells, Eigen::Index transmitters, Eigen::VectorXcd flat)
    : cells_(cells), transmitters_(transmitters), flat_(std::move(flat)) {
  if (flat_.size() != cells_ * (transmitters_ + 1)) {
    throw std::invalid_argument("StateVector: flat length does not match block layout");
  }
}

namespace {
void same_layout(const StateVector& a, const StateVector& b) {
  if (a.cells() != b.cells() || a.transmitters() != b.transmitters()) {
    throw std::invalid_argument("StateVector: block layouts differ");
  }
}
void same_layout(const ResidualVector& a, const ResidualVector& b) {
  if (a.state.rows() != b.state.rows() || a.state.cols() != b.state.cols() ||
      a.data.rows() != b.data.rows() || a.data.cols() != b.data.cols()) {
    throw std::invalid_argument("ResidualVector: block layouts differ");
  }
}
}  // namespace

StateVector& StateVector::operator+=(const StateVector& o) {
  same_layout(*this, o);
  flat_ += o.flat_;
  return *this;
}
StateVector& StateVector::operator-=(const StateVector& o) {
  same_layout(*this, o);
  flat_ -= o.flat_;
  return *this;
}
StateVector& StateVector::operator*=(cplx s) {
  flat_ *= s;
  return *this;
}
StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
StateVector operator*(cplx s, StateVector a) { return a *= s; }
cplx inner(const StateVector& a, const StateVector& b) {
  same_layout(a, b);
  return a.flat().dot(b.flat());
}

ResidualVector& ResidualVector::operator+=(const ResidualVector& o) {
  same_layout(*this, o);
  state += o.state;
  data += o.data;
  return *this;
}
ResidualVector& ResidualVector::operator-=(const ResidualVector& o) {
  same_layout(*this, o);
  state -= o.state;
  data -= o.data;
  return *this;
}
ResidualVector& ResidualVector::operator*=(cplx s) {
  state *= s;
  data *= s;
  return *this;
}
ResidualVector operator+(ResidualVector a, const ResidualVector& b) { return a += b; }
ResidualVector operator-(ResidualVector a, const ResidualVector& b) { return a -= b; }
ResidualVector operator*(cplx s, ResidualVector a) { return a *= s; }
cplx inner(const ResidualVector& a, const ResidualVector& b) {
  same_layout(a, b);
  return (a.state.array().conjugate() * b.state.array()).sum() +
         (a.data.array().conjugate() * b.data.array()).sum();
}

// ------------------------------------------------------------ Preconditioner

void Preconditioner::validate() const {
  const auto ok = [](double s) { return s > 0.0 && std::isfinite(s); };
  if (!ok(contrast_scale) || !ok(current_scale) || !ok(rows.state) || !ok(rows.data)) {
    throw std::invalid_argument("Preconditioner: scales must be positive and finite");
  }
}

StateVector Preconditioner::apply(StateVector direction) const {
  direction.contrast() *= contrast_scale;
  direction.currents() *= current_scale;
  return direction;
}

// ---------------------------------------------------------------- CsOperator

CsOperator::CsOperator(const GreensOperators& ops, Eigen::MatrixXcd incident, Eigen::MatrixXcd measured,
                       RowWeights weights)
    : ops_(&ops), incident_(std::move(incident)), weights_(weights) {
  const Eigen::Index n = ops.grid.size();
  if (incident_.rows() != n) throw std::invalid_argument("CsOperator: incident field length differs from grid");
  if (measured.rows() != ops.radiation.rows() || measured.cols() != incident_.cols()) {
    throw std::invalid_argument("CsOperator: measurement shape must be receivers x transmitters");
  }
  if (ops.domain.rows() != n || ops.domain.cols() != n || ops.radiation.cols() != n) {
    throw std::invalid_argument("CsOperator: operator shapes do not match the grid");
  }
  if (!(weights_.state > 0.0) || !(weights_.data > 0.0)) {
    throw std::invalid_argument("CsOperator: row weights must be positive");
  }
  target_.state = Eigen::MatrixXcd::Zero(n, incident_.cols());
  target_.data = weights_.data * measured;
}

ResidualVector CsOperator::zero_residual() const {
  return {Eigen::MatrixXcd::Zero(cells(), transmitters()), Eigen::MatrixXcd::Zero(receivers(), transmitters())};
}

void CsOperator::check(const StateVector& z) const {
  if (z.cells() != cells() || z.transmitters() != transmitters()) {
    throw std::invalid_argument("CsOperator: state vector layout does not match operator");
  }
}

void CsOperator::check(const ResidualVector& v) const {
  if (v.state.rows() != cells() || v.state.cols() != transmitters() || v.data.rows() != receivers() ||
      v.data.cols() != transmitters()) {
    throw std::invalid_argument("CsOperator: residual layout does not match operator");
  }
}

ResidualVector CsOperator::apply(const StateVector& z) const {
  check(z);
  const auto tau = z.contrast();
  const auto currents = z.currents();
  const Eigen::MatrixXcd j = currents;
  const Eigen::MatrixXcd scattered = kp::multiply(ops_->domain, j);
  ResidualVector out;
  out.state = j - tau.asDiagonal() * (incident_ + scattered);
  out.data = kp::multiply(ops_->radiation, j);
  out.state *= weights_.state;
  out.data *= weights_.data;
  return out;
}

ForwardResult CsOperator::apply_with_misfit(const StateVector& z) const {
  ForwardResult r;
  r.value = apply(z);
  r.misfit = 0.5 * (target_ - r.value).squared_norm();
  return r;
}

double CsOperator::misfit(const StateVector& z) const { return apply_with_misfit(z).misfit; }

ResidualVector CsOperator::jacobian(const StateVector& z, const StateVector& u) const {
  check(z);
  check(u);
  const Eigen::MatrixXcd j = z.currents();
  const Eigen::MatrixXcd du = u.currents();
  // Both products share G^S; stack them into one multiply.
  Eigen::MatrixXcd rhs(cells(), 2 * transmitters());
  rhs << j, du;
  const Eigen::MatrixXcd prod = kp::multiply(ops_->domain, rhs);
  const auto total_field = incident_ + prod.leftCols(transmitters());
  ResidualVector out;
  out.state = du - z.contrast().asDiagonal() * prod.rightCols(transmitters()) -
              u.contrast().asDiagonal() * total_field;
  out.data = kp::multiply(ops_->radiation, du);
  out.state *= weights_.state;
  out.data *= weights_.data;
  return out;
}

StateVector CsOperator::adjoint(const StateVector& z, const ResidualVector& v) const {
  check(z);
  check(v);
  const Eigen::MatrixXcd vs = weights_.state * v.state;
  const Eigen::MatrixXcd vd = weights_.data * v.data;
  const Eigen::MatrixXcd total_field = incident_ + kp::multiply(ops_->domain, Eigen::MatrixXcd(z.currents()));
  StateVector out(cells(), transmitters());
  out.contrast() = -(total_field.conjugate().cwiseProduct(vs)).rowwise().sum();
  const Eigen::MatrixXcd weighted = z.contrast().conjugate().asDiagonal() * vs;
  out.currents() = vs - kp::multiply_adjoint(ops_->domain, weighted) + kp::multiply_adjoint(ops_->radiation, vd);
  return out;
}

ResidualVector CsOperator::second_directional(const StateVector& u) const {
  check(u);
  ResidualVector out;
  out.state = -2.0 * weights_.state *
              (u.contrast().asDiagonal() * kp::multiply(ops_->domain, Eigen::MatrixXcd(u.currents())));
  out.data = Eigen::MatrixXcd::Zero(receivers(), transmitters());
  return out;
}

// --------------------------------------------------------- spectral estimates

namespace {

Eigen::VectorXcd gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[k] = {re, im};
  }
  return v;
}

}  // namespace

double spectral_norm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& forward,
                     const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& adjoint,
                     Eigen::Index dimension, int max_iterations, double tolerance, std::uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("spectral_norm: empty domain");
  std::mt19937_64 rng(seed);
  Eigen::VectorXcd x = gaussian_vector(dimension, rng);
  x.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXcd y = adjoint(forward(x));
    const double lambda = y.norm();  // ||A^H A x|| with ||x|| = 1
    if (lambda == 0.0) return 0.0;
    const double next = std::sqrt(lambda);
    x = y / lambda;
    const bool done = std::fabs(next - sigma) <= tolerance * next;
    sigma = next;
    if (done) break;
  }
  return forward(x).norm();
}

SpectralBounds estimate_bounds(const CsOperator& op, double l1_radius, int samples, std::uint64_t seed,
                               const Preconditioner* precond) {
  if (samples < 1) throw std::invalid_argument("estimate_bounds: need at least one sample");
  if (!(l1_radius > 0.0)) throw std::invalid_argument("estimate_bounds: l1 radius must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = op.cells(), nt = op.transmitters();
  const Eigen::Index dim = n * (nt + 1);

  const auto draw = [&]() {
    Eigen::VectorXcd v = gaussian_vector(dim, rng);
    v *= l1_radius * unit(rng) / v.cwiseAbs().sum();
    return StateVector(n, nt, std::move(v));
  };
  const auto flatten = [](const ResidualVector& r) {
    Eigen::VectorXcd f(r.state.size() + r.data.size());
    f << r.state.reshaped(), r.data.reshaped();
    return f;
  };
  const auto unflatten = [&](const Eigen::VectorXcd& f) {
    ResidualVector r;
    r.state = f.head(n * nt).reshaped(n, nt);
    r.data = f.tail(op.receivers() * nt).reshaped(op.receivers(), nt);
    return r;
  };

  // With a preconditioner P the bound is taken for dT(z) P^(1/2).
  const double sc = precond ? std::sqrt(precond->contrast_scale) : 1.0;
  const double sj = precond ? std::sqrt(precond->current_scale) : 1.0;
  const auto half = [&](Eigen::VectorXcd x) {
    x.head(n) *= sc;
    x.tail(n * nt) *= sj;
    return x;
  };

  SpectralBounds b;
  for (int s = 0; s < samples; ++s) {
    const StateVector z = draw();
    const auto fwd = [&](const Eigen::VectorXcd& x) { return flatten(op.jacobian(z, StateVector(n, nt, half(x)))); };
    const auto adj = [&](const Eigen::VectorXcd& y) { return half(op.adjoint(z, unflatten(y)).flat()); };
    b.alpha = std::max(b.alpha, spectral_norm(fwd, adj, dim, 50, 1e-6, seed + 1000 + static_cast<std::uint64_t>(s)));

    const StateVector u = draw();
    const double un = u.norm();
    if (un > 0.0) b.psi = std::max(b.psi, 2.0 * op.second_directional(u).norm() / (un * un));
  }
  return b;
}

// ------------------------------------------------------------ preconditioner

Preconditioner build_preconditioner(const CsOperator& op, const StateVector& z0, PreconditionerRule rule) {
  double contrast_measure = 0.0, current_measure = 0.0;
  if (rule == PreconditionerRule::gradient_balance) {
    const ResidualVector residual = op.target() - op.apply(z0);
    const StateVector g = op.adjoint(z0, residual);
    contrast_measure = g.contrast().cwiseAbs().maxCoeff();
    current_measure = g.currents().cwiseAbs().maxCoeff();
  } else {
    // Column norms of dT(z0): contrast column n has entries -(E_i + G^S J_i)_n
    // in the state rows; current column n of block i is (I - D[tau] G^S) e_n
    // in the state rows and G^R e_n in the data rows.
    const double ws2 = op.weights().state * op.weights().state;
    const double wd2 = op.weights().data * op.weights().data;
    const Eigen::MatrixXcd total =
        op.incident() + kp::multiply(op.ops().domain, Eigen::MatrixXcd(z0.currents()));
    contrast_measure = ws2 * total.cwiseAbs2().rowwise().sum().mean();
    const Eigen::MatrixXcd coupling = z0.contrast().asDiagonal() * op.ops().domain;
    Eigen::MatrixXcd state_cols = -coupling;
    state_cols.diagonal().array() += 1.0;
    current_measure = ws2 * state_cols.cwiseAbs2().colwise().sum().mean() +
                      wd2 * op.ops().radiation.cwiseAbs2().colwise().sum().mean();
  }
  return balance_blocks(contrast_measure, current_measure, op.weights());
}

Preconditioner balance_blocks(double contrast_measure, double current_measure, RowWeights rows) {
  Preconditioner p;
  p.rows = rows;
  if (!std::isfinite(contrast_measure) || !std::isfinite(current_measure) || contrast_measure < 0.0 ||
      current_measure < 0.0 || (contrast_measure == 0.0 && current_measure == 0.0)) {
    p.fallback = true;
    return p;
  }
  // A one-sided zero saturates at the clamp.
  const double ratio = current_measure > 0.0 ? contrast_measure / current_measure : 1e6;
  p.current_scale = std::clamp(ratio, 1e-6, 1e6);
  return p;
}

}  // namespace csi
