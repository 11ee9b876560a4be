#include "hybrid_bell/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/binomial.hpp>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace hybrid_bell::fock {

double poisson_tail(double mean, int dim) {
  if (dim <= 0) return 1.0;
  if (mean <= 0.0) return 0.0;
  // p_dim in log space, then walk up the tail
  double term = std::exp(-mean + dim * std::log(mean) - std::lgamma(dim + 1.0));
  double sum = 0.0;
  for (int n = dim;; ++n) {
    sum += term;
    term *= mean / (n + 1.0);
    if (n > mean && term <= sum * 1e-17) break;
    if (n - dim > 100000) break;
  }
  return std::min(sum, 1.0);
}

bool TruncationConfig::admits(double amplitude) const {
  return poisson_tail(amplitude * amplitude, dim) < tail_tol;
}

void TruncationConfig::validate() const {
  if (dim < 2) raise(ErrorKind::InvalidArgument, "truncation dimension must be >= 2");
  if (!(tail_tol > 0.0)) raise(ErrorKind::InvalidArgument, "tail tolerance must be positive");
}

void TruncationConfig::require_admits(double amplitude) const {
  validate();
  if (!admits(amplitude)) {
    raise(ErrorKind::TruncationTooSmall,
          "Fock dimension " + std::to_string(dim) + " too small for amplitude " +
              std::to_string(amplitude) + " (tail mass " +
              std::to_string(poisson_tail(amplitude * amplitude, dim)) + ")");
  }
}

TruncationConfig TruncationConfig::automatic(double amplitude, double tail_tol) {
  const double margin = amplitude + 2.0;
  const double mean = margin * margin;
  int dim = 32;
  while (poisson_tail(mean, dim) >= tail_tol) ++dim;
  return {dim, tail_tol};
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

bool FockOperator::verify(double tol) const {
  const auto n = entries.rows();
  if (entries.cols() != n) return false;
  if (hermitian && max_abs(entries - entries.adjoint()) > tol) return false;
  if (diagonal) {
    Matrix off = entries;
    off.diagonal().setZero();
    if (max_abs(off) > tol) return false;
  }
  if (unitary && max_abs(entries * entries.adjoint() - Matrix::Identity(n, n)) > tol) return false;
  return true;
}

Vector coherent_state(complex amplitude, int dim) {
  Vector v(dim);
  v(0) = std::exp(-0.5 * std::norm(amplitude));
  for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * amplitude / std::sqrt(static_cast<double>(n));
  return v;
}

Matrix annihilation(int dim) {
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

HybridState HybridState::build(complex alpha, const TruncationConfig& trunc) {
  trunc.require_admits(std::abs(alpha));
  const int d = trunc.dim;
  Vector psi(2 * d);
  psi.head(d) = coherent_state(alpha, d);
  psi.tail(d) = coherent_state(-alpha, d);
  psi /= std::sqrt(2.0);
  return {alpha, d, psi * psi.adjoint()};
}

Matrix HybridState::reduced_field() const {
  return matrix.topLeftCorner(dim, dim) + matrix.bottomRightCorner(dim, dim);
}

FockOperator displacement_operator(complex beta, const TruncationConfig& trunc) {
  trunc.require_admits(std::abs(beta));
  const Matrix a = annihilation(trunc.dim);
  const Matrix generator = beta * a.adjoint() - std::conj(beta) * a;
  FockOperator d{generator.exp(), false, false, true};
  if (!d.verify(1e-8))
    raise(ErrorKind::TruncationTooSmall, "displacement operator lost unitarity");
  return d;
}

FockOperator lossy_povm_element(int n, double p, const TruncationConfig& trunc) {
  trunc.validate();
  if (n < 0 || n >= trunc.dim)
    raise(ErrorKind::InvalidArgument, "POVM outcome outside the truncated basis");
  if (!(p >= 0.0 && p <= 1.0)) raise(ErrorKind::InvalidArgument, "efficiency must lie in [0, 1]");

  FockOperator e{Matrix::Zero(trunc.dim, trunc.dim), true, true, false};
  for (int k = n; k < trunc.dim; ++k) {
    // probability of registering n clicks out of k photons
    const boost::math::binomial_distribution<double> clicks(k, p);
    e.entries(k, k) = boost::math::pdf(clicks, n);
  }
  return e;
}

FockOperator effective_measurement(Scheme scheme, double eta, const TruncationConfig& trunc) {
  FockOperator pi{Matrix::Zero(trunc.dim, trunc.dim), true, true, false};
  for (int n = 0; n < trunc.dim; ++n) {
    const Matrix e = lossy_povm_element(n, eta, trunc).entries;
    const bool plus = scheme == Scheme::OnOff ? n == 0 : n % 2 == 0;
    if (plus)
      pi.entries += e;
    else
      pi.entries -= e;
  }
  return pi;
}

Eigen::Matrix2cd qubit_observable(const QubitSetting& setting) {
  const complex xi = setting.xi();
  const double mag = std::abs(xi);
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (mag > 0.0) {
    const complex dir = xi / mag;
    u << std::cos(mag), dir * std::sin(mag), -std::conj(dir) * std::sin(mag), std::cos(mag);
  }
  Eigen::Matrix2cd pi_a = Eigen::Matrix2cd::Zero();
  pi_a(0, 0) = 1.0;
  pi_a(1, 1) = -1.0;
  return u * pi_a * u.adjoint();
}

Oracle::Oracle(complex alpha, const TruncationConfig& trunc)
    : trunc_(trunc), state_(HybridState::build(alpha, trunc)), reduced_(state_.reduced_field()) {}

Matrix Oracle::field_observable(Scheme scheme, const FockOperator& displacement,
                                double eta_B) const {
  const Matrix pi = effective_measurement(scheme, eta_B, trunc_).entries;
  return displacement.entries * pi * displacement.entries.adjoint();
}

Matrix Oracle::field_observable(Scheme scheme, const DisplacementSetting& beta,
                                double eta_B) const {
  trunc_.require_admits(std::abs(state_.alpha) + beta.magnitude);
  return field_observable(scheme, displacement_operator(beta.beta(), trunc_), eta_B);
}

double Oracle::expectation(const Eigen::Matrix2cd& qubit_obs, const Matrix& field_obs,
                           double eta_A) const {
  const Matrix joint_op = Eigen::kroneckerProduct(qubit_obs, field_obs).eval();
  // Tr[rho M] = sum_ij rho_ij M_ji
  const double joint = state_.matrix.cwiseProduct(joint_op.transpose()).sum().real();
  const double marginal = reduced_.cwiseProduct(field_obs.transpose()).sum().real();
  return eta_A * joint + (1.0 - eta_A) * marginal;
}

double joint_expectation_oracle(complex alpha, const QubitSetting& xi,
                                const DisplacementSetting& beta, Scheme scheme,
                                const EfficiencyPair& effs, const TruncationConfig& trunc) {
  effs.validate();
  trunc.require_admits(std::abs(alpha) + beta.magnitude);
  const Oracle oracle(alpha, trunc);
  return oracle.expectation(qubit_observable(xi), oracle.field_observable(scheme, beta, effs.eta_B),
                            effs.eta_A);
}

double bell_oracle(complex alpha, const MeasurementSettings& s, const EfficiencyPair& effs,
                   const TruncationConfig& trunc) {
  effs.validate();
  const Oracle oracle(alpha, trunc);
  const Matrix ob1 = oracle.field_observable(s.scheme, s.beta1, effs.eta_B);
  const Matrix ob2 = oracle.field_observable(s.scheme, s.beta2, effs.eta_B);
  const Eigen::Matrix2cd oa1 = qubit_observable(s.xi1);
  const Eigen::Matrix2cd oa2 = qubit_observable(s.xi2);
  return oracle.expectation(oa1, ob1, effs.eta_A) + oracle.expectation(oa1, ob2, effs.eta_A) +
         oracle.expectation(oa2, ob2, effs.eta_A) - oracle.expectation(oa2, ob1, effs.eta_A);
}

}  // namespace hybrid_bell::fock
