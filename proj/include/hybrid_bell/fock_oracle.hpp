#pragma once

#include <Eigen/Dense>

#include "hybrid_bell/types.hpp"

namespace hybrid_bell::fock {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Probability that a Poisson(mean) variable is >= dim, summed directly from
/// the tail so that masses far below machine epsilon are resolved.
double poisson_tail(double mean, int dim);

/// Fock-space cutoff. Basis states |0> ... |dim-1>.
struct TruncationConfig {
  int dim = 32;
  double tail_tol = 1e-12;

  /// Throws TruncationTooSmall if a coherent state of this amplitude leaks
  /// more than tail_tol probability above the cutoff.
  void require_admits(double amplitude) const;
  bool admits(double amplitude) const;
  void validate() const;

  /// max(32, smallest N whose Poisson((amplitude + 2)^2) tail is < tail_tol).
  static TruncationConfig automatic(double amplitude, double tail_tol = 1e-12);
};

/// Dense operator on the truncated number basis. Flags record properties the
/// constructor promised; verify() checks them.
struct FockOperator {
  Matrix entries;
  bool hermitian = false;
  bool diagonal = false;
  bool unitary = false;

  int dim() const { return static_cast<int>(entries.rows()); }
  /// True if every flagged property holds to tol in max-norm.
  bool verify(double tol = 1e-10) const;
};

double max_abs(const Matrix& m);

/// Truncated coherent-state vector with exact (unrenormalized) amplitudes.
Vector coherent_state(complex amplitude, int dim);

/// Number-basis annihilation operator.
Matrix annihilation(int dim);

/// Density matrix of (|H>|alpha> + |V>|-alpha>)/sqrt(2). The qubit index is
/// the slow one: row = q * dim + n with q = 0 for H, 1 for V.
struct HybridState {
  complex alpha;
  int dim = 0;
  Matrix matrix;

  static HybridState build(complex alpha, const TruncationConfig& trunc);

  /// rho_B = Tr_A rho.
  Matrix reduced_field() const;
};

/// exp(beta a^dagger - beta^* a) of the truncated generator.
FockOperator displacement_operator(complex beta, const TruncationConfig& trunc);

/// Lossy-detector POVM element E_p^(n): C(n+m, n) p^n (1-p)^m on |n+m><n+m|.
FockOperator lossy_povm_element(int n, double p, const TruncationConfig& trunc);

/// Pi_B,eff built by summing POVM elements: E^(0) - sum_{n>=1} E^(n) for
/// on/off, sum_even E^(n) - sum_odd E^(n) for parity.
FockOperator effective_measurement(Scheme scheme, double eta, const TruncationConfig& trunc);

/// O_A = U(xi) Pi_A U(xi)^dagger as a 2x2 matrix, U taken from its matrix form.
Eigen::Matrix2cd qubit_observable(const QubitSetting& xi);

/// eta_A Tr[rho (O_A (x) O_B,eff)] + (1 - eta_A) Tr[O_B,eff rho_B],
/// O_B,eff = D(beta) Pi_B,eff D(beta)^dagger.
double joint_expectation_oracle(complex alpha, const QubitSetting& xi,
                                const DisplacementSetting& beta, Scheme scheme,
                                const EfficiencyPair& effs, const TruncationConfig& trunc);

double bell_oracle(complex alpha, const MeasurementSettings& settings, const EfficiencyPair& effs,
                   const TruncationConfig& trunc);

/// Precomputed pieces for repeated oracle evaluations on one state.
class Oracle {
public:
  Oracle(complex alpha, const TruncationConfig& trunc);

  const HybridState& state() const { return state_; }
  const TruncationConfig& truncation() const { return trunc_; }

  /// Field observable O_B,eff for one displacement and efficiency.
  Matrix field_observable(Scheme scheme, const DisplacementSetting& beta, double eta_B) const;
  Matrix field_observable(Scheme scheme, const FockOperator& displacement, double eta_B) const;

  double expectation(const Eigen::Matrix2cd& qubit_obs, const Matrix& field_obs,
                     double eta_A) const;

private:
  TruncationConfig trunc_;
  HybridState state_;
  Matrix reduced_;
};

}  // namespace hybrid_bell::fock
