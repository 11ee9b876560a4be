#pragma once

#include "hybrid_bell/types.hpp"

namespace hybrid_bell::closed_form {

/// Correlator <O_A(xi) (x) O_B(beta)> for ideal detectors on the state
/// (|H>|alpha> + |V>|-alpha>)/sqrt(2), alpha real.
double expectation_ideal(Scheme scheme, double alpha, const QubitSetting& xi,
                         const DisplacementSetting& beta);

/// <O_A (x) O_B,eff>: both detectors see the state, field detector has
/// efficiency eta_B.
double joint_term(Scheme scheme, double alpha, const QubitSetting& xi,
                  const DisplacementSetting& beta, double eta_B);

/// Tr_B[O_B,eff rho_B]: the polarization detector did not fire and reports +1.
double marginal_term(Scheme scheme, double alpha, const DisplacementSetting& beta, double eta_B);

/// eta_A * joint_term + (1 - eta_A) * marginal_term.
double expectation_effective(Scheme scheme, double alpha, const QubitSetting& xi,
                             const DisplacementSetting& beta, const EfficiencyPair& effs);

/// CHSH combination E(xi1,b1) + E(xi1,b2) + E(xi2,b2) - E(xi2,b1).
double bell_value(double alpha, const MeasurementSettings& settings, const EfficiencyPair& effs);

double bell_value_ideal(double alpha, const MeasurementSettings& settings);

/// e^{-a} sinh(y) and e^{-a} cosh(y) without intermediate overflow.
double exp_sinh(double a, double y);
double exp_cosh(double a, double y);

}  // namespace hybrid_bell::closed_form
