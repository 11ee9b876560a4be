#include "hybrid_bell/closed_form.hpp"

#include <cmath>

namespace hybrid_bell::closed_form {

namespace {

constexpr double kOverflowGuard = 700.0;

}  // namespace

double exp_sinh(double a, double y) {
  if (std::abs(y) < kOverflowGuard && std::abs(a) < kOverflowGuard)
    return std::exp(-a) * std::sinh(y);
  return 0.5 * (std::exp(y - a) - std::exp(-y - a));
}

double exp_cosh(double a, double y) {
  if (std::abs(y) < kOverflowGuard && std::abs(a) < kOverflowGuard)
    return std::exp(-a) * std::cosh(y);
  return 0.5 * (std::exp(y - a) + std::exp(-y - a));
}

double expectation_ideal(Scheme scheme, double alpha, const QubitSetting& xi,
                         const DisplacementSetting& beta) {
  const double a2 = alpha * alpha;
  const double b = beta.magnitude;
  const double b2 = b * b;
  const double ab = alpha * b;
  const double ct = std::cos(xi.theta);
  const double st = std::sin(xi.theta);
  const double cP = std::cos(beta.phase);
  const double sP = std::sin(beta.phase);

  if (scheme == Scheme::OnOff) {
    return 2.0 * ct * exp_sinh(a2 + b2, 2.0 * ab * cP) +
           2.0 * st * std::exp(-(a2 + b2)) * std::cos(2.0 * ab * sP - xi.phi) -
           st * std::exp(-2.0 * a2) * std::cos(xi.phi);
  }
  return ct * exp_sinh(2.0 * (a2 + b2), 4.0 * ab * cP) +
         st * std::exp(-2.0 * b2) * std::cos(4.0 * ab * sP - xi.phi);
}

double joint_term(Scheme scheme, double alpha, const QubitSetting& xi,
                  const DisplacementSetting& beta, double eta_B) {
  const double a2 = alpha * alpha;
  const double b = beta.magnitude;
  const double b2 = b * b;
  const double ab = alpha * b;
  const double ct = std::cos(xi.theta);
  const double st = std::sin(xi.theta);
  const double cP = std::cos(beta.phase);
  const double sP = std::sin(beta.phase);

  if (scheme == Scheme::OnOff) {
    return 2.0 * ct * exp_sinh(eta_B * (a2 + b2), 2.0 * eta_B * ab * cP) +
           2.0 * st * std::exp(-(2.0 - eta_B) * a2 - eta_B * b2) *
               std::cos(2.0 * eta_B * ab * sP - xi.phi) -
           st * std::exp(-2.0 * a2) * std::cos(xi.phi);
  }
  return ct * exp_sinh(2.0 * eta_B * (a2 + b2), 4.0 * eta_B * ab * cP) +
         st * std::exp(-2.0 * (1.0 - eta_B) * a2 - 2.0 * eta_B * b2) *
             std::cos(4.0 * eta_B * ab * sP - xi.phi);
}

double marginal_term(Scheme scheme, double alpha, const DisplacementSetting& beta, double eta_B) {
  const double a2 = alpha * alpha;
  const double b = beta.magnitude;
  const double ab = alpha * b;
  const double cP = std::cos(beta.phase);

  if (scheme == Scheme::OnOff)
    return 2.0 * exp_cosh(eta_B * (a2 + b * b), 2.0 * eta_B * ab * cP) - 1.0;
  return exp_cosh(2.0 * eta_B * (a2 + b * b), 4.0 * eta_B * ab * cP);
}

double expectation_effective(Scheme scheme, double alpha, const QubitSetting& xi,
                             const DisplacementSetting& beta, const EfficiencyPair& effs) {
  // eta_A = 1 and eta_A = 0 are hit by the sweeps; skip the unused term.
  if (effs.eta_A == 1.0) return joint_term(scheme, alpha, xi, beta, effs.eta_B);
  if (effs.eta_A == 0.0) return marginal_term(scheme, alpha, beta, effs.eta_B);
  return effs.eta_A * joint_term(scheme, alpha, xi, beta, effs.eta_B) +
         (1.0 - effs.eta_A) * marginal_term(scheme, alpha, beta, effs.eta_B);
}

double bell_value(double alpha, const MeasurementSettings& s, const EfficiencyPair& effs) {
  const auto e = [&](const QubitSetting& xi, const DisplacementSetting& beta) {
    return expectation_effective(s.scheme, alpha, xi, beta, effs);
  };
  return e(s.xi1, s.beta1) + e(s.xi1, s.beta2) + e(s.xi2, s.beta2) - e(s.xi2, s.beta1);
}

double bell_value_ideal(double alpha, const MeasurementSettings& s) {
  const auto e = [&](const QubitSetting& xi, const DisplacementSetting& beta) {
    return expectation_ideal(s.scheme, alpha, xi, beta);
  };
  return e(s.xi1, s.beta1) + e(s.xi1, s.beta2) + e(s.xi2, s.beta2) - e(s.xi2, s.beta1);
}

}  // namespace hybrid_bell::closed_form
