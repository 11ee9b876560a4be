#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hybrid_bell/nelder_mead.hpp"
#include "hybrid_bell/types.hpp"

namespace hybrid_bell::optimize {

/// Which parameterization produced an optimum.
///
/// OnOffReal / ParityRegionI: params = (theta1, theta2, b1, b2), phi = 0 and
/// real signed displacements beta_k = b_k (negative theta means phi = pi).
/// ParityRegionII: params = (phi1, phi2, m1, m2), theta1 = theta2 = pi/2,
/// beta1 = -i m1, beta2 = +i m2.
/// Degenerate: alpha = 0 or eta_A = eta_B = 0, where B = 2 exactly.
enum class Regime { OnOffReal, ParityRegionI, ParityRegionII, General, Degenerate };

std::string_view to_string(Regime r);
Regime regime_from_string(std::string_view s);

using Params4 = std::array<double, 4>;
using Params8 = std::array<double, 8>;

struct BellOptimum {
  double value = 0.0;
  MeasurementSettings settings;
  Regime regime = Regime::General;
  Params4 parameters{};
  /// Norm of the stationarity system at the optimum, when one applies.
  std::optional<double> residual_norm;
  int evaluations = 0;
};

MeasurementSettings settings_from_parameters(Scheme scheme, Regime regime, const Params4& p);

/// (theta1, phi1, theta2, phi2, Re beta1, Im beta1, Re beta2, Im beta2).
MeasurementSettings settings_from_full(Scheme scheme, const Params8& p);
Params8 full_from_settings(const MeasurementSettings& s);

// ---------------------------------------------------------------------------
// Closed-form optima for eta_A = 1
// ---------------------------------------------------------------------------

/// b e^{-2(1-eta_B) alpha^2} + b sinh(2 eta_B alpha b) - alpha cosh(2 eta_B alpha b).
double onoff_beta_condition(double alpha, double eta_B, double b);

/// (alpha + b) sin(4 eta_B alpha b) - (alpha - b) cos(4 eta_B alpha b); the
/// tangent condition with the cosine multiplied through.
double parity_beta_condition(double alpha, double eta_B, double b);

/// Positive root of onoff_beta_condition. Returns 0 at alpha = 0.
double solve_beta_onoff(double alpha, double eta_B);

/// Smallest positive root of the parity condition, searched on
/// 4 eta_B alpha b in (0, pi/2). Returns 0 at alpha = 0.
double solve_beta_parity(double alpha, double eta_B);

/// xi1 = -pi/4, xi2 = 0, beta1 = -beta2 = -b.
MeasurementSettings onoff_closed_form_settings(double b);
/// xi1 = -pi/4, xi2 = i pi/4, beta1 = -beta2 = -i b.
MeasurementSettings parity_closed_form_settings(double b);

/// Bell value at the closed-form settings with eta_A = 1.
double bell_max_etaB(Scheme scheme, double alpha, double eta_B);

// ---------------------------------------------------------------------------
// Stationarity systems
// ---------------------------------------------------------------------------

/// Residuals of dB/dparams = 0 in the regime's parameterization, written in
/// root form (tangent conditions cross-multiplied, the 1/eta_A factor of the
/// last equation multiplied out).
Params4 stationarity_residuals(Scheme scheme, Regime regime, const Params4& params, double alpha,
                               const EfficiencyPair& effs);

double norm(const Params4& r);

// ---------------------------------------------------------------------------
// Maximization
// ---------------------------------------------------------------------------

struct MaximizeOptions {
  SimplexOptions simplex{};
  bool polish = true;
};

/// Multi-start simplex maximization of B in one parameterization.
BellOptimum maximize_in_regime(Scheme scheme, Regime regime, double alpha,
                               const EfficiencyPair& effs, const MaximizeOptions& opts = {});

/// Best over the applicable regimes (on/off: OnOffReal; parity: region I and II).
BellOptimum maximize_bell(Scheme scheme, double alpha, const EfficiencyPair& effs,
                          const MaximizeOptions& opts = {});

/// Unrestricted 8-parameter simplex search from the given starts.
BellOptimum maximize_bell_full(Scheme scheme, double alpha, const EfficiencyPair& effs,
                               std::span<const Params8> starts, int max_evaluations = 20000);

/// Strict ordering used to pick between optima: larger value, then (for
/// values within 1e-12) smaller |beta1| + |beta2|, then smaller theta1.
bool better_than(const BellOptimum& a, const BellOptimum& b);

struct AlphaRange {
  double lo = 0.0;
  double hi = 3.0;
};

struct AlphaOptimum {
  double alpha_opt = 0.0;
  BellOptimum optimum;
};

/// Coarse alpha grid, then golden-section refinement of the best bracket
/// down to a width below 1e-4.
AlphaOptimum maximize_over_alpha(Scheme scheme, const EfficiencyPair& effs,
                                 AlphaRange range = {});

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

enum class ThresholdMode { SymmetricEta, EtaBOnly, FixedEtaA, FixedEtaB };

std::string_view to_string(ThresholdMode m);

struct ThresholdQuery {
  Scheme scheme = Scheme::OnOff;
  ThresholdMode mode = ThresholdMode::SymmetricEta;
  double fixed_value = 1.0;  // used by FixedEtaA / FixedEtaB
  AlphaRange alpha_range{};
  double tol = 1e-4;

  void validate() const;
  EfficiencyPair efficiencies(double eta) const;
};

struct ThresholdResult {
  double eta = 0.0;
  /// (eta, alpha-optimized B_max - 2) at every bisection sample.
  std::vector<std::pair<double, double>> samples;
};

/// Bisection on eta of the alpha-optimized excess B_max - 2.
ThresholdResult find_threshold(const ThresholdQuery& query);

struct CrossoverResult {
  double eta = 0.0;
  std::vector<std::pair<double, double>> samples;  // (eta, parity - onoff)
};

/// Symmetric-eta point where the alpha-optimized parity maximum overtakes
/// the on/off one.
CrossoverResult find_crossover(double lo = 0.9, double hi = 1.0, double tol = 1e-4,
                               AlphaRange range = {});

/// Alpha-optimized parity minus on/off maximum at symmetric efficiency eta.
double scheme_difference(double eta, AlphaRange range = {});

}  // namespace hybrid_bell::optimize
