#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hybrid_bell {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double cirelson_bound = 2.0 * std::numbers::sqrt2;

/// Measurement applied to the coherent-state (field) mode.
enum class Scheme { OnOff, Parity };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Errors. Every failure of the C++ core is one of these; the C API maps each
// kind onto an hb_status code.
// ---------------------------------------------------------------------------

enum class ErrorKind {
  InvalidArgument,
  Config,
  Numerical,
  TruncationTooSmall,
  NoBracket,
  RegimeMismatch,
  Io,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

// ---------------------------------------------------------------------------
// Local settings
// ---------------------------------------------------------------------------

/// Qubit rotation U(xi) with xi = -(theta/2) e^{-i phi}.
///
/// Evaluators accept any real theta/phi. canonical() maps onto
/// theta in [0, pi], phi in [0, 2pi) using (theta, phi) ~ (-theta, phi + pi)
/// ~ (theta + 2pi, phi), which leave U Pi_A U^dagger unchanged.
struct QubitSetting {
  double theta = 0.0;
  double phi = 0.0;

  complex xi() const;
  QubitSetting canonical() const;
  static QubitSetting from_xi(complex xi);
};

/// Displacement amplitude beta = magnitude * e^{i phase}.
struct DisplacementSetting {
  double magnitude = 0.0;
  double phase = 0.0;

  complex beta() const { return std::polar(magnitude, phase); }
  DisplacementSetting canonical() const;
  static DisplacementSetting from_beta(complex beta);
  /// Real signed amplitude: phase 0 for b >= 0, pi otherwise.
  static DisplacementSetting real(double b);
  /// Purely imaginary amplitude i*s.
  static DisplacementSetting imaginary(double s);
};

struct EfficiencyPair {
  double eta_A = 1.0;
  double eta_B = 1.0;

  void validate() const;
};

struct MeasurementSettings {
  QubitSetting xi1;
  QubitSetting xi2;
  DisplacementSetting beta1;
  DisplacementSetting beta2;
  Scheme scheme = Scheme::OnOff;

  MeasurementSettings canonical() const;
};

/// Wraps an angle into [0, 2pi).
double wrap_angle(double a);

}  // namespace hybrid_bell
