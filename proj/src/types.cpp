#include "hybrid_bell/types.hpp"

#include <cmath>

namespace hybrid_bell {

std::string_view to_string(Scheme s) {
  return s == Scheme::OnOff ? "onoff" : "parity";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "onoff" || s == "on/off" || s == "on-off") return Scheme::OnOff;
  if (s == "parity") return Scheme::Parity;
  raise(ErrorKind::InvalidArgument, "unknown scheme '" + std::string(s) + "'");
}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

double wrap_angle(double a) {
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  // fmod can round a tiny negative remainder up to exactly 2pi
  if (r >= two_pi) r = 0.0;
  return r;
}

complex QubitSetting::xi() const { return -0.5 * theta * std::polar(1.0, -phi); }

QubitSetting QubitSetting::canonical() const {
  double t = wrap_angle(theta);
  double p = phi;
  if (t > pi) {
    t = two_pi - t;
    p += pi;
  }
  return {t, wrap_angle(p)};
}

QubitSetting QubitSetting::from_xi(complex xi) {
  const double mag = std::abs(xi);
  if (mag == 0.0) return {0.0, 0.0};
  // xi = -(theta/2) e^{-i phi}  =>  -xi/|xi| = e^{-i phi}
  const double phi = -std::arg(-xi);
  return QubitSetting{2.0 * mag, phi}.canonical();
}

DisplacementSetting DisplacementSetting::canonical() const {
  if (magnitude < 0.0) return {-magnitude, wrap_angle(phase + pi)};
  return {magnitude, wrap_angle(phase)};
}

DisplacementSetting DisplacementSetting::from_beta(complex beta) {
  return DisplacementSetting{std::abs(beta), std::arg(beta)}.canonical();
}

DisplacementSetting DisplacementSetting::real(double b) {
  return b >= 0.0 ? DisplacementSetting{b, 0.0} : DisplacementSetting{-b, pi};
}

DisplacementSetting DisplacementSetting::imaginary(double s) {
  return s >= 0.0 ? DisplacementSetting{s, 0.5 * pi} : DisplacementSetting{-s, 1.5 * pi};
}

void EfficiencyPair::validate() const {
  if (!(eta_A >= 0.0 && eta_A <= 1.0) || !(eta_B >= 0.0 && eta_B <= 1.0))
    raise(ErrorKind::InvalidArgument, "detector efficiencies must lie in [0, 1]");
}

MeasurementSettings MeasurementSettings::canonical() const {
  return {xi1.canonical(), xi2.canonical(), beta1.canonical(), beta2.canonical(), scheme};
}

}  // namespace hybrid_bell
