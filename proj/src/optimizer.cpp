#include "hybrid_bell/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "hybrid_bell/closed_form.hpp"

namespace hybrid_bell::optimize {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::OnOffReal: return "onoff-real";
    case Regime::ParityRegionI: return "parity-region-I";
    case Regime::ParityRegionII: return "parity-region-II";
    case Regime::General: return "general";
    case Regime::Degenerate: return "degenerate";
  }
  return "general";
}

Regime regime_from_string(std::string_view s) {
  for (Regime r : {Regime::OnOffReal, Regime::ParityRegionI, Regime::ParityRegionII,
                   Regime::General, Regime::Degenerate})
    if (to_string(r) == s) return r;
  raise(ErrorKind::InvalidArgument, "unknown regime '" + std::string(s) + "'");
}

std::string_view to_string(ThresholdMode m) {
  switch (m) {
    case ThresholdMode::SymmetricEta: return "symmetric";
    case ThresholdMode::EtaBOnly: return "eta-b-only";
    case ThresholdMode::FixedEtaA: return "fixed-eta-a";
    case ThresholdMode::FixedEtaB: return "fixed-eta-b";
  }
  return "symmetric";
}

namespace {

QubitSetting signed_theta(double theta) {
  return QubitSetting{theta, 0.0}.canonical();
}

bool is_real_regime(Scheme scheme, Regime regime) {
  return (scheme == Scheme::OnOff && regime == Regime::OnOffReal) ||
         (scheme == Scheme::Parity && regime == Regime::ParityRegionI);
}

void require_regime(Scheme scheme, Regime regime) {
  if (is_real_regime(scheme, regime)) return;
  if (scheme == Scheme::Parity && regime == Regime::ParityRegionII) return;
  raise(ErrorKind::RegimeMismatch, "regime " + std::string(to_string(regime)) +
                                       " has no stationarity system for scheme " +
                                       std::string(to_string(scheme)));
}

/// The stationarity systems are derived after dividing by alpha, eta_A and
/// eta_B; they say nothing when any of them vanishes.
bool system_applies(double alpha, const EfficiencyPair& effs) {
  return alpha > 0.0 && effs.eta_A > 0.0 && effs.eta_B > 0.0;
}

BellOptimum degenerate_optimum(Scheme scheme) {
  BellOptimum opt;
  opt.value = 2.0;
  opt.settings = {{0.5 * pi, 0.0}, {0.5 * pi, 0.0}, {0.0, 0.0}, {0.0, 0.0}, scheme};
  opt.regime = Regime::Degenerate;
  return opt;
}

double beta_sum(const BellOptimum& o) {
  return o.settings.beta1.magnitude + o.settings.beta2.magnitude;
}

Params4 polish(Scheme scheme, Regime regime, Params4 p, double alpha, const EfficiencyPair& effs,
               double& value) {
  auto residual = [&](const Params4& q) {
    return stationarity_residuals(scheme, regime, q, alpha, effs);
  };
  auto bell = [&](const Params4& q) {
    return closed_form::bell_value(alpha, settings_from_parameters(scheme, regime, q), effs);
  };

  Params4 r = residual(p);
  double rn = norm(r);
  for (int iter = 0; iter < 30 && rn > 1e-14; ++iter) {
    Eigen::Matrix4d jac;
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-6 * (1.0 + std::abs(p[k]));
      Params4 up = p, dn = p;
      up[k] += h;
      dn[k] -= h;
      const Params4 ru = residual(up), rd = residual(dn);
      for (int i = 0; i < 4; ++i) jac(i, k) = (ru[i] - rd[i]) / (2.0 * h);
    }
    const Eigen::Vector4d rhs(-r[0], -r[1], -r[2], -r[3]);
    const Eigen::Vector4d step = jac.colPivHouseholderQr().solve(rhs);
    if (!step.allFinite()) break;

    bool accepted = false;
    double scale = 1.0;
    for (int tries = 0; tries < 8 && !accepted; ++tries, scale *= 0.5) {
      Params4 q = p;
      for (int k = 0; k < 4; ++k) q[k] += scale * step(k);
      const Params4 rq = residual(q);
      const double rqn = norm(rq);
      if (!(rqn < rn)) continue;
      const double vq = bell(q);
      if (vq < value - 1e-12) continue;
      p = q;
      r = rq;
      rn = rqn;
      value = std::max(value, vq);
      accepted = true;
    }
    if (!accepted) break;
  }
  return p;
}

std::vector<Params4> start_grid(Scheme scheme, Regime regime, double alpha, double eta_B) {
  std::vector<Params4> starts;
  if (regime == Regime::ParityRegionII) {
    const double s = std::max(solve_beta_parity(alpha, eta_B), 0.02);
    for (double phi1 : {0.0, -pi / 8.0})
      for (double phi2 : {0.5 * pi, 3.0 * pi / 8.0}) starts.push_back({phi1, phi2, s, s});
    for (auto [m1, m2] : {std::pair{0.5, 1.5}, {1.5, 0.5}, {0.5, 0.5}, {2.0, 2.0}})
      starts.push_back({0.0, 0.5 * pi, m1 * s, m2 * s});
    return starts;
  }
  double s = std::max(solve_beta_onoff(alpha, eta_B), 0.05);
  if (scheme == Scheme::Parity) s *= 0.5;
  for (double t1 : {0.5 * pi, 3.0 * pi / 8.0})
    for (double t2 : {0.0, pi / 8.0}) starts.push_back({t1, t2, -s, s});
  for (auto [m1, m2] : {std::pair{0.5, 1.5}, {1.5, 0.5}, {0.5, 0.5}, {2.0, 2.0}})
    starts.push_back({0.5 * pi, 0.0, -m1 * s, m2 * s});
  return starts;
}

BellOptimum make_optimum(Scheme scheme, Regime regime, const Params4& p, double alpha,
                         const EfficiencyPair& effs, int evaluations) {
  BellOptimum opt;
  opt.settings = settings_from_parameters(scheme, regime, p).canonical();
  opt.value = closed_form::bell_value(alpha, opt.settings, effs);
  opt.regime = regime;
  opt.parameters = p;
  opt.evaluations = evaluations;
  if (system_applies(alpha, effs))
    opt.residual_norm = norm(stationarity_residuals(scheme, regime, p, alpha, effs));
  return opt;
}

}  // namespace

MeasurementSettings settings_from_parameters(Scheme scheme, Regime regime, const Params4& p) {
  if (regime == Regime::ParityRegionII) {
    return {{0.5 * pi, p[0]}, {0.5 * pi, p[1]}, DisplacementSetting::imaginary(-p[2]),
            DisplacementSetting::imaginary(p[3]), scheme};
  }
  if (regime == Regime::OnOffReal || regime == Regime::ParityRegionI) {
    return {signed_theta(p[0]), signed_theta(p[1]), DisplacementSetting::real(p[2]),
            DisplacementSetting::real(p[3]), scheme};
  }
  raise(ErrorKind::RegimeMismatch, "regime has no four-parameter form");
}

MeasurementSettings settings_from_full(Scheme scheme, const Params8& p) {
  return {{p[0], p[1]},
          {p[2], p[3]},
          DisplacementSetting::from_beta({p[4], p[5]}),
          DisplacementSetting::from_beta({p[6], p[7]}),
          scheme};
}

Params8 full_from_settings(const MeasurementSettings& s) {
  const complex b1 = s.beta1.beta(), b2 = s.beta2.beta();
  return {s.xi1.theta, s.xi1.phi, s.xi2.theta, s.xi2.phi, b1.real(), b1.imag(), b2.real(), b2.imag()};
}

// ---------------------------------------------------------------------------

double onoff_beta_condition(double alpha, double eta_B, double b) {
  const double x = 2.0 * eta_B * alpha * b;
  return b * std::exp(-2.0 * (1.0 - eta_B) * alpha * alpha) + b * std::sinh(x) -
         alpha * std::cosh(x);
}

double parity_beta_condition(double alpha, double eta_B, double b) {
  const double x = 4.0 * eta_B * alpha * b;
  return (alpha + b) * std::sin(x) - (alpha - b) * std::cos(x);
}

namespace {

void check_root_inputs(double alpha, double eta_B) {
  if (!(alpha >= 0.0)) raise(ErrorKind::InvalidArgument, "alpha must be non-negative");
  if (!(eta_B > 0.0 && eta_B <= 1.0)) raise(ErrorKind::InvalidArgument, "eta_B must lie in (0, 1]");
}

template <class F>
double bisect_root(F f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits);
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol);
  // take the end with the smaller residual
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

}  // namespace

double solve_beta_onoff(double alpha, double eta_B) {
  check_root_inputs(alpha, eta_B);
  if (alpha == 0.0) return 0.0;
  const auto f = [&](double b) { return onoff_beta_condition(alpha, eta_B, b); };
  double hi = std::max(alpha, 1.0);
  while (f(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e3) raise(ErrorKind::NoBracket, "on/off beta condition has no sign change");
  }
  return bisect_root(f, 0.0, hi);
}

double solve_beta_parity(double alpha, double eta_B) {
  check_root_inputs(alpha, eta_B);
  if (alpha == 0.0) return 0.0;
  const auto f = [&](double b) { return parity_beta_condition(alpha, eta_B, b); };
  // f(0) = -alpha < 0 and f = alpha + b > 0 where 4 eta_B alpha b = pi/2
  const double hi = 0.5 * pi / (4.0 * eta_B * alpha);
  return bisect_root(f, 0.0, hi);
}

MeasurementSettings onoff_closed_form_settings(double b) {
  return {QubitSetting::from_xi(-pi / 4.0), QubitSetting::from_xi(0.0),
          DisplacementSetting::real(-b), DisplacementSetting::real(b), Scheme::OnOff};
}

MeasurementSettings parity_closed_form_settings(double b) {
  return {QubitSetting::from_xi(-pi / 4.0), QubitSetting::from_xi({0.0, pi / 4.0}),
          DisplacementSetting::from_beta({0.0, -b}), DisplacementSetting::from_beta({0.0, b}),
          Scheme::Parity};
}

double bell_max_etaB(Scheme scheme, double alpha, double eta_B) {
  const double a2 = alpha * alpha;
  if (scheme == Scheme::OnOff) {
    const double b = solve_beta_onoff(alpha, eta_B);
    return 4.0 * std::exp(-eta_B * (a2 + b * b)) *
               (std::exp(-2.0 * (1.0 - eta_B) * a2) + std::sinh(2.0 * eta_B * alpha * b)) -
           2.0 * std::exp(-2.0 * a2);
  }
  const double b = solve_beta_parity(alpha, eta_B);
  const double x = 4.0 * eta_B * alpha * b;
  return 2.0 * std::exp(-2.0 * (1.0 - eta_B) * a2 - 2.0 * eta_B * b * b) *
         (std::cos(x) + std::sin(x));
}

// ---------------------------------------------------------------------------

double norm(const Params4& r) {
  return std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
}

Params4 stationarity_residuals(Scheme scheme, Regime regime, const Params4& p, double alpha,
                               const EfficiencyPair& effs) {
  require_regime(scheme, regime);
  const double eta = effs.eta_B;
  const double eta_a = effs.eta_A;
  const double a2 = alpha * alpha;

  if (regime == Regime::ParityRegionII) {
    const double phi1 = p[0], phi2 = p[1], m1 = p[2], m2 = p[3];
    const double x1 = 4.0 * eta * alpha * m1, x2 = 4.0 * eta * alpha * m2;
    const double e1 = std::exp(-2.0 * eta * m1 * m1), e2 = std::exp(-2.0 * eta * m2 * m2);
    return {
        e1 * std::sin(x1 + phi1) - e2 * std::sin(x2 - phi1),
        e1 * std::sin(x1 + phi2) + e2 * std::sin(x2 - phi2),
        m1 * (std::cos(x1 + phi1) - std::cos(x1 + phi2)) +
            alpha * (std::sin(x1 + phi1) - std::sin(x1 + phi2)),
        eta_a * (m2 * (std::cos(x2 - phi1) + std::cos(x2 - phi2)) +
                 alpha * (std::sin(x2 - phi1) + std::sin(x2 - phi2))) +
            2.0 * (1.0 - eta_a) * m2 * std::exp(2.0 * (1.0 - 2.0 * eta) * a2),
    };
  }

  // Real parameterization. On/off and parity region I share one structure;
  // they differ in the sinh/cosh argument, the Gaussian weights and the
  // constant term of the first equation.
  const bool onoff = scheme == Scheme::OnOff;
  const double k = onoff ? 2.0 : 4.0;
  const double w = onoff ? eta : 2.0 * eta;
  const double kappa = onoff ? std::exp(-2.0 * (1.0 - eta) * a2)
                             : std::exp(-2.0 * (1.0 - 2.0 * eta) * a2);
  const double vacuum = onoff ? std::exp(-eta * a2) : 0.0;

  const double t1 = p[0], t2 = p[1], b1 = p[2], b2 = p[3];
  const double c1 = std::cos(t1), s1 = std::sin(t1), c2 = std::cos(t2), s2 = std::sin(t2);
  const double e1 = std::exp(-w * b1 * b1), e2 = std::exp(-w * b2 * b2);
  const double sh1 = std::sinh(k * eta * alpha * b1), ch1 = std::cosh(k * eta * alpha * b1);
  const double sh2 = std::sinh(k * eta * alpha * b2), ch2 = std::cosh(k * eta * alpha * b2);

  return {
      s1 * (e1 * sh1 + e2 * sh2) - c1 * kappa * (e1 + e2 - vacuum),
      s2 * (e2 * sh2 - e1 * sh1) - c2 * kappa * (e2 - e1),
      (b1 * sh1 - alpha * ch1) * (c1 - c2) + kappa * b1 * (s1 - s2),
      eta_a * ((b2 * sh2 - alpha * ch2) * (c1 + c2) + kappa * b2 * (s1 + s2)) +
          2.0 * (1.0 - eta_a) * (b2 * ch2 - alpha * sh2),
  };
}

// ---------------------------------------------------------------------------

bool better_than(const BellOptimum& a, const BellOptimum& b) {
  if (a.value > b.value + 1e-12) return true;
  if (b.value > a.value + 1e-12) return false;
  const double sa = beta_sum(a), sb = beta_sum(b);
  if (sa != sb) return sa < sb;
  return a.settings.xi1.theta < b.settings.xi1.theta;
}

BellOptimum maximize_in_regime(Scheme scheme, Regime regime, double alpha,
                               const EfficiencyPair& effs, const MaximizeOptions& opts) {
  effs.validate();
  if (!(alpha >= 0.0)) raise(ErrorKind::InvalidArgument, "alpha must be non-negative");
  require_regime(scheme, regime);
  if (alpha == 0.0 || (effs.eta_A == 0.0 && effs.eta_B == 0.0)) return degenerate_optimum(scheme);

  const double eta_for_starts = std::max(effs.eta_B, 0.05);
  const auto objective = [&](const Params4& q) {
    return closed_form::bell_value(alpha, settings_from_parameters(scheme, regime, q), effs);
  };

  std::optional<BellOptimum> best;
  int evaluations = 0;
  for (const Params4& start : start_grid(scheme, regime, alpha, eta_for_starts)) {
    Params4 step;
    for (int k = 0; k < 4; ++k) step[k] = k < 2 ? 0.2 : 0.25 * std::max(std::abs(start[k]), 0.05);
    const auto run = nelder_mead_maximize<4>(objective, start, step, opts.simplex);
    evaluations += run.evaluations;
    BellOptimum candidate = make_optimum(scheme, regime, run.x, alpha, effs, 0);
    if (!best || better_than(candidate, *best)) best = candidate;
  }

  if (opts.polish && system_applies(alpha, effs)) {
    double value = best->value;
    const Params4 polished = polish(scheme, regime, best->parameters, alpha, effs, value);
    BellOptimum candidate = make_optimum(scheme, regime, polished, alpha, effs, 0);
    if (candidate.value >= best->value - 1e-12) best = candidate;
  }
  best->evaluations = evaluations;
  return *best;
}

BellOptimum maximize_bell(Scheme scheme, double alpha, const EfficiencyPair& effs,
                          const MaximizeOptions& opts) {
  if (scheme == Scheme::OnOff) return maximize_in_regime(scheme, Regime::OnOffReal, alpha, effs, opts);
  BellOptimum region1 = maximize_in_regime(scheme, Regime::ParityRegionI, alpha, effs, opts);
  if (region1.regime == Regime::Degenerate) return region1;
  BellOptimum region2 = maximize_in_regime(scheme, Regime::ParityRegionII, alpha, effs, opts);
  const int evaluations = region1.evaluations + region2.evaluations;
  BellOptimum& winner = better_than(region2, region1) ? region2 : region1;
  winner.evaluations = evaluations;
  return winner;
}

BellOptimum maximize_bell_full(Scheme scheme, double alpha, const EfficiencyPair& effs,
                               std::span<const Params8> starts, int max_evaluations) {
  effs.validate();
  const auto objective = [&](const Params8& q) {
    return closed_form::bell_value(alpha, settings_from_full(scheme, q), effs);
  };
  SimplexOptions simplex;
  simplex.max_evaluations = max_evaluations;
  Params8 step;
  step.fill(0.1);

  std::optional<BellOptimum> best;
  int evaluations = 0;
  for (const Params8& start : starts) {
    const auto run = nelder_mead_maximize<8>(objective, start, step, simplex);
    evaluations += run.evaluations;
    BellOptimum candidate;
    candidate.settings = settings_from_full(scheme, run.x).canonical();
    candidate.value = closed_form::bell_value(alpha, candidate.settings, effs);
    candidate.regime = Regime::General;
    if (!best || better_than(candidate, *best)) best = candidate;
  }
  if (!best) raise(ErrorKind::InvalidArgument, "no starting points given");
  best->evaluations = evaluations;
  return *best;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> coarse_alpha_grid(AlphaRange range) {
  std::vector<double> grid{range.lo};
  for (double a : {0.005, 0.01, 0.02, 0.035, 0.05, 0.075, 0.1})
    if (a > range.lo && a < range.hi) grid.push_back(a);
  for (int i = 3;; ++i) {
    const double a = 0.05 * i;
    if (a >= range.hi) break;
    if (a > range.lo) grid.push_back(a);
  }
  grid.push_back(range.hi);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

AlphaOptimum maximize_over_alpha(Scheme scheme, const EfficiencyPair& effs, AlphaRange range) {
  if (!(range.lo >= 0.0 && range.hi > range.lo))
    raise(ErrorKind::InvalidArgument, "alpha range must satisfy 0 <= lo < hi");

  AlphaOptimum best{range.lo, {}};
  bool have_best = false;
  const auto consider = [&](double alpha) {
    BellOptimum opt = maximize_bell(scheme, alpha, effs);
    const double value = opt.value;
    if (!have_best || better_than(opt, best.optimum)) {
      best = {alpha, std::move(opt)};
      have_best = true;
    }
    return value;
  };

  const std::vector<double> grid = coarse_alpha_grid(range);
  std::vector<double> values;
  values.reserve(grid.size());
  for (double a : grid) values.push_back(consider(a));

  const auto top = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  double lo = grid[top == 0 ? 0 : top - 1];
  double hi = grid[std::min(top + 1, grid.size() - 1)];

  // golden-section search for the maximum on [lo, hi]
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = consider(x1), f2 = consider(x2);
  while (hi - lo >= 1e-4) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = consider(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = consider(x2);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

void ThresholdQuery::validate() const {
  if (!(alpha_range.lo >= 0.0 && alpha_range.hi > alpha_range.lo && alpha_range.hi <= 3.0))
    raise(ErrorKind::InvalidArgument, "threshold alpha range must lie within [0, 3]");
  if (!(tol > 0.0)) raise(ErrorKind::InvalidArgument, "threshold tolerance must be positive");
  if ((mode == ThresholdMode::FixedEtaA || mode == ThresholdMode::FixedEtaB) &&
      !(fixed_value >= 0.0 && fixed_value <= 1.0))
    raise(ErrorKind::InvalidArgument, "fixed efficiency must lie in [0, 1]");
}

EfficiencyPair ThresholdQuery::efficiencies(double eta) const {
  switch (mode) {
    case ThresholdMode::SymmetricEta: return {eta, eta};
    case ThresholdMode::EtaBOnly: return {1.0, eta};
    case ThresholdMode::FixedEtaA: return {fixed_value, eta};
    case ThresholdMode::FixedEtaB: return {eta, fixed_value};
  }
  return {eta, eta};
}

namespace {

// B_max - 2 above which a sample counts as a violation; on/off at eta_B = 0.5
// with eta_A = 1 sits at exactly 2 up to rounding.
constexpr double kViolationMargin = 1e-12;

void check_monotone(std::vector<std::pair<double, double>> samples, const char* what) {
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].second < samples[i - 1].second - 1e-9)
      raise(ErrorKind::Numerical, std::string(what) + " is not monotone in eta near " +
                                      std::to_string(samples[i].first));
  }
}

}  // namespace

ThresholdResult find_threshold(const ThresholdQuery& query) {
  query.validate();
  ThresholdResult result;
  const auto excess = [&](double eta) {
    const double e = maximize_over_alpha(query.scheme, query.efficiencies(eta), query.alpha_range)
                         .optimum.value -
                     2.0;
    result.samples.emplace_back(eta, e);
    return e;
  };

  double lo = 0.0, hi = 1.0;
  if (excess(hi) <= kViolationMargin)
    raise(ErrorKind::NoBracket, "no Bell violation even at unit efficiency");
  if (excess(lo) > kViolationMargin)
    raise(ErrorKind::NoBracket, "Bell violation persists at zero efficiency");
  while (hi - lo > query.tol) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > kViolationMargin ? hi : lo) = mid;
  }
  check_monotone(result.samples, "alpha-optimized Bell maximum");
  result.eta = 0.5 * (lo + hi);
  return result;
}

double scheme_difference(double eta, AlphaRange range) {
  const EfficiencyPair effs{eta, eta};
  return maximize_over_alpha(Scheme::Parity, effs, range).optimum.value -
         maximize_over_alpha(Scheme::OnOff, effs, range).optimum.value;
}

CrossoverResult find_crossover(double lo, double hi, double tol, AlphaRange range) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo < hi && tol > 0.0))
    raise(ErrorKind::InvalidArgument, "crossover bracket must satisfy 0 <= lo < hi <= 1");
  CrossoverResult result;
  const auto diff = [&](double eta) {
    const double d = scheme_difference(eta, range);
    result.samples.emplace_back(eta, d);
    return d;
  };
  if (!(diff(lo) < 0.0 && diff(hi) > 0.0))
    raise(ErrorKind::NoBracket, "parity and on/off maxima do not cross inside the bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (diff(mid) > 0.0 ? hi : lo) = mid;
  }
  result.eta = 0.5 * (lo + hi);
  return result;
}

}  // namespace hybrid_bell::optimize
