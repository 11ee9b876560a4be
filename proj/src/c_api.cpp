#include "hybrid_bell/hybrid_bell.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "hybrid_bell/closed_form.hpp"
#include "hybrid_bell/fock_oracle.hpp"
#include "hybrid_bell/optimizer.hpp"
#include "hybrid_bell/sweep.hpp"

using namespace hybrid_bell;

struct hb_oracle {
  std::optional<int> dim;
  double tail_tol = 1e-12;
};

struct hb_job {
  sweep::ScanConfig config;
  std::optional<sweep::RunResult> result;
};

namespace {

thread_local std::string last_error;

hb_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return HB_INVALID_ARGUMENT;
    case ErrorKind::Config: return HB_CONFIG_ERROR;
    case ErrorKind::Numerical: return HB_NUMERICAL_ERROR;
    case ErrorKind::TruncationTooSmall: return HB_TRUNCATION_TOO_SMALL;
    case ErrorKind::NoBracket: return HB_NO_BRACKET;
    case ErrorKind::RegimeMismatch: return HB_REGIME_MISMATCH;
    case ErrorKind::Io: return HB_IO_ERROR;
  }
  return HB_INTERNAL_ERROR;
}

template <class F>
hb_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return HB_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HB_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HB_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown failure";
    return HB_INTERNAL_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) raise(ErrorKind::InvalidArgument, what);
}

template <class T>
void require_ptr(const T* p, const char* name) {
  if (!p) raise(ErrorKind::InvalidArgument, std::string(name) + " is NULL");
}

Scheme scheme_of(hb_scheme s) {
  switch (s) {
    case HB_ONOFF: return Scheme::OnOff;
    case HB_PARITY: return Scheme::Parity;
  }
  raise(ErrorKind::InvalidArgument, "unknown scheme");
}

hb_scheme to_c(Scheme s) { return s == Scheme::OnOff ? HB_ONOFF : HB_PARITY; }

optimize::Regime regime_of(hb_regime r) {
  switch (r) {
    case HB_REGIME_ONOFF_REAL: return optimize::Regime::OnOffReal;
    case HB_REGIME_PARITY_I: return optimize::Regime::ParityRegionI;
    case HB_REGIME_PARITY_II: return optimize::Regime::ParityRegionII;
    case HB_REGIME_GENERAL: return optimize::Regime::General;
    case HB_REGIME_DEGENERATE: return optimize::Regime::Degenerate;
  }
  raise(ErrorKind::InvalidArgument, "unknown regime");
}

hb_regime to_c(optimize::Regime r) {
  switch (r) {
    case optimize::Regime::OnOffReal: return HB_REGIME_ONOFF_REAL;
    case optimize::Regime::ParityRegionI: return HB_REGIME_PARITY_I;
    case optimize::Regime::ParityRegionII: return HB_REGIME_PARITY_II;
    case optimize::Regime::General: return HB_REGIME_GENERAL;
    case optimize::Regime::Degenerate: return HB_REGIME_DEGENERATE;
  }
  return HB_REGIME_GENERAL;
}

double checked_alpha(double alpha) {
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  return alpha;
}

QubitSetting from_c(hb_qubit_setting x) {
  require(std::isfinite(x.theta) && std::isfinite(x.phi), "qubit setting must be finite");
  return {x.theta, x.phi};
}

DisplacementSetting from_c(hb_displacement b) {
  require(std::isfinite(b.magnitude) && std::isfinite(b.phase), "displacement must be finite");
  return {b.magnitude, b.phase};
}

EfficiencyPair from_c(hb_efficiency e) {
  EfficiencyPair p{e.eta_A, e.eta_B};
  p.validate();
  return p;
}

MeasurementSettings from_c(const hb_settings& s) {
  return {from_c(s.xi1), from_c(s.xi2), from_c(s.beta1), from_c(s.beta2), scheme_of(s.scheme)};
}

hb_settings to_c(const MeasurementSettings& s) {
  return {{s.xi1.theta, s.xi1.phi},
          {s.xi2.theta, s.xi2.phi},
          {s.beta1.magnitude, s.beta1.phase},
          {s.beta2.magnitude, s.beta2.phase},
          to_c(s.scheme)};
}

void fill(hb_optimum* out, const optimize::BellOptimum& opt, double alpha) {
  out->value = opt.value;
  out->settings = to_c(opt.settings);
  out->regime = to_c(opt.regime);
  for (int i = 0; i < 4; ++i) out->parameters[i] = opt.parameters[static_cast<std::size_t>(i)];
  out->has_residual = opt.residual_norm.has_value() ? 1 : 0;
  out->residual_norm = opt.residual_norm.value_or(std::nan(""));
  out->alpha = alpha;
}

fock::TruncationConfig truncation_for(const hb_oracle& o, double amplitude) {
  fock::TruncationConfig t = o.dim ? fock::TruncationConfig{*o.dim, o.tail_tol}
                                   : fock::TruncationConfig::automatic(amplitude, o.tail_tol);
  t.require_admits(amplitude);
  return t;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const sweep::RunResult& result_of(const hb_job* job) {
  require_ptr(job, "job");
  if (!job->result) raise(ErrorKind::InvalidArgument, "job has not been run");
  return *job->result;
}

sweep::OutputFormat format_for(const hb_job* job, const char* format) {
  if (!format) return job->config.format;
  try {
    return sweep::format_from_string(format);
  } catch (const Error& e) {
    raise(ErrorKind::InvalidArgument, e.what());
  }
}

}  // namespace

extern "C" {

const char* hb_last_error(void) { return last_error.c_str(); }

const char* hb_version(void) { return "0.1.0"; }

hb_status hb_expectation(hb_scheme scheme, double alpha, hb_qubit_setting xi, hb_displacement beta,
                         hb_efficiency effs, double* out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = closed_form::expectation_effective(scheme_of(scheme), checked_alpha(alpha), from_c(xi),
                                              from_c(beta), from_c(effs));
  });
}

hb_status hb_expectation_ideal(hb_scheme scheme, double alpha, hb_qubit_setting xi,
                               hb_displacement beta, double* out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = closed_form::expectation_ideal(scheme_of(scheme), checked_alpha(alpha), from_c(xi),
                                          from_c(beta));
  });
}

hb_status hb_bell_value(double alpha, const hb_settings* settings, hb_efficiency effs,
                        double* out) {
  return guarded([&] {
    require_ptr(settings, "settings");
    require_ptr(out, "out");
    *out = closed_form::bell_value(checked_alpha(alpha), from_c(*settings), from_c(effs));
  });
}

hb_status hb_solve_beta(hb_scheme scheme, double alpha, double eta_B, double* out) {
  return guarded([&] {
    require_ptr(out, "out");
    from_c(hb_efficiency{1.0, eta_B});
    *out = scheme_of(scheme) == Scheme::OnOff ? optimize::solve_beta_onoff(checked_alpha(alpha), eta_B)
                                              : optimize::solve_beta_parity(checked_alpha(alpha), eta_B);
  });
}

hb_status hb_bell_max_eta_b(hb_scheme scheme, double alpha, double eta_B, double* out) {
  return guarded([&] {
    require_ptr(out, "out");
    from_c(hb_efficiency{1.0, eta_B});
    *out = optimize::bell_max_etaB(scheme_of(scheme), checked_alpha(alpha), eta_B);
  });
}

hb_status hb_maximize_bell(hb_scheme scheme, double alpha, hb_efficiency effs, hb_optimum* out) {
  return guarded([&] {
    require_ptr(out, "out");
    const auto opt = optimize::maximize_bell(scheme_of(scheme), checked_alpha(alpha), from_c(effs));
    fill(out, opt, alpha);
  });
}

hb_status hb_maximize_over_alpha(hb_scheme scheme, hb_efficiency effs, double alpha_lo,
                                 double alpha_hi, hb_optimum* out) {
  return guarded([&] {
    require_ptr(out, "out");
    checked_alpha(alpha_lo);
    require(std::isfinite(alpha_hi) && alpha_hi > alpha_lo, "alpha range must satisfy lo < hi");
    const auto best =
        optimize::maximize_over_alpha(scheme_of(scheme), from_c(effs), {alpha_lo, alpha_hi});
    fill(out, best.optimum, best.alpha_opt);
  });
}

hb_status hb_stationarity_residuals(hb_scheme scheme, hb_regime regime, const double params[4],
                                    double alpha, hb_efficiency effs, double residuals[4]) {
  return guarded([&] {
    require_ptr(params, "params");
    require_ptr(residuals, "residuals");
    const optimize::Params4 p{params[0], params[1], params[2], params[3]};
    const auto r = optimize::stationarity_residuals(scheme_of(scheme), regime_of(regime), p,
                                                    checked_alpha(alpha), from_c(effs));
    for (int i = 0; i < 4; ++i) residuals[i] = r[static_cast<std::size_t>(i)];
  });
}

hb_status hb_find_threshold(hb_scheme scheme, hb_threshold_mode mode, double fixed_value,
                            double tol, double* eta_out) {
  return guarded([&] {
    require_ptr(eta_out, "eta_out");
    optimize::ThresholdQuery q;
    q.scheme = scheme_of(scheme);
    switch (mode) {
      case HB_SYMMETRIC_ETA: q.mode = optimize::ThresholdMode::SymmetricEta; break;
      case HB_ETA_B_ONLY: q.mode = optimize::ThresholdMode::EtaBOnly; break;
      case HB_FIXED_ETA_A: q.mode = optimize::ThresholdMode::FixedEtaA; break;
      case HB_FIXED_ETA_B: q.mode = optimize::ThresholdMode::FixedEtaB; break;
      default: raise(ErrorKind::InvalidArgument, "unknown threshold mode");
    }
    q.fixed_value = fixed_value;
    q.tol = tol;
    *eta_out = optimize::find_threshold(q).eta;
  });
}

hb_status hb_find_crossover(double lo, double hi, double tol, double* eta_out) {
  return guarded([&] {
    require_ptr(eta_out, "eta_out");
    require(lo >= 0.0 && hi <= 1.0 && lo < hi, "crossover bracket must satisfy 0 <= lo < hi <= 1");
    require(tol > 0.0, "tol must be positive");
    *eta_out = optimize::find_crossover(lo, hi, tol).eta;
  });
}

// ---------------------------------------------------------------------------

hb_status hb_oracle_create(int dim, double tail_tol, hb_oracle** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = nullptr;
    require(tail_tol > 0.0, "tail_tol must be positive");
    auto o = std::make_unique<hb_oracle>();
    if (dim > 0) {
      fock::TruncationConfig{dim, tail_tol}.validate();
      o->dim = dim;
    }
    o->tail_tol = tail_tol;
    *out = o.release();
  });
}

void hb_oracle_destroy(hb_oracle* oracle) { delete oracle; }

hb_status hb_oracle_expectation(const hb_oracle* oracle, hb_scheme scheme, double alpha,
                                hb_qubit_setting xi, hb_displacement beta, hb_efficiency effs,
                                double* out) {
  return guarded([&] {
    require_ptr(oracle, "oracle");
    require_ptr(out, "out");
    const DisplacementSetting b = from_c(beta);
    const auto trunc = truncation_for(*oracle, checked_alpha(alpha) + std::abs(b.magnitude));
    *out = fock::joint_expectation_oracle(complex(alpha, 0.0), from_c(xi), b, scheme_of(scheme),
                                          from_c(effs), trunc);
  });
}

hb_status hb_oracle_bell(const hb_oracle* oracle, double alpha, const hb_settings* settings,
                         hb_efficiency effs, double* out) {
  return guarded([&] {
    require_ptr(oracle, "oracle");
    require_ptr(settings, "settings");
    require_ptr(out, "out");
    const MeasurementSettings s = from_c(*settings);
    const double amp = checked_alpha(alpha) +
                       std::max(std::abs(s.beta1.magnitude), std::abs(s.beta2.magnitude));
    *out = fock::bell_oracle(complex(alpha, 0.0), s, from_c(effs), truncation_for(*oracle, amp));
  });
}

// ---------------------------------------------------------------------------

hb_status hb_job_from_command(const char* command, hb_job** out) {
  return guarded([&] {
    require_ptr(command, "command");
    require_ptr(out, "out");
    *out = nullptr;
    auto job = std::make_unique<hb_job>();
    job->config = sweep::ScanConfig::defaults_for(sweep::command_from_string(command));
    *out = job.release();
  });
}

hb_status hb_job_from_config_text(const char* text, hb_job** out) {
  return guarded([&] {
    require_ptr(text, "text");
    require_ptr(out, "out");
    *out = nullptr;
    auto job = std::make_unique<hb_job>();
    job->config = sweep::parse_config(text);
    *out = job.release();
  });
}

hb_status hb_job_from_config_file(const char* path, hb_job** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = nullptr;
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Config, std::string("cannot read config file ") + path);
    std::ostringstream text;
    text << in.rdbuf();
    auto job = std::make_unique<hb_job>();
    job->config = sweep::parse_config(text.str());
    *out = job.release();
  });
}

void hb_job_destroy(hb_job* job) { delete job; }

hb_status hb_job_set(hb_job* job, const char* key, const char* value) {
  return guarded([&] {
    require_ptr(job, "job");
    require_ptr(key, "key");
    require_ptr(value, "value");
    job->config.set(key, value);
    job->result.reset();
  });
}

hb_status hb_job_run(hb_job* job) {
  return guarded([&] {
    require_ptr(job, "job");
    job->result.reset();
    job->result = sweep::run(job->config);
  });
}

hb_status hb_job_row_count(const hb_job* job, size_t* out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = result_of(job).table.rows.size();
  });
}

hb_status hb_job_exit_code(const hb_job* job, int* out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = result_of(job).exit_code;
  });
}

const char* hb_job_message(const hb_job* job) {
  if (!job || !job->result) return "";
  return job->result->message.c_str();
}

hb_status hb_job_render(const hb_job* job, const char* format, char** out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = nullptr;
    const auto& r = result_of(job);
    *out = copy_string(sweep::render(r, format_for(job, format)));
  });
}

hb_status hb_job_write(const hb_job* job, const char* path, const char* format) {
  return guarded([&] {
    require_ptr(path, "path");
    const auto& r = result_of(job);
    sweep::write_output(path, sweep::render(r, format_for(job, format)));
  });
}

const char* hb_job_command(const hb_job* job) {
  if (!job) return "";
  return sweep::to_string(job->config.command).data();
}

const char* hb_job_output_path(const hb_job* job) {
  if (!job) return "";
  return job->config.output.c_str();
}

void hb_free_string(char* s) { std::free(s); }

}  // extern "C"
