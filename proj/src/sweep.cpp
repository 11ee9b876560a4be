#include "hybrid_bell/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "hybrid_bell/closed_form.hpp"
#include "hybrid_bell/fock_oracle.hpp"

namespace hybrid_bell::sweep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kVerifyTolerance = 1e-7;

[[noreturn]] void config_error(const std::string& what) { raise(ErrorKind::Config, what); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    config_error("'" + std::string(key) + "': not a number: '" + t + "'");
  return v;
}

long long parse_int(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    // accept integral values written in scientific notation, e.g. 1e3
    const double d = parse_double(t, key);
    if (d != std::floor(d) || std::abs(d) > 9e15)
      config_error("'" + std::string(key) + "': not an integer: '" + t + "'");
    return static_cast<long long>(d);
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  config_error("'" + std::string(key) + "': expected true/false, got '" + t + "'");
}

optimize::ThresholdMode mode_from_string(std::string_view s) {
  using optimize::ThresholdMode;
  for (ThresholdMode m : {ThresholdMode::SymmetricEta, ThresholdMode::EtaBOnly,
                          ThresholdMode::FixedEtaA, ThresholdMode::FixedEtaB})
    if (optimize::to_string(m) == s) return m;
  config_error("unknown threshold mode '" + std::string(s) + "'");
}

/// Runs body(i) for i in [0, n) on a pool of workers. The first failure by
/// index is rethrown after all workers finish, so errors are deterministic.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int effective_threads(const ScanConfig& config) {
  return config.threads > 0 ? config.threads : default_thread_count();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Command c) {
  switch (c) {
    case Command::BellMax: return "bell-max";
    case Command::AlphaScan: return "alpha-scan";
    case Command::EtaScan: return "eta-scan";
    case Command::Contour: return "contour";
    case Command::Threshold: return "threshold";
    case Command::Crossover: return "crossover";
    case Command::Verify: return "verify";
    case Command::Figures: return "figures";
  }
  return "bell-max";
}

Command command_from_string(std::string_view s) {
  for (Command c : {Command::BellMax, Command::AlphaScan, Command::EtaScan, Command::Contour,
                    Command::Threshold, Command::Crossover, Command::Verify, Command::Figures})
    if (to_string(c) == s) return c;
  config_error("unknown command '" + std::string(s) + "'");
}

OutputFormat format_from_string(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  config_error("unknown output format '" + std::string(s) + "'");
}

std::vector<double> Grid::values() const {
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(static_cast<std::size_t>(std::max(n, 1LL)));
  for (long long i = 0; i < n; ++i) {
    // snap to 12 decimals so that 0.1 + 2*0.1 prints as 0.3
    const double v = start + static_cast<double>(i) * step;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

Grid Grid::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() == 1) return single(parse_double(parts[0], "grid"));
  if (parts.size() != 3) config_error("grid must be 'start:stop:step' or a number");
  return {parse_double(parts[0], "grid start"), parse_double(parts[1], "grid stop"),
          parse_double(parts[2], "grid step")};
}

// ---------------------------------------------------------------------------

ScanConfig ScanConfig::defaults_for(Command command) {
  ScanConfig c;
  c.command = command;
  switch (command) {
    case Command::BellMax:
      c.alpha = {0.0, 3.0, 0.05};
      break;
    case Command::AlphaScan:
      c.alpha = {0.05, 3.0, 0.05};
      break;
    case Command::EtaScan:
      c.alpha = {0.1, 0.5, 0.1};
      c.eta = Grid{0.6, 1.0, 0.01};
      break;
    case Command::Contour:
      c.alpha = {0.05, 1.0, 0.05};
      c.eta = Grid{0.5, 1.0, 0.01};
      break;
    case Command::Threshold:
      c.alpha = {0.0, 3.0, 0.05};
      break;
    case Command::Crossover:
      c.alpha = {0.0, 3.0, 0.05};
      break;
    case Command::Verify:
      break;
    case Command::Figures:
      break;
  }
  return c;
}

std::vector<std::string> figure_names() {
  return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"};
}

ScanConfig figure_preset(std::string_view name) {
  ScanConfig c;
  if (name == "fig1") {
    // perfect detectors, B_max against alpha
    c = ScanConfig::defaults_for(Command::AlphaScan);
    c.alpha = {0.05, 3.0, 0.05};
  } else if (name == "fig2") {
    // perfect polarization detector, eta_B from 0.5 to 1
    c = ScanConfig::defaults_for(Command::AlphaScan);
    c.alpha = {0.05, 2.0, 0.05};
    c.eta_B = {0.5, 1.0, 0.1};
  } else if (name == "fig3") {
    c = ScanConfig::defaults_for(Command::Contour);
  } else if (name == "fig4") {
    c = ScanConfig::defaults_for(Command::EtaScan);
    c.schemes = {Scheme::OnOff};
  } else if (name == "fig5") {
    c = ScanConfig::defaults_for(Command::EtaScan);
    c.schemes = {Scheme::Parity};
  } else if (name == "fig6") {
    // alpha-optimized maxima against symmetric efficiency
    c = ScanConfig::defaults_for(Command::BellMax);
    c.eta = Grid{0.6, 1.0, 0.01};
  } else if (name == "fig7" || name == "fig8" || name == "fig9") {
    c = ScanConfig::defaults_for(Command::BellMax);
    c.eta_A = {0.5, 1.0, 0.05};
    c.eta_B = {0.5, 1.0, 0.05};
    if (name == "fig8") c.difference = true;
    if (name == "fig9") c.schemes = {Scheme::Parity};
  } else {
    config_error("unknown figure '" + std::string(name) + "'");
  }
  c.figure = std::string(name);
  return c;
}

void ScanConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "scheme" || key == "schemes") {
    std::vector<Scheme> parsed;
    for (const auto& s : split(value, ',')) {
      if (s == "both") {
        parsed.push_back(Scheme::OnOff);
        parsed.push_back(Scheme::Parity);
        continue;
      }
      try {
        parsed.push_back(scheme_from_string(s));
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
    std::sort(parsed.begin(), parsed.end());
    parsed.erase(std::unique(parsed.begin(), parsed.end()), parsed.end());
    schemes = parsed;
  } else if (key == "alpha") {
    alpha = Grid::parse(value);
  } else if (key == "eta") {
    eta = Grid::parse(value);
  } else if (key == "eta_A" || key == "eta_a") {
    eta_A = Grid::parse(value);
    eta.reset();
  } else if (key == "eta_B" || key == "eta_b") {
    eta_B = Grid::parse(value);
    eta.reset();
  } else if (key == "dim") {
    dim = static_cast<int>(parse_int(value, key));
  } else if (key == "tail_tol") {
    tail_tol = parse_double(value, key);
  } else if (key == "out" || key == "output") {
    output = value;
  } else if (key == "format") {
    format = format_from_string(value);
  } else if (key == "threads") {
    threads = static_cast<int>(parse_int(value, key));
  } else if (key == "seed") {
    const long long s = parse_int(value, key);
    if (s < 0) config_error("seed must be non-negative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "samples") {
    samples = static_cast<int>(parse_int(value, key));
  } else if (key == "alpha_max") {
    alpha_max = parse_double(value, key);
  } else if (key == "beta_max") {
    beta_max = parse_double(value, key);
  } else if (key == "perfect") {
    perfect = parse_bool(value, key);
  } else if (key == "difference") {
    difference = parse_bool(value, key);
  } else if (key == "mode" || key == "modes") {
    modes.clear();
    for (const auto& m : split(value, ',')) modes.push_back(mode_from_string(m));
  } else if (key == "fixed_eta") {
    fixed_eta = parse_double(value, key);
  } else if (key == "tol") {
    tol = parse_double(value, key);
  } else if (key == "crossover_lo") {
    crossover_lo = parse_double(value, key);
  } else if (key == "crossover_hi") {
    crossover_hi = parse_double(value, key);
  } else if (key == "figure") {
    // a preset replaces the scan description but keeps run options
    ScanConfig preset = figure_preset(value);
    preset.output = output;
    preset.format = format;
    preset.threads = threads;
    preset.seed = seed;
    *this = preset;
  } else {
    config_error("unknown key '" + key + "'");
  }
}

namespace {

void validate_grid(const Grid& g, const char* name, double lo, double hi) {
  if (!std::isfinite(g.start) || !std::isfinite(g.stop) || !std::isfinite(g.step))
    config_error(std::string(name) + " grid must be finite");
  if (!(g.step > 0.0)) config_error(std::string(name) + " grid step must be positive");
  if (g.stop < g.start) config_error(std::string(name) + " grid stop is below its start");
  if (g.start < lo || g.stop > hi)
    config_error(std::string(name) + " grid must lie within [" + format_double(lo) + ", " +
                 format_double(hi) + "]");
}

}  // namespace

void ScanConfig::validate() const {
  if (command == Command::Figures && figure.empty())
    config_error("figures needs a preset name (fig1 ... fig9)");
  if (schemes.empty()) config_error("no scheme selected");
  validate_grid(alpha, "alpha", 0.0, 10.0);
  if (eta) validate_grid(*eta, "eta", 0.0, 1.0);
  validate_grid(eta_A, "eta_A", 0.0, 1.0);
  validate_grid(eta_B, "eta_B", 0.0, 1.0);
  if (dim && *dim < 2) config_error("dim must be >= 2");
  if (!(tail_tol > 0.0)) config_error("tail_tol must be positive");
  if (threads < 0) config_error("threads must be non-negative");
  if (samples < 1) config_error("samples must be >= 1");
  if (!(alpha_max >= 0.0) || !(beta_max >= 0.0)) config_error("alpha_max/beta_max must be >= 0");
  if (!(tol > 0.0)) config_error("tol must be positive");
  if (modes.empty()) config_error("no threshold mode selected");
  if (!(fixed_eta >= 0.0 && fixed_eta <= 1.0)) config_error("fixed_eta must lie in [0, 1]");
  if (!(crossover_lo >= 0.0 && crossover_hi <= 1.0 && crossover_lo < crossover_hi))
    config_error("crossover bracket must satisfy 0 <= lo < hi <= 1");
  const bool alpha_range = command == Command::BellMax || command == Command::Threshold ||
                           command == Command::Crossover;
  if (alpha_range && !(alpha.stop > alpha.start))
    config_error("alpha-optimizing commands need an alpha range with stop > start");
  if ((command == Command::Threshold || command == Command::Crossover) && alpha.stop > 3.0)
    config_error("threshold alpha range must lie within [0, 3]");
  if (difference && schemes.size() != 2)
    config_error("difference rows need both schemes");
}

std::vector<EfficiencyPair> ScanConfig::efficiency_pairs() const {
  std::vector<EfficiencyPair> out;
  if (eta) {
    for (double e : eta->values()) out.push_back({e, e});
    return out;
  }
  for (double a : eta_A.values())
    for (double b : eta_B.values()) out.push_back({a, b});
  return out;
}

ScanConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("config: ") + e.what());
  }
  if (tree.size() != 1 || (tree.front().second.empty() && !tree.front().second.data().empty()))
    config_error("config must contain exactly one [command] section and no top-level keys");

  const auto& [section, body] = tree.front();
  const Command command = command_from_string(section);
  ScanConfig config = ScanConfig::defaults_for(command);
  // the preset goes first so the other keys can override it
  if (auto fig = body.get_optional<std::string>("figure")) config.set("figure", *fig);
  for (const auto& [key, node] : body) {
    if (!node.empty()) config_error("nested keys are not allowed: '" + key + "'");
    if (key == "figure") continue;
    config.set(key, node.data());
  }
  return config;
}

// ---------------------------------------------------------------------------

ScanRow ScanRow::from_optimum(Scheme scheme, double alpha, const EfficiencyPair& effs,
                              const optimize::BellOptimum& opt, bool alpha_optimized) {
  ScanRow r;
  r.scheme = std::string(to_string(scheme));
  r.alpha = alpha;
  r.eta_A = effs.eta_A;
  r.eta_B = effs.eta_B;
  r.bell_max = opt.value;
  r.alpha_opt = alpha_optimized ? alpha : kNaN;
  r.theta1 = opt.settings.xi1.theta;
  r.phi1 = opt.settings.xi1.phi;
  r.theta2 = opt.settings.xi2.theta;
  r.phi2 = opt.settings.xi2.phi;
  r.beta1_mag = opt.settings.beta1.magnitude;
  r.beta1_phase = opt.settings.beta1.phase;
  r.beta2_mag = opt.settings.beta2.magnitude;
  r.beta2_phase = opt.settings.beta2.phase;
  r.regime = std::string(optimize::to_string(opt.regime));
  r.residual_norm = opt.residual_norm.value_or(kNaN);
  return r;
}

MeasurementSettings ScanRow::settings() const {
  return {{theta1, phi1}, {theta2, phi2}, {beta1_mag, beta1_phase}, {beta2_mag, beta2_phase},
          scheme_from_string(scheme)};
}

namespace {

const std::vector<std::string>& scan_columns() {
  static const std::vector<std::string> cols{
      "scheme", "alpha", "eta_A", "eta_B", "bell_max", "alpha_opt", "theta1", "phi1", "theta2",
      "phi2", "beta1_mag", "beta1_phase", "beta2_mag", "beta2_phase", "regime", "residual_norm"};
  return cols;
}

struct ScanTask {
  Scheme scheme;
  double alpha;
  EfficiencyPair effs;
  bool optimize_alpha;
};

std::vector<ScanRow> run_scan(const ScanConfig& config) {
  std::vector<ScanTask> tasks;
  const auto pairs = config.efficiency_pairs();
  const auto alphas = config.alpha.values();
  for (Scheme s : config.schemes) {
    switch (config.command) {
      case Command::BellMax:
        for (const auto& e : pairs) tasks.push_back({s, 0.0, e, true});
        break;
      case Command::EtaScan:
        for (double a : alphas)
          for (const auto& e : pairs) tasks.push_back({s, a, e, false});
        break;
      default:
        for (const auto& e : pairs)
          for (double a : alphas) tasks.push_back({s, a, e, false});
        break;
    }
  }

  const optimize::AlphaRange range{config.alpha.start, config.alpha.stop};
  std::vector<ScanRow> rows(tasks.size());
  parallel_for(tasks.size(), effective_threads(config), [&](std::size_t i) {
    const ScanTask& t = tasks[i];
    if (t.optimize_alpha) {
      const auto best = optimize::maximize_over_alpha(t.scheme, t.effs, range);
      rows[i] = ScanRow::from_optimum(t.scheme, best.alpha_opt, t.effs, best.optimum, true);
    } else {
      const auto opt = optimize::maximize_bell(t.scheme, t.alpha, t.effs);
      rows[i] = ScanRow::from_optimum(t.scheme, t.alpha, t.effs, opt, false);
    }
  });

  if (config.command == Command::BellMax && config.difference) {
    const std::size_t n = pairs.size();
    for (std::size_t k = 0; k < n; ++k) {
      const ScanRow& onoff = rows[k];
      const ScanRow& parity = rows[n + k];
      ScanRow d;
      d.scheme = "difference";
      d.alpha = kNaN;
      d.eta_A = onoff.eta_A;
      d.eta_B = onoff.eta_B;
      d.bell_max = parity.bell_max - onoff.bell_max;
      d.alpha_opt = kNaN;
      d.theta1 = d.phi1 = d.theta2 = d.phi2 = kNaN;
      d.beta1_mag = d.beta1_phase = d.beta2_mag = d.beta2_phase = kNaN;
      d.regime = "difference";
      d.residual_norm = kNaN;
      rows.push_back(d);
    }
  }
  return rows;
}

Table threshold_table(const ScanConfig& config) {
  struct Job {
    Scheme scheme;
    optimize::ThresholdMode mode;
  };
  std::vector<Job> jobs;
  for (Scheme s : config.schemes)
    for (auto m : config.modes) jobs.push_back({s, m});

  std::vector<optimize::ThresholdResult> results(jobs.size());
  parallel_for(jobs.size(), effective_threads(config), [&](std::size_t i) {
    optimize::ThresholdQuery q;
    q.scheme = jobs[i].scheme;
    q.mode = jobs[i].mode;
    q.fixed_value = config.fixed_eta;
    q.alpha_range = {config.alpha.start, config.alpha.stop};
    q.tol = config.tol;
    results[i] = optimize::find_threshold(q);
  });

  Table t{{"scheme", "mode", "fixed_eta", "threshold", "tol", "samples"}, {}};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const bool fixed = jobs[i].mode == optimize::ThresholdMode::FixedEtaA ||
                       jobs[i].mode == optimize::ThresholdMode::FixedEtaB;
    t.rows.push_back({std::string(to_string(jobs[i].scheme)),
                      std::string(optimize::to_string(jobs[i].mode)),
                      fixed ? config.fixed_eta : kNaN, results[i].eta, config.tol,
                      static_cast<std::int64_t>(results[i].samples.size())});
  }
  return t;
}

Table crossover_table(const ScanConfig& config) {
  const auto r = optimize::find_crossover(config.crossover_lo, config.crossover_hi, config.tol,
                                          {config.alpha.start, config.alpha.stop});
  Table t{{"eta_crossover", "lo", "hi", "tol", "samples"}, {}};
  t.rows.push_back({r.eta, config.crossover_lo, config.crossover_hi, config.tol,
                    static_cast<std::int64_t>(r.samples.size())});
  return t;
}

}  // namespace

Table scan_table(const std::vector<ScanRow>& rows) {
  Table t{scan_columns(), {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.scheme, r.alpha, r.eta_A, r.eta_B, r.bell_max, r.alpha_opt, r.theta1,
                      r.phi1, r.theta2, r.phi2, r.beta1_mag, r.beta1_phase, r.beta2_mag,
                      r.beta2_phase, r.regime, r.residual_norm});
  }
  return t;
}

// ---------------------------------------------------------------------------

double VerifyReport::max_deviation() const {
  double m = 0.0;
  for (const auto& s : schemes) m = std::max(m, s.max_deviation);
  return m;
}

namespace {

struct VerifySample {
  double alpha, theta, phi, beta_mag, beta_phase, eta_A, eta_B;
};

VerifySample draw_sample(const ScanConfig& config, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 gen(seq);
  // explicit 53-bit uniform: std distributions are not portable across libraries
  const auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
  };
  VerifySample s{};
  s.alpha = uniform(0.0, config.alpha_max);
  s.theta = uniform(0.0, pi);
  s.phi = uniform(0.0, two_pi);
  s.beta_mag = uniform(0.0, config.beta_max);
  s.beta_phase = uniform(0.0, two_pi);
  s.eta_A = config.perfect ? 1.0 : uniform(0.0, 1.0);
  s.eta_B = config.perfect ? 1.0 : uniform(0.0, 1.0);
  return s;
}

}  // namespace

VerifyReport verify(const ScanConfig& config) {
  config.validate();
  const int n = config.samples;
  const std::size_t ns = config.schemes.size();
  std::vector<double> deviation(static_cast<std::size_t>(n) * ns, 0.0);
  std::vector<double> ideal_deviation(static_cast<std::size_t>(n) * ns, 0.0);
  std::vector<int> dims(static_cast<std::size_t>(n), 0);
  std::vector<char> failed(static_cast<std::size_t>(n), 0);

  parallel_for(static_cast<std::size_t>(n), effective_threads(config), [&](std::size_t i) {
    const VerifySample s = draw_sample(config, static_cast<int>(i));
    const double amplitude = s.alpha + s.beta_mag;
    const fock::TruncationConfig trunc =
        config.dim ? fock::TruncationConfig{*config.dim, config.tail_tol}
                   : fock::TruncationConfig::automatic(amplitude, config.tail_tol);
    dims[i] = trunc.dim;
    if (!trunc.admits(amplitude)) {
      failed[i] = 1;
      return;
    }

    const QubitSetting xi{s.theta, s.phi};
    const DisplacementSetting beta{s.beta_mag, s.beta_phase};
    const EfficiencyPair effs{s.eta_A, s.eta_B};
    const fock::Oracle oracle(complex(s.alpha, 0.0), trunc);
    const auto displacement = fock::displacement_operator(beta.beta(), trunc);
    const auto qubit = fock::qubit_observable(xi);
    for (std::size_t k = 0; k < ns; ++k) {
      const Scheme scheme = config.schemes[k];
      const double brute = oracle.expectation(
          qubit, oracle.field_observable(scheme, displacement, effs.eta_B), effs.eta_A);
      const double exact = closed_form::expectation_effective(scheme, s.alpha, xi, beta, effs);
      deviation[i * ns + k] = std::abs(brute - exact);
      if (config.perfect)
        ideal_deviation[i * ns + k] =
            std::abs(exact - closed_form::expectation_ideal(scheme, s.alpha, xi, beta));
    }
  });

  VerifyReport report;
  report.samples = n;
  report.max_dim = *std::max_element(dims.begin(), dims.end());
  for (int i = 0; i < n; ++i)
    if (failed[static_cast<std::size_t>(i)]) report.truncation_failures.push_back(i);
  for (std::size_t k = 0; k < ns; ++k) {
    VerifyReport::PerScheme ps{config.schemes[k]};
    for (int i = 0; i < n; ++i) {
      const double d = deviation[static_cast<std::size_t>(i) * ns + k];
      if (ps.worst_sample < 0 || d > ps.max_deviation) {
        ps.max_deviation = d;
        ps.worst_sample = i;
      }
      ps.max_ideal_deviation =
          std::max(ps.max_ideal_deviation, ideal_deviation[static_cast<std::size_t>(i) * ns + k]);
    }
    report.schemes.push_back(ps);
  }
  return report;
}

RunResult run(const ScanConfig& config) {
  config.validate();
  RunResult result;
  result.command = config.command;
  switch (config.command) {
    case Command::Figures:
      return run(figure_preset(config.figure));
    case Command::Threshold:
      result.table = threshold_table(config);
      break;
    case Command::Crossover:
      result.table = crossover_table(config);
      break;
    case Command::Verify: {
      const VerifyReport report = verify(config);
      result.table.columns = {"scheme", "samples", "max_abs_deviation", "worst_sample",
                              "max_ideal_deviation", "max_dim", "truncation_failures"};
      for (const auto& s : report.schemes) {
        result.table.rows.push_back({std::string(to_string(s.scheme)),
                                     static_cast<std::int64_t>(report.samples), s.max_deviation,
                                     static_cast<std::int64_t>(s.worst_sample),
                                     config.perfect ? s.max_ideal_deviation : kNaN,
                                     static_cast<std::int64_t>(report.max_dim),
                                     static_cast<std::int64_t>(report.truncation_failures.size())});
      }
      if (!report.truncation_failures.empty()) {
        result.exit_code = 3;
        result.message = "truncation too small for samples";
        for (std::size_t k = 0; k < report.truncation_failures.size(); ++k) {
          if (k == 10) {
            result.message += " ...";
            break;
          }
          result.message += " " + std::to_string(report.truncation_failures[k]);
        }
      } else if (report.max_deviation() > kVerifyTolerance) {
        result.exit_code = 3;
        result.message = "closed form deviates from the oracle by " +
                         format_double(report.max_deviation());
      }
      break;
    }
    default:
      result.scan_rows = run_scan(config);
      result.table = scan_table(result.scan_rows);
      break;
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

namespace {

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

}  // namespace

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const Table& table, Command command) {
  nlohmann::ordered_json doc;
  doc["command"] = std::string(to_string(command));
  doc["columns"] = table.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& col = table.columns[i];
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v))
                obj[col] = v;
              else
                obj[col] = nullptr;
            } else {
              obj[col] = v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string render(const RunResult& result, OutputFormat format) {
  return format == OutputFormat::Csv ? render_csv(result.table)
                                     : render_json(result.table, result.command);
}

void write_output(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      raise(ErrorKind::Io, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    raise(ErrorKind::Io, "cannot move output into place at " + target.string());
  }
}

std::vector<ScanRow> parse_scan_csv(std::string_view text) {
  std::vector<ScanRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) return rows;
  const auto header = split(line, ',');
  if (header != scan_columns()) raise(ErrorKind::InvalidArgument, "not a scan CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) raise(ErrorKind::InvalidArgument, "ragged CSV row");
    const auto num = [&](std::size_t i) {
      if (f[i] == "nan") return kNaN;
      return parse_double(f[i], header[i]);
    };
    ScanRow r;
    r.scheme = f[0];
    r.alpha = num(1);
    r.eta_A = num(2);
    r.eta_B = num(3);
    r.bell_max = num(4);
    r.alpha_opt = num(5);
    r.theta1 = num(6);
    r.phi1 = num(7);
    r.theta2 = num(8);
    r.phi2 = num(9);
    r.beta1_mag = num(10);
    r.beta1_phase = num(11);
    r.beta2_mag = num(12);
    r.beta2_phase = num(13);
    r.regime = f[14];
    r.residual_norm = num(15);
    rows.push_back(r);
  }
  return rows;
}

int default_thread_count() {
  if (const char* env = std::getenv("HYBRID_BELL_THREADS")) {
    const std::string_view s(env);
    int n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace hybrid_bell::sweep
