#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hybrid_bell/optimizer.hpp"
#include "hybrid_bell/types.hpp"

namespace hybrid_bell::sweep {

enum class Command { BellMax, AlphaScan, EtaScan, Contour, Threshold, Crossover, Verify, Figures };
enum class OutputFormat { Csv, Json };

std::string_view to_string(Command c);
Command command_from_string(std::string_view s);
OutputFormat format_from_string(std::string_view s);

/// Inclusive arithmetic grid start, start + step, ..., <= stop.
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
  /// "start:stop:step" or a single number.
  static Grid parse(std::string_view text);
  static Grid single(double v) { return {v, v, 1.0}; }
};

/// Everything a run needs. Keys accepted by set() are the config-file keys:
/// scheme, alpha, eta, eta_A, eta_B, dim, tail_tol, out, format, threads,
/// seed, samples, alpha_max, beta_max, perfect, mode, fixed_eta, tol,
/// crossover_lo, crossover_hi, difference, figure.
struct ScanConfig {
  Command command = Command::BellMax;
  std::string figure;
  std::vector<Scheme> schemes{Scheme::OnOff, Scheme::Parity};
  Grid alpha{0.05, 3.0, 0.05};
  /// Symmetric efficiency grid (eta_A = eta_B); replaces eta_A x eta_B when set.
  std::optional<Grid> eta;
  Grid eta_A = Grid::single(1.0);
  Grid eta_B = Grid::single(1.0);
  std::optional<int> dim;
  double tail_tol = 1e-12;
  std::string output;
  OutputFormat format = OutputFormat::Csv;
  int threads = 0;
  std::uint64_t seed = 1;
  int samples = 200;
  double alpha_max = 1.5;
  double beta_max = 1.5;
  bool perfect = false;
  std::vector<optimize::ThresholdMode> modes{optimize::ThresholdMode::SymmetricEta};
  double fixed_eta = 1.0;
  double tol = 1e-4;
  double crossover_lo = 0.9;
  double crossover_hi = 1.0;
  bool difference = false;

  /// Defaults of a command (grids and schemes); figures expand to presets.
  static ScanConfig defaults_for(Command command);

  void set(std::string_view key, std::string_view value);
  void validate() const;
  /// Efficiency pairs in emission order.
  std::vector<EfficiencyPair> efficiency_pairs() const;
};

/// Flat key = value text with exactly one [command] section. Figures configs
/// name their preset with `figure = figN`; later keys override the preset.
ScanConfig parse_config(std::string_view text);

/// Named reproduction recipes fig1 ... fig9.
ScanConfig figure_preset(std::string_view name);
std::vector<std::string> figure_names();

struct ScanRow {
  std::string scheme;  // "onoff", "parity", or "difference"
  double alpha = 0.0;
  double eta_A = 1.0;
  double eta_B = 1.0;
  double bell_max = 0.0;
  double alpha_opt = 0.0;  // NaN unless alpha was optimized
  double theta1 = 0.0, phi1 = 0.0, theta2 = 0.0, phi2 = 0.0;
  double beta1_mag = 0.0, beta1_phase = 0.0, beta2_mag = 0.0, beta2_phase = 0.0;
  std::string regime;
  double residual_norm = 0.0;  // NaN when no stationarity system applies

  static ScanRow from_optimum(Scheme scheme, double alpha, const EfficiencyPair& effs,
                              const optimize::BellOptimum& opt, bool alpha_optimized);
  MeasurementSettings settings() const;
};

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct RunResult {
  Command command = Command::BellMax;
  Table table;
  std::vector<ScanRow> scan_rows;
  /// 0 on success, 3 when a check inside the run failed (verify deviation).
  int exit_code = 0;
  std::string message;
};

struct VerifyReport {
  struct PerScheme {
    Scheme scheme;
    double max_deviation = 0.0;
    int worst_sample = -1;
    double max_ideal_deviation = 0.0;  // only for perfect-detector runs
  };
  int samples = 0;
  int max_dim = 0;
  std::vector<PerScheme> schemes;
  /// Samples skipped because the truncation could not hold them.
  std::vector<int> truncation_failures;
  double max_deviation() const;
};

/// Seeded oracle-vs-closed-form comparison on random tuples.
VerifyReport verify(const ScanConfig& config);

/// Runs the configured command. Throws hybrid_bell::Error on config or
/// numerical failures.
RunResult run(const ScanConfig& config);

std::string render(const RunResult& result, OutputFormat format);
std::string render_csv(const Table& table);
std::string render_json(const Table& table, Command command);

/// Writes atomically: a temporary file renamed into place, removed on failure.
void write_output(const std::string& path, const std::string& text);

Table scan_table(const std::vector<ScanRow>& rows);
std::vector<ScanRow> parse_scan_csv(std::string_view text);

/// Locale-independent %.17g.
std::string format_double(double v);

/// HYBRID_BELL_THREADS, falling back to the hardware concurrency.
int default_thread_count();

}  // namespace hybrid_bell::sweep
