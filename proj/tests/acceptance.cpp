// Acceptance run: one PASS/FAIL line per criterion. Tolerances and runtime
// budgets are fixed below. Usage: acceptance <path to hybrid-bell>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hybrid_bell/closed_form.hpp"
#include "hybrid_bell/fock_oracle.hpp"
#include "hybrid_bell/optimizer.hpp"
#include "hybrid_bell/sweep.hpp"
#include "series_oracle.hpp"

using namespace hybrid_bell;
using namespace hybrid_bell::optimize;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Residual norms of every optimum reported by criteria 1-7, checked in 9.
std::vector<double> g_residuals;

void note(const BellOptimum& o) {
  if (o.residual_norm) g_residuals.push_back(*o.residual_norm);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

Outcome criterion1() {
  const auto r = maximize_over_alpha(Scheme::OnOff, {1.0, 1.0});
  note(r.optimum);
  return {near(r.optimum.value, 2.61, 0.01) && near(r.alpha_opt, 0.664, 0.005),
          "B_max=" + fmt("%.6f", r.optimum.value) + " alpha_opt=" + fmt("%.5f", r.alpha_opt)};
}

Outcome criterion2() {
  double previous = -1.0, worst_step = 1.0, top = 0.0;
  bool increasing = true, bounded = true;
  for (int i = 0; i <= 90; ++i) {
    const double a = 0.5 + 0.05 * i;
    const auto o = maximize_bell(Scheme::Parity, a, {1.0, 1.0});
    note(o);
    if (i > 0) {
      worst_step = std::min(worst_step, o.value - previous);
      if (!(o.value > previous)) increasing = false;
    }
    if (o.value > cirelson_bound + 1e-12) bounded = false;
    previous = o.value;
    top = std::max(top, o.value);
  }
  return {increasing && bounded && previous >= 2.81,
          "B(5)=" + fmt("%.6f", previous) + " min step=" + fmt("%.3g", worst_step) +
              " max=" + fmt("%.6f", top)};
}

Outcome threshold_pair(ThresholdMode mode, double target) {
  Outcome out;
  for (Scheme s : {Scheme::OnOff, Scheme::Parity}) {
    ThresholdQuery q;
    q.scheme = s;
    q.mode = mode;
    const auto r = find_threshold(q);
    out.pass = out.pass && near(r.eta, target, 0.01);
    out.detail += std::string(to_string(s)) + "=" + fmt("%.5f", r.eta) + " ";
  }
  return out;
}

Outcome criterion5() {
  struct Spot {
    Scheme scheme;
    double eta, value, value_tol, alpha;
  };
  const Spot spots[] = {{Scheme::OnOff, 0.8, 2.091, 0.005, 0.458},
                        {Scheme::Parity, 0.8, 2.035, 0.005, 0.293},
                        {Scheme::OnOff, 0.7, 2.0022, 0.002, 0.155},
                        {Scheme::Parity, 0.7, 2.0006, 0.001, 0.078}};
  Outcome out;
  for (const auto& s : spots) {
    const auto r = maximize_over_alpha(s.scheme, {s.eta, s.eta});
    note(r.optimum);
    out.pass = out.pass && near(r.optimum.value, s.value, s.value_tol) && near(r.alpha_opt, s.alpha, 0.01);
    out.detail += std::string(to_string(s.scheme)) + "@" + fmt("%.1f", s.eta) + ":" +
                  fmt("%.5f", r.optimum.value) + "/" + fmt("%.4f", r.alpha_opt) + " ";
  }
  return out;
}

Outcome criterion6() {
  const auto r = find_crossover(0.9, 1.0, 1e-4);
  return {near(r.eta, 0.9868, 0.002), "eta=" + fmt("%.5f", r.eta)};
}

Outcome criterion7() {
  double worst = 0.0;
  for (int i = 0; i <= 29; ++i) {
    const double eta = 0.68 + 0.01 * i;
    const auto r = maximize_over_alpha(Scheme::Parity, {eta, eta});
    note(r.optimum);
    worst = std::max(worst, r.alpha_opt);
  }
  return {worst < 1.0, "max alpha_opt=" + fmt("%.5f", worst)};
}

Outcome criterion8() {
  auto c = sweep::ScanConfig::defaults_for(sweep::Command::Verify);
  c.samples = 500;
  c.seed = 1;
  c.dim = 64;
  c.alpha_max = 1.5;
  c.beta_max = 1.5;
  const auto report = sweep::verify(c);
  return {report.truncation_failures.empty() && report.max_deviation() < 1e-7,
          "max deviation=" + fmt("%.3g", report.max_deviation())};
}

Outcome criterion9() {
  Outcome out;
  series::Draw draw(2024);

  // Cirel'son fuzz
  double worst_b = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const MeasurementSettings s{{draw(0, pi), draw(0, two_pi)},
                                {draw(0, pi), draw(0, two_pi)},
                                {draw(0, 3), draw(0, two_pi)},
                                {draw(0, 3), draw(0, two_pi)},
                                i % 2 ? Scheme::Parity : Scheme::OnOff};
    worst_b = std::max(worst_b, std::abs(closed_form::bell_value(draw(0, 3), s, {draw(0, 1), draw(0, 1)})));
  }
  const bool cirelson = worst_b <= cirelson_bound + 1e-9;

  // effective-POVM diagonals by direct summation
  double worst_povm = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double eta = 0.1 * k;
    const auto onoff = fock::effective_measurement(Scheme::OnOff, eta, {64, 1e-12});
    const auto parity = fock::effective_measurement(Scheme::Parity, eta, {64, 1e-12});
    for (int m = 0; m < 64; ++m) {
      worst_povm = std::max(worst_povm, std::abs(onoff.entries(m, m).real() -
                                                 (2.0 * std::pow(1.0 - eta, m) - 1.0)));
      worst_povm = std::max(worst_povm,
                            std::abs(parity.entries(m, m).real() - std::pow(1.0 - 2.0 * eta, m)));
    }
  }
  const bool povm = worst_povm < 1e-10;

  // eta_A affinity and phase covariance on the oracle
  double worst_affine = 0.0, worst_phase = 0.0;
  for (int i = 0; i < 30; ++i) {
    const double a = draw(0, 1.5);
    const QubitSetting xi{draw(0, pi), draw(0, two_pi)};
    const DisplacementSetting beta{draw(0, 1.5), draw(0, two_pi)};
    const double eta_A = draw(0, 1), eta_B = draw(0, 1);
    const Scheme s = i % 2 ? Scheme::Parity : Scheme::OnOff;
    const auto t = fock::TruncationConfig::automatic(3.0);
    const double e1 = fock::joint_expectation_oracle(a, xi, beta, s, {1, eta_B}, t);
    const double e0 = fock::joint_expectation_oracle(a, xi, beta, s, {0, eta_B}, t);
    const double e = fock::joint_expectation_oracle(a, xi, beta, s, {eta_A, eta_B}, t);
    worst_affine = std::max(worst_affine, std::abs(e - (eta_A * e1 + (1 - eta_A) * e0)));

    const double chi = draw(0, two_pi);
    MeasurementSettings m{xi, {draw(0, pi), draw(0, two_pi)}, beta, {draw(0, 1.5), draw(0, two_pi)}, s};
    const double base = fock::bell_oracle(a, m, {eta_A, eta_B}, t);
    m.beta1.phase += chi;
    m.beta2.phase += chi;
    worst_phase = std::max(worst_phase,
                           std::abs(fock::bell_oracle(std::polar(a, chi), m, {eta_A, eta_B}, t) - base));
  }
  const bool affine = worst_affine < 1e-10 && worst_phase < 1e-10;

  double worst_residual = 0.0;
  for (double r : g_residuals) worst_residual = std::max(worst_residual, r);
  const bool stationary = !g_residuals.empty() && worst_residual < 1e-6;

  out.pass = cirelson && povm && affine && stationary;
  out.detail = "max|B|=" + fmt("%.6f", worst_b) + " povm=" + fmt("%.2g", worst_povm) +
               " affine=" + fmt("%.2g", worst_affine) + " phase=" + fmt("%.2g", worst_phase) +
               " residual=" + fmt("%.2g", worst_residual) + " over " +
               std::to_string(g_residuals.size()) + " optima";
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion10(const std::string& cli) {
  const auto dir = std::filesystem::temp_directory_path() / "hybrid_bell_acceptance";
  std::filesystem::create_directories(dir);
  const auto a = dir / "fig3_a.csv", b = dir / "fig3_b.csv";
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  const int ra = std::system(("\"" + cli + "\" figures fig3 --out \"" + a.string() + "\"").c_str());
  const int rb = std::system(("\"" + cli + "\" figures fig3 --out \"" + b.string() + "\"").c_str());
  const std::string x = slurp(a), y = slurp(b);
  return {ra == 0 && rb == 0 && !x.empty() && x == y,
          std::to_string(x.size()) + " bytes, " + (x == y ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <hybrid-bell executable>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "on/off perfect-detector optimum", 5, criterion1},
      {2, "parity approaches the Cirel'son bound", 5, criterion2},
      {3, "eta_B-only threshold", 30, [] { return threshold_pair(ThresholdMode::EtaBOnly, 0.5); }},
      {4, "symmetric-eta threshold", 120, [] { return threshold_pair(ThresholdMode::SymmetricEta, 0.67); }},
      {5, "spot optima at eta = 0.8 and 0.7", 60, criterion5},
      {6, "parity/on-off crossover", 120, criterion6},
      {7, "parity alpha_opt < 1 on [0.68, 0.97]", 300, criterion7},
      {8, "oracle equivalence, 500 tuples", 60, criterion8},
      {9, "property suite", 300, criterion9},
      {10, "fig3 determinism", 300, [&] { return criterion10(cli); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s -- %s [%.1fs of %.0fs]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds, c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
