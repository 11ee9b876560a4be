// hybrid-bell: scans, thresholds and figure presets from the command line.
//
//   hybrid-bell <command> [figure] [--config FILE] [--out FILE]
//               [--format csv|json] [--threads N] [--seed N] [flags...]
//
// Exit status: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hybrid_bell/hybrid_bell.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(hb_status s) {
  return s == HB_CONFIG_ERROR || s == HB_INVALID_ARGUMENT ? kExitConfig : kExitNumerical;
}

int fail(hb_status s, const char* context) {
  std::fprintf(stderr, "hybrid-bell: %s: %s\n", context, hb_last_error());
  return exit_code_for(s);
}

struct JobHandle {
  hb_job* job = nullptr;
  ~JobHandle() { hb_job_destroy(job); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell-CHSH optimization for qubit/coherent-state hybrid entanglement"};
  app.set_version_flag("--version", std::string(hb_version()));

  std::string command;
  std::string figure;
  std::string config_file;
  app.add_option("command", command,
                 "bell-max | alpha-scan | eta-scan | contour | threshold | crossover | verify | "
                 "figures")
      ->required();
  app.add_option("figure", figure, "figure preset for `figures` (fig1 ... fig9)");
  app.add_option("--config", config_file, "config file with one [command] section")
      ->check(CLI::ExistingFile);

  // flag name -> config key; only flags given on the command line are applied
  const std::vector<std::pair<std::string, std::string>> valued = {
      {"--out", "out"},
      {"--format", "format"},
      {"--threads", "threads"},
      {"--seed", "seed"},
      {"--scheme", "scheme"},
      {"--alpha-grid", "alpha"},
      {"--eta-grid", "eta"},
      {"--eta-a-grid", "eta_A"},
      {"--eta-b-grid", "eta_B"},
      {"--dim", "dim"},
      {"--tail-tol", "tail_tol"},
      {"--samples", "samples"},
      {"--alpha-max", "alpha_max"},
      {"--beta-max", "beta_max"},
      {"--mode", "mode"},
      {"--fixed-eta", "fixed_eta"},
      {"--tol", "tol"},
      {"--crossover-lo", "crossover_lo"},
      {"--crossover-hi", "crossover_hi"},
  };
  std::vector<std::string> values(valued.size());
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < valued.size(); ++i)
    options.push_back(app.add_option(valued[i].first, values[i], "config key '" + valued[i].second + "'"));

  bool perfect = false;
  bool difference = false;
  auto* perfect_flag = app.add_flag("--perfect", perfect, "verify with eta_A = eta_B = 1");
  auto* difference_flag =
      app.add_flag("--difference", difference, "bell-max: add parity minus on/off rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  JobHandle handle;
  hb_status st = HB_OK;
  if (!config_file.empty()) {
    st = hb_job_from_config_file(config_file.c_str(), &handle.job);
    if (st != HB_OK) return fail(st, "config");
    const std::string file_command = hb_job_command(handle.job);
    const bool preset = command == "figures";
    if (!preset && file_command != command) {
      std::fprintf(stderr, "hybrid-bell: config section [%s] does not match command '%s'\n",
                   file_command.c_str(), command.c_str());
      return kExitConfig;
    }
  } else {
    st = hb_job_from_command(command.c_str(), &handle.job);
    if (st != HB_OK) return fail(st, "command");
  }

  if (!figure.empty()) {
    if (command != "figures") {
      std::fprintf(stderr, "hybrid-bell: unexpected argument '%s'\n", figure.c_str());
      return kExitConfig;
    }
    st = hb_job_set(handle.job, "figure", figure.c_str());
    if (st != HB_OK) return fail(st, "figure");
  }

  for (std::size_t i = 0; i < valued.size(); ++i) {
    if (options[i]->count() == 0) continue;
    st = hb_job_set(handle.job, valued[i].second.c_str(), values[i].c_str());
    if (st != HB_OK) return fail(st, valued[i].first.c_str());
  }
  if (perfect_flag->count() > 0 && (st = hb_job_set(handle.job, "perfect", "true")) != HB_OK)
    return fail(st, "--perfect");
  if (difference_flag->count() > 0 &&
      (st = hb_job_set(handle.job, "difference", "true")) != HB_OK)
    return fail(st, "--difference");

  st = hb_job_run(handle.job);
  if (st != HB_OK) return fail(st, "run");

  const std::string out_path = hb_job_output_path(handle.job);
  if (!out_path.empty()) {
    st = hb_job_write(handle.job, out_path.c_str(), nullptr);
    if (st != HB_OK) return fail(st, "output");
  } else {
    char* text = nullptr;
    st = hb_job_render(handle.job, nullptr, &text);
    if (st != HB_OK) return fail(st, "render");
    std::fputs(text, stdout);
    hb_free_string(text);
    if (std::fflush(stdout) != 0) return kExitNumerical;
  }

  int code = 0;
  hb_job_exit_code(handle.job, &code);
  if (code != 0) std::fprintf(stderr, "hybrid-bell: %s\n", hb_job_message(handle.job));
  return code;
}
