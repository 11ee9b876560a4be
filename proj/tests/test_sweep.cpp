#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "hybrid_bell/closed_form.hpp"
#include "hybrid_bell/sweep.hpp"

using namespace hybrid_bell;
using namespace hybrid_bell::sweep;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hybrid_bell_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(GridTest, InclusiveValues) {
  const auto v = Grid::parse("0.1:0.5:0.1").values();
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v[2], 0.3);
  EXPECT_EQ(v.back(), 0.5);
  EXPECT_EQ(Grid::parse("1e-1:5e-1:1e-1").values(), v);
  EXPECT_EQ(Grid::parse("0.7").values(), std::vector<double>{0.7});
  EXPECT_EQ(Grid::parse("0.5:1.0:0.01").values().size(), 51u);
}

TEST(GridTest, Malformed) {
  EXPECT_EQ(kind_of([] { Grid::parse("0.1:0.5"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { Grid::parse("a:b:c"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { Grid::parse("0.1,0.2"); }), ErrorKind::Config);
}

TEST(Config, ParsesOneSection) {
  const auto c = parse_config(
      "[alpha-scan]\n"
      "scheme = parity\n"
      "alpha = 5e-2:2.5e-1:5e-2\n"
      "eta_A = 0.9\n"
      "eta_B = 8e-1:1:1e-1\n"
      "threads = 2\n"
      "format = json\n");
  EXPECT_EQ(c.command, Command::AlphaScan);
  EXPECT_EQ(c.schemes, std::vector<Scheme>{Scheme::Parity});
  EXPECT_EQ(c.alpha.values().size(), 5u);
  EXPECT_EQ(c.efficiency_pairs().size(), 3u);
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.format, OutputFormat::Json);
  c.validate();
}

TEST(Config, FigurePresetThenOverrides) {
  const auto c = parse_config("[figures]\nalpha = 0.1:0.2:0.1\nfigure = fig2\n");
  EXPECT_EQ(c.command, Command::AlphaScan);
  EXPECT_EQ(c.figure, "fig2");
  EXPECT_EQ(c.alpha.values().size(), 2u);
  EXPECT_EQ(c.eta_B.values().size(), 6u);
}

TEST(Config, Rejections) {
  EXPECT_EQ(kind_of([] { parse_config("[bell-max]\n[verify]\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("scheme = onoff\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("[nonsense]\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("[bell-max]\ncolour = red\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("[bell-max]\nscheme = laser\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("[figures]\nfigure = fig12\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_config("[bell-max\n"); }), ErrorKind::Config);
}

TEST(Config, ValidationInvariants) {
  auto bad = [](const char* key, const char* value) {
    auto c = ScanConfig::defaults_for(Command::AlphaScan);
    c.set(key, value);
    c.validate();
  };
  EXPECT_EQ(kind_of([&] { bad("alpha", "0.1:0.5:0"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("alpha", "0.5:0.1:0.1"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("eta_B", "0.5:1.2:0.1"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("eta", "-0.1"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("samples", "0"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("dim", "1"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { bad("tail_tol", "0"); }), ErrorKind::Config);
  auto c = ScanConfig::defaults_for(Command::BellMax);
  c.set("scheme", "onoff");
  c.set("difference", "true");
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Config);
}

TEST(Run, RowsReevaluateAndComeInGridOrder) {
  auto c = ScanConfig::defaults_for(Command::AlphaScan);
  c.set("alpha", "0.2:1.0:0.2");
  c.set("eta_A", "0.9:1:0.1");
  c.set("eta_B", "0.85");
  const auto r = run(c);
  ASSERT_EQ(r.scan_rows.size(), 2u * 2u * 5u);
  std::size_t i = 0;
  for (const char* scheme : {"onoff", "parity"})
    for (double ea : {0.9, 1.0})
      for (double a : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const ScanRow& row = r.scan_rows[i++];
        EXPECT_EQ(row.scheme, scheme);
        EXPECT_EQ(row.eta_A, ea);
        EXPECT_EQ(row.alpha, a);
        EXPECT_TRUE(std::isnan(row.alpha_opt));
        EXPECT_NEAR(closed_form::bell_value(row.alpha, row.settings(), {row.eta_A, row.eta_B}),
                    row.bell_max, 1e-9);
        EXPECT_LT(row.residual_norm, 1e-6);
      }
}

TEST(Run, ThreadCountDoesNotChangeOutput) {
  auto c = ScanConfig::defaults_for(Command::EtaScan);
  c.set("alpha", "0.3:0.5:0.1");
  c.set("eta", "0.8:1:0.05");
  c.threads = 1;
  const std::string one = render(run(c), OutputFormat::Csv);
  c.threads = 4;
  const std::string four = render(run(c), OutputFormat::Csv);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one.find('\r'), std::string::npos);
}

TEST(Run, BellMaxWithDifferenceRows) {
  auto c = ScanConfig::defaults_for(Command::BellMax);
  c.set("eta", "0.95:1:0.05");
  c.set("difference", "true");
  const auto r = run(c);
  ASSERT_EQ(r.scan_rows.size(), 6u);
  EXPECT_EQ(r.scan_rows[4].scheme, "difference");
  EXPECT_NEAR(r.scan_rows[4].bell_max, r.scan_rows[2].bell_max - r.scan_rows[0].bell_max, 1e-15);
  EXPECT_LT(r.scan_rows[4].bell_max, 0.0);  // eta = 0.95
  EXPECT_GT(r.scan_rows[5].bell_max, 0.0);  // eta = 1
  for (int k = 0; k < 4; ++k) {
    const auto& row = r.scan_rows[static_cast<std::size_t>(k)];
    EXPECT_EQ(row.alpha, row.alpha_opt);
    EXPECT_NEAR(closed_form::bell_value(row.alpha, row.settings(), {row.eta_A, row.eta_B}),
                row.bell_max, 1e-9);
  }
}

TEST(Output, CsvRoundTripIsExact) {
  auto c = ScanConfig::defaults_for(Command::AlphaScan);
  c.set("alpha", "0.13:0.53:0.2");
  c.set("eta", "0.77");
  const auto r = run(c);
  const auto back = parse_scan_csv(render_csv(r.table));
  ASSERT_EQ(back.size(), r.scan_rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& x = back[i];
    const auto& y = r.scan_rows[i];
    EXPECT_EQ(x.scheme, y.scheme);
    EXPECT_EQ(x.regime, y.regime);
    for (auto [u, v] : {std::pair{x.alpha, y.alpha}, {x.bell_max, y.bell_max},
                        {x.theta1, y.theta1}, {x.phi1, y.phi1}, {x.theta2, y.theta2},
                        {x.phi2, y.phi2}, {x.beta1_mag, y.beta1_mag},
                        {x.beta1_phase, y.beta1_phase}, {x.beta2_mag, y.beta2_mag},
                        {x.beta2_phase, y.beta2_phase}, {x.residual_norm, y.residual_norm}})
      EXPECT_EQ(u, v);
    EXPECT_TRUE(std::isnan(x.alpha_opt));
  }
}

TEST(Output, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(1e-20), "9.9999999999999995e-21");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Output, JsonUsesNullForMissingValues) {
  Table t{{"scheme", "x", "n"}, {{std::string("onoff"), std::nan(""), std::int64_t{3}}}};
  const auto doc = nlohmann::json::parse(render_json(t, Command::AlphaScan));
  EXPECT_EQ(doc["command"], "alpha-scan");
  EXPECT_TRUE(doc["rows"][0]["x"].is_null());
  EXPECT_EQ(doc["rows"][0]["n"], 3);
}

TEST(Output, AtomicWrite) {
  const auto path = scratch("rows.csv");
  write_output(path.string(), "a,b\n1,2\n");
  EXPECT_EQ(slurp(path), "a,b\n1,2\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".partial"));

  const auto missing = scratch("no/such/dir/rows.csv");
  EXPECT_EQ(kind_of([&] { write_output(missing.string(), "x"); }), ErrorKind::Io);
  EXPECT_FALSE(std::filesystem::exists(missing));
}

TEST(Verify, SeededRunIsTight) {
  auto c = ScanConfig::defaults_for(Command::Verify);
  const auto report = verify(c);
  EXPECT_EQ(report.samples, 200);
  EXPECT_LT(report.max_deviation(), 1e-8);
  EXPECT_TRUE(report.truncation_failures.empty());
  EXPECT_EQ(run(c).exit_code, 0);
}

TEST(Verify, VacuumTupleIsExact) {
  auto c = ScanConfig::defaults_for(Command::Verify);
  c.set("samples", "1");
  c.set("alpha_max", "0");
  c.set("beta_max", "0");
  EXPECT_LT(verify(c).max_deviation(), 1e-14);
}

TEST(Verify, PerfectDetectorsAlsoMatchIdealForms) {
  auto c = ScanConfig::defaults_for(Command::Verify);
  c.set("samples", "50");
  c.set("perfect", "true");
  const auto report = verify(c);
  for (const auto& s : report.schemes) EXPECT_LT(s.max_ideal_deviation, 1e-12);
  EXPECT_LT(report.max_deviation(), 1e-8);
}

TEST(Verify, SmallBasisIsReportedPerSample) {
  auto c = ScanConfig::defaults_for(Command::Verify);
  c.set("samples", "20");
  c.set("dim", "6");
  const auto report = verify(c);
  EXPECT_FALSE(report.truncation_failures.empty());
  const auto r = run(c);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.message.find("truncation"), std::string::npos);
}

TEST(Figures, PresetNames) {
  for (const auto& name : figure_names()) {
    const auto c = figure_preset(name);
    EXPECT_EQ(c.figure, name);
    c.validate();
  }
}

// Perfect detectors: on/off peaks near (0.664, 2.61), parity climbs toward 2 sqrt 2.
TEST(Figures, Fig1Landmarks) {
  const auto r = run(figure_preset("fig1"));
  double best = 0.0, best_alpha = 0.0, previous_parity = 0.0;
  for (const auto& row : r.scan_rows) {
    if (row.scheme == "onoff" && row.bell_max > best) {
      best = row.bell_max;
      best_alpha = row.alpha;
    }
    if (row.scheme == "parity") {
      EXPECT_GT(row.bell_max, previous_parity) << row.alpha;
      EXPECT_LT(row.bell_max, cirelson_bound);
      previous_parity = row.bell_max;
    }
  }
  EXPECT_NEAR(best, 2.61, 0.01);
  EXPECT_NEAR(best_alpha, 0.664, 0.05);  // grid step 0.05
  EXPECT_GT(previous_parity, 2.75);
}

// Contour along the smallest alpha: violation starts close to 67 %.
TEST(Figures, ContourViolationOnset) {
  auto c = ScanConfig::defaults_for(Command::Contour);
  c.set("alpha", "0.05");
  c.set("eta", "0.5:1.0:0.01");
  const auto r = run(c);
  for (const char* scheme : {"onoff", "parity"}) {
    double onset = 2.0;
    for (const auto& row : r.scan_rows)
      if (row.scheme == scheme && row.bell_max > 2.0) onset = std::min(onset, row.eta_A);
    EXPECT_NEAR(onset, 0.67, 0.02) << scheme;
  }
}

// A coarse fig8: the parity advantage lives only where eta_B is close to 1.
TEST(Figures, DifferenceStrip) {
  auto c = figure_preset("fig8");
  c.set("eta_A", "0.6:1.0:0.2");
  c.set("eta_B", "0.8:1.0:0.05");
  const auto r = run(c);
  bool any_positive = false;
  for (const auto& row : r.scan_rows) {
    if (row.scheme != "difference") continue;
    if (row.bell_max > 0.0) {
      any_positive = true;
      EXPECT_GE(row.eta_B, 0.95) << row.eta_A << "," << row.eta_B;
    }
  }
  EXPECT_TRUE(any_positive);
}
