#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "qsllab/csv.hpp"
#include "qsllab/error.hpp"
#include "qsllab/presets.hpp"
#include "qsllab/qsl.hpp"
#include "qsllab/scenario.hpp"

using namespace qsllab;
using namespace qsllab::scenario;

namespace {

ParseError parse_error(const std::string& text,
                       const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError for:\n" << text;
  return ParseError("none", 0, "");
}

}  // namespace

TEST(Csv, NumberFormat) {
  EXPECT_EQ(csv::format_number(0.1), "0.1");
  EXPECT_EQ(csv::format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(csv::format_number(-0.0), "0");
  EXPECT_EQ(csv::format_number(2.5e-17), "2.5e-17");
  EXPECT_EQ(csv::format_number(123456789012345.0), "1.23456789012e+14");
  EXPECT_THROW(csv::format_number(std::nan("")), InvariantError);
}

TEST(Csv, TableLayout) {
  csv::Table t({"a", "b"});
  t.add_row({1.0, 0.5});
  t.add_row({2.0, 0.25});
  EXPECT_EQ(t.str(), "a,b\n1,0.5\n2,0.25\n");
  EXPECT_THROW(t.add_row({1.0}), DimensionError);
}

TEST(Parse, EmptyDephasingSectionGetsFigureDefaults) {
  const ScenarioConfig c = parse_config("[scenario]\nkind = dephasing-qsl\n");
  EXPECT_EQ(c.physics.frequency, 1.0);
  EXPECT_EQ(c.physics.cutoff, 50.0);
  EXPECT_EQ(c.physics.ohmicity, 1.0);
  EXPECT_EQ(c.physics.tau_d, 1.0);
  EXPECT_TRUE(c.sweep.empty());
}

TEST(Parse, HeomDefaults) {
  const ScenarioConfig c = parse_config("[scenario]\nkind = heom-qsl\n");
  EXPECT_EQ(c.physics.cutoff, 5.0);
  EXPECT_EQ(c.physics.tau_d, 10.0);
  EXPECT_EQ(c.physics.g0, 0.1);
  EXPECT_EQ(c.physics.temperature, 5.0);
}

TEST(Parse, CommentsAliasesAndSweeps) {
  const ScenarioConfig c = parse_config(
      "# leading comment\n"
      "[scenario]\n"
      "kind = dephasing-qsl   # trailing\n"
      "[physics]\n"
      "lambda = 0.001\n"
      "s = 0.6\n"
      "[sweep]\n"
      "temperature = [0.1, 1, 5]\n"
      "t = 0 : 3 : 31\n");
  EXPECT_EQ(c.physics.coupling, 0.001);
  EXPECT_EQ(c.physics.ohmicity, 0.6);
  ASSERT_EQ(c.sweep.size(), 2u);
  EXPECT_EQ(c.sweep[0].name, "temperature");
  EXPECT_EQ(c.sweep[0].values(), (std::vector<double>{0.1, 1.0, 5.0}));
  const auto t = c.sweep[1].values();
  ASSERT_EQ(t.size(), 31u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 3.0);
  EXPECT_DOUBLE_EQ(t[1], 0.1);
}

TEST(Parse, ErrorsNameLineAndKey) {
  ParseError e = parse_error("[scenario]\nkind = dephasing-qsl\n[physics]\ncutoff = -3\n");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.key(), "cutoff");

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[physics]\ncoupling = abc\n");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.key(), "coupling");

  e = parse_error("[scenario]\nkind = nope\n");
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.key(), "kind");

  e = parse_error("[physics]\ncutoff = 3\n");
  EXPECT_EQ(e.key(), "kind");

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[physics]\nwidth = 3\n");
  EXPECT_EQ(e.key(), "width");

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[physics]\nCutoff = 3\n");
  EXPECT_EQ(e.line(), 4u);

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[sweep]\nt = 3 : 0 : 4\n");
  EXPECT_EQ(e.key(), "t");

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[physics]\ncutoff = 3\ncutoff = 4\n");
  EXPECT_EQ(e.line(), 5u);

  e = parse_error("[scenario]\nkind = heom-qsl\n[physics]\nohmicity = 0.5\n");
  EXPECT_EQ(e.key(), "ohmicity");

  e = parse_error("[scenario]\nkind = bangbang-qsl\n[physics]\npulse_interval = 0\n");
  EXPECT_EQ(e.key(), "pulse_interval");

  e = parse_error("[scenario]\nkind = dephasing-qsl\n[sweep]\nt = [0,1]\ntemperature = [1]\ncoupling = [1]\n");
  EXPECT_NE(std::string(e.what()).find("two"), std::string::npos);
}

TEST(Parse, Overrides) {
  const std::string base = "[scenario]\nkind = dephasing-qsl\n[physics]\ncoupling = 0.2\n"
                           "[sweep]\nt = 0 : 1 : 3\n";
  const ScenarioConfig c =
      parse_config(base, {"physics.coupling=0.001", "temperature=2", "sweep.t="});
  EXPECT_EQ(c.physics.coupling, 0.001);
  EXPECT_EQ(c.physics.temperature, 2.0);
  EXPECT_TRUE(c.sweep.empty());
  const ParseError e = parse_error(base, {"physics.cutoff=-1"});
  EXPECT_EQ(e.line(), 0u);
  EXPECT_EQ(e.key(), "cutoff");
  EXPECT_NE(std::string(e.what()).find("override"), std::string::npos);
  EXPECT_THROW(parse_config(base, {"bogus=1"}), ParseError);
  EXPECT_THROW(parse_config(base, {"noequals"}), ParseError);
}

TEST(Parse, RoundTripPresets) {
  for (const Preset& p : presets()) {
    const ScenarioConfig c = parse_config(p.text);
    const ScenarioConfig again = parse_config(serialize_config(c));
    EXPECT_EQ(c, again) << p.name;
    EXPECT_EQ(serialize_config(again), serialize_config(c)) << p.name;
  }
}

TEST(Parse, RoundTripRandomConfigs) {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Kind kinds[] = {Kind::kDephasingQsl, Kind::kDephasingRatio,
                        Kind::kBangBangQsl, Kind::kHeomQsl, Kind::kHeomCoherence};
  for (int trial = 0; trial < 200; ++trial) {
    ScenarioConfig c = defaults_for(kinds[trial % 5]);
    c.physics.coupling = u(rng) * 0.3;
    c.physics.cutoff = 0.1 + 100.0 * u(rng);
    c.physics.temperature = 0.01 + 10.0 * u(rng);
    c.physics.tau_d = 0.1 + u(rng);
    c.physics.t = 3.0 * u(rng);
    c.physics.g0 = u(rng) - 0.5;
    c.physics.init_x = 0.5 * u(rng);
    c.physics.init_y = 0.5 * u(rng);
    if (c.kind == Kind::kBangBangQsl) c.physics.pulse_interval = 0.001 + u(rng);
    c.numerics.grid_resolution = 0.001 + 0.4 * u(rng);
    c.numerics.heom_tol = 1e-8 + u(rng) * 1e-4;
    c.numerics.heom_depth = static_cast<int>(10 * u(rng));
    c.numerics.heom_terminator = u(rng) < 0.5;
    SweepAxis a;
    a.name = "t";
    a.min = u(rng);
    a.max = a.min + 1.0 + u(rng);
    a.count = 2 + static_cast<std::size_t>(20 * u(rng));
    c.sweep.push_back(a);
    if (u(rng) < 0.5) {
      SweepAxis b;
      b.name = "coupling";
      b.is_range = false;
      b.list = {u(rng) * 0.1, u(rng) * 0.2};
      c.sweep.insert(c.sweep.begin(), b);
    }
    EXPECT_EQ(parse_config(serialize_config(c)), c) << serialize_config(c);
  }
}

TEST(Presets, AllParseAndCoverFigures) {
  for (const char* name :
       {"fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c",
        "fig3d", "fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig6a", "fig6b",
        "fig7", "fig8a", "fig8b", "fig8c", "fig8d", "fig8-transverse"}) {
    EXPECT_NO_THROW(parse_config(find_preset(name).text)) << name;
  }
  EXPECT_THROW(find_preset("fig99"), ParameterError);
  const ScenarioConfig tr = parse_config(find_preset("fig8-transverse").text);
  EXPECT_EQ(tr.physics.coupling_operator, "sigma_x_b");
}

TEST(Run, CsvHeaderAndRows) {
  const ScenarioConfig c = parse_config(
      "[scenario]\nkind = dephasing-qsl\n[physics]\ncoupling = 0.2\ntemperature = 1\n"
      "[sweep]\ncoupling = [0.001, 0.2]\nt = 0 : 1 : 3\n");
  const ScenarioResult r = run_scenario(c);
  EXPECT_EQ(r.csv.find('\r'), std::string::npos);
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')),
            "coupling,t,tau_qsl_ratio,relative_purity,l1_coherence,gamma");
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 7);
  const auto meta = nlohmann::json::parse(r.metadata);
  EXPECT_EQ(meta["rows"], 6);
  EXPECT_EQ(meta["groups"].size(), 2u);
  EXPECT_EQ(parse_config(meta["config"].get<std::string>()), c);
}

TEST(Run, ClosedFormMatchesDirectEvaluation) {
  const ScenarioConfig c = parse_config(
      "[scenario]\nkind = dephasing-qsl\n[physics]\ncoupling = 0.2\ntemperature = 1\n"
      "[sweep]\nt = [0, 0.3, 2]\n");
  const ScenarioResult r = run_scenario(c);
  std::istringstream in(r.csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    const double t = std::stod(line.substr(0, line.find(',')));
    const std::string rest = line.substr(line.find(',') + 1);
    const double ratio = std::stod(rest.substr(0, rest.find(',')));
    const double direct =
        qsl::qsl_dephasing_closed({0.2, 50.0, 1.0}, 1.0, 1.0, {1.0, 0.0, 0.0}, t, 1.0).ratio;
    EXPECT_NEAR(ratio, direct, 1e-6 * direct) << t;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Run, ParallelIsByteIdentical) {
  for (const char* name : {"fig3a", "fig5", "fig4d"}) {
    const ScenarioConfig c = parse_config(find_preset(name).text);
    const ScenarioResult a = run_scenario(c);
    const ScenarioResult b = sweep_parallel(c, 8);
    EXPECT_EQ(a.csv, b.csv) << name;
    EXPECT_EQ(a.metadata, b.metadata) << name;
  }
}

TEST(Run, ErrorsCarrySweepCoordinates) {
  const ScenarioConfig c = parse_config(
      "[scenario]\nkind = bangbang-qsl\n[physics]\npulse_interval = 0.05\n"
      "[sweep]\ntemperature = [1, 2]\nt = [0, 0.13]\n");
  try {
    run_scenario(c);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("temperature = 1"), std::string::npos);
  }
}

TEST(Run, HeomTimesMustLieOnOutputGrid) {
  const ScenarioConfig c = parse_config(
      "[scenario]\nkind = heom-coherence\n[physics]\ncoupling = 0.005\ntau_d = 1\n"
      "[numerics]\nheom_depth = 2\n[sweep]\nt = [0, 0.123]\n");
  EXPECT_THROW(run_scenario(c), RangeError);
}

TEST(Run, HeomFixedDepth) {
  const ScenarioConfig c = parse_config(
      "[scenario]\nkind = heom-qsl\n[physics]\ncoupling = 0.005\ntau_d = 1\n"
      "[numerics]\nheom_depth = 3\nheom_cutoff = 2\n[sweep]\nt = 0 : 1 : 3\n");
  const ScenarioResult r = run_scenario(c);
  const auto meta = nlohmann::json::parse(r.metadata);
  EXPECT_EQ(meta["groups"][0]["report"]["heom_depth"], 3);
  EXPECT_EQ(meta["groups"][0]["report"]["heom_cutoff"], 2);
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')),
            "t,tau_qsl_ratio,relative_purity,l1_coherence,jsd_coherence");
}
