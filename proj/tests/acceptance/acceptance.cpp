// Acceptance checks: one PASS/FAIL line per criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsllab/bath.hpp"
#include "qsllab/coherence.hpp"
#include "qsllab/dephasing.hpp"
#include "qsllab/heom.hpp"
#include "qsllab/presets.hpp"
#include "qsllab/qsl.hpp"
#include "qsllab/scenario.hpp"

namespace fs = std::filesystem;
using namespace qsllab;
using scenario::find_preset;
using scenario::Preset;
using scenario::presets;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error("no column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }
  bool has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }
  // (x, y) for rows whose other named coordinate equals `value`.
  std::vector<std::pair<double, double>> series(const std::string& key, double value,
                                                const std::string& x,
                                                const std::string& y) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : rows) {
      if (r[col(key)] == value) out.emplace_back(r[col(x)], r[col(y)]);
    }
    return out;
  }
};

Csv parse_csv(const std::string& text) {
  Csv c;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string f; std::getline(hs, f, ',');) c.columns.push_back(f);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) row.push_back(std::stod(f));
    c.rows.push_back(std::move(row));
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Csv run_preset(const std::string& name) {
  return parse_csv(
      scenario::run_scenario(scenario::parse_config(find_preset(name).text)).csv);
}

std::vector<double> distinct(const Csv& c, const std::string& name) {
  std::vector<double> v;
  for (const auto& r : c.rows) v.push_back(r[c.col(name)]);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// CLI runs land here; the first serial run of each preset is reused.
const fs::path kOut = "acceptance_out";

int run_cli(const std::string& preset, const fs::path& out, int workers) {
  fs::create_directories(out.parent_path());
  const std::string cmd = std::string("\"") + QSLLAB_CLI_PATH + "\" run --preset " +
                          preset + " --workers " + std::to_string(workers) +
                          " --out \"" + out.string() + "\" > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path serial_output(const std::string& preset, int& code) {
  const fs::path p = kOut / "w1a" / (preset + ".csv");
  code = fs::exists(p) ? 0 : run_cli(preset, p, 1);
  return p;
}

// Criterion 8 collects drifts from every HEOM run made here.
double g_trace_drift = 0.0;
double g_herm_drift = 0.0;

void note_drift(double trace, double herm) {
  g_trace_drift = std::max(g_trace_drift, trace);
  g_herm_drift = std::max(g_herm_drift, herm);
}

// Relative spacing 1% near the origin, capped at `cap`; every multiple of
// 0.1 up to t1 is a grid point.
std::vector<double> window_grid(double t1, double cap) {
  std::vector<double> g{0.0};
  for (int k = 1; k <= static_cast<int>(std::lround(10.0 * t1)); ++k) {
    const double end = 0.1 * k;
    double t = g.back();
    while (true) {
      t += std::min(0.01 * std::max(t, 0.02), cap);
      if (t > end - 1e-9) break;
      g.push_back(t);
    }
    g.push_back(end);
  }
  return g;
}

Outcome gamma_oracle() {
  Clock clock;
  double worst = 0.0;
  for (double lambda : {0.001, 0.2}) {
    for (double t : {0.01, 0.1, 0.3, 1.0, 3.0}) {
      const double g =
          bath::decoherence_factor(bath::OhmicLikeSpec{lambda, 50.0, 1.0}, 0.0, t).value;
      const double expect = 2.0 * lambda * std::log1p(2500.0 * t * t);
      worst = std::max(worst, std::abs(g - expect) / expect);
    }
  }
  const double s = clock.seconds();
  return {worst < 1e-8 && s < 1.0,
          "max rel err " + fmt(worst) + ", " + fmt(s) + " s"};
}

Outcome generic_vs_closed() {
  Clock clock;
  const dephasing::BlochVector plus{1.0, 0.0, 0.0};
  const auto grid = window_grid(4.0, 0.0015);
  double worst = 0.0;
  int points = 0;
  for (double lambda : {0.001, 0.2}) {
    for (double T : {0.5, 5.0}) {
      const bath::OhmicLikeSpec spec{lambda, 50.0, 1.0};
      const auto tr =
          qsl::to_state_trajectory(dephasing::build_trajectory(spec, T, 1.0, plus, grid));
      for (double t : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const double g = qsl::qsl_generic(tr, t, 1.0).tau_qsl;
        const double c = qsl::qsl_dephasing_closed(spec, T, 1.0, plus, t, 1.0).tau_qsl;
        worst = std::max(worst, std::abs(g - c) / c);
        ++points;
      }
    }
  }
  const double s = clock.seconds();
  return {worst < 1e-4 && s < 30.0 && points == 20,
          std::to_string(points) + " points, max rel err " + fmt(worst) + ", " +
              fmt(s) + " s"};
}

Outcome fig1a_trend() {
  const Csv a = run_preset("fig1a");
  bool ok = true;
  std::string detail;
  for (double T : {0.5, 1.0, 5.0}) {
    const auto s = a.series("temperature", T, "t", "tau_qsl_ratio");
    if (s.size() < 2 || s.front().first != 0.0 || s.back().first != 3.0) ok = false;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!(s[i].second < s[i - 1].second)) {
        ok = false;
        detail += "not decreasing at T=" + fmt(T) + " t=" + fmt(s[i].first) + "; ";
        break;
      }
    }
  }
  const Csv b = run_preset("fig1a-inset");
  const std::size_t ti = b.col("temperature"), ri = b.col("tau_qsl_ratio");
  const double t = scenario::parse_config(find_preset("fig1a-inset").text).physics.t;
  if (t != 0.3 || b.rows.size() < 5) ok = false;
  for (std::size_t i = 1; i < b.rows.size(); ++i) {
    if (!(b.rows[i][ti] > b.rows[i - 1][ti] && b.rows[i][ri] < b.rows[i - 1][ri])) {
      ok = false;
      detail += "not decreasing in T at T=" + fmt(b.rows[i][ti]) + "; ";
      break;
    }
  }
  return {ok, detail + std::to_string(b.rows.size()) + " temperatures at t=0.3"};
}

Outcome fig1b_dual() {
  const Csv c = run_preset("fig1b");
  const auto cold = c.series("temperature", 0.1, "t", "tau_qsl_ratio");
  const auto warm = c.series("temperature", 1.0, "t", "tau_qsl_ratio");
  double rise_t = -1.0, fall_t = -1.0;
  for (std::size_t i = 0; i < std::min(cold.size(), warm.size()); ++i) {
    const double t = cold[i].first;
    if (t <= 1.0 && rise_t < 0.0 && warm[i].second > cold[i].second) rise_t = t;
    if (t >= 3.0 && fall_t < 0.0 && warm[i].second < cold[i].second) fall_t = t;
  }
  return {rise_t >= 0.0 && fall_t >= 0.0,
          "increase at t=" + fmt(rise_t) + ", decrease at t=" + fmt(fall_t)};
}

Outcome fig4_ohmicity() {
  const Csv strong = run_preset("fig4c");
  double early = -1.0;
  for (double t : distinct(strong, "t")) {
    if (t <= 0.0 || t > 0.6) continue;
    const auto s = strong.series("t", t, "ohmicity", "tau_qsl_ratio");
    bool nondecreasing = s.size() >= 2 && s.front().first <= 0.3 && s.back().first >= 1.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].second < s[i - 1].second) nondecreasing = false;
    }
    if (nondecreasing) {
      early = t;
      break;
    }
  }
  const Csv weak = run_preset("fig4d");
  double flip = -1.0;
  for (double t : distinct(weak, "t")) {
    const auto s = weak.series("t", t, "ohmicity", "tau_qsl_ratio");
    bool up = false, down = false;
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double d = s[i].second - s[i - 1].second;
      up |= d > 0.0;
      down |= d < 0.0;
    }
    if (up && down) {
      flip = t;
      break;
    }
  }
  return {early > 0.0 && flip >= 0.0,
          "non-decreasing in s at t=" + fmt(early) + ", sign change at t=" + fmt(flip)};
}

Outcome fig5_plateau() {
  const auto cfg = scenario::parse_config(find_preset("fig5").text);
  const Csv c = run_preset("fig5");
  auto spread = [&](double dt, double& mean) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    int n = 0;
    for (const auto& r : c.rows) {
      const double t = r[c.col("t")];
      if (r[c.col("pulse_interval")] != dt || t < 1.0 || t > 3.0) continue;
      const double v = r[c.col("tau_qsl_ratio")];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++n;
    }
    mean = n > 0 ? sum / n : 0.0;
    return n > 1 ? hi - lo : 1e300;
  };
  double m_fast = 0.0, m_slow = 0.0;
  const double fast = spread(0.005, m_fast);
  const double slow = spread(0.05, m_slow);
  const bool params = cfg.physics.cutoff == 20.0 && cfg.physics.temperature == 1.0 &&
                      cfg.physics.coupling == 0.2;
  return {params && fast < 0.2 * m_fast && fast < slow,
          "spread " + fmt(fast) + " (mean " + fmt(m_fast) + ") vs " + fmt(slow)};
}

Outcome heom_oracle() {
  Clock clock;
  double worst = 0.0;
  std::string depths;
  for (double lambda : {0.005, 0.05}) {
    for (double T : {1.0, 5.0, 20.0}) {
      heom::HeomConfig c;
      c.drude = {lambda, 5.0};
      c.temperature = T;
      c.g0 = 0.1;
      c.t_max = 10.0;
      c.output_interval = 0.1;
      const auto rho0 = heom::product_plus_state();
      const heom::ConvergeResult r = heom::converge(c, rho0, 1e-6);
      note_drift(r.result.report.trace_drift, r.result.report.hermiticity_drift);
      const auto& tr = r.result.trajectory;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const DensityMatrix ex = heom::exact_commuting_solution(c, rho0, tr.grid[i]);
        worst = std::max(worst, (tr.states[i].matrix() - ex.matrix()).max_abs());
      }
      depths += " (L" + std::to_string(r.L) + ",K" + std::to_string(r.K) + ")";
    }
  }
  const double s = clock.seconds();
  return {worst < 1e-5 && s < 120.0,
          "max err " + fmt(worst) + ", " + fmt(s) + " s," + depths};
}

Outcome heom_conservation() {
  heom::HeomConfig c;
  c.drude = {0.05, 5.0};
  c.temperature = 5.0;
  c.K = 2;
  c.L = 3;
  c.t_max = 2.0;
  c.output_interval = 0.5;
  const heom::StepDoubling sd = heom::step_doubling(c, heom::product_plus_state().matrix());
  c.coupling_op = heom::sigma_x_b();
  c.output_interval = 0.1;
  const auto tr = heom::evolve(c, heom::product_plus_state());
  note_drift(tr.report.trace_drift, tr.report.hermiticity_drift);
  const bool ok = g_trace_drift < 1e-8 && g_herm_drift < 1e-10 &&
                  std::abs(sd.ratio - 16.0) <= 4.0;
  return {ok, "trace drift " + fmt(g_trace_drift) + ", hermiticity drift " +
                  fmt(g_herm_drift) + ", step ratio " + fmt(sd.ratio)};
}

Outcome drude_expansion() {
  const bath::DrudeSpec d{0.05, 5.0};
  const double T = 5.0;
  // Doubling from the cutoff rule, probed at the start of the window.
  const int K = bath::default_matsubara_cutoff(d, T, 1.0, 0.05);
  const auto e = bath::drude_expansion(d, T, K);
  double worst = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double t = 0.05 * i;
    const auto direct = bath::correlation_function(d, T, t);
    worst = std::max(worst, std::abs(e.correlation(t) - direct) / std::abs(direct));
  }
  return {worst < 1e-6, "K=" + std::to_string(K) + ", max rel err " + fmt(worst)};
}

Outcome coherence_measures() {
  const double j =
      coherence::jsd_coherence(DensityMatrix(ComplexMatrix(2, 2, {0.5, 0.5, 0.5, 0.5})));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.55, 0.55);
  const auto grid = dephasing::uniform_grid(0.0, 3.0, 61);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const dephasing::BlochVector v{u(rng), u(rng), u(rng)};
    const bath::OhmicLikeSpec spec{0.2 * (u(rng) + 0.55), 50.0, 1.0};
    const auto tr = dephasing::build_trajectory(spec, 1.0, 1.0, v, grid);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double expect = std::hypot(v.x, v.y) * std::exp(-tr.gamma[i]);
      worst = std::max(worst, std::abs(coherence::l1_coherence(tr.state(i)) - expect));
    }
  }
  return {std::abs(j - 0.5579) <= 1e-3 && worst < 1e-10,
          "jsd " + fmt(j) + ", l1 max err " + fmt(worst)};
}

Outcome heom_presets() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"fig7", "fig8a", "fig8b", "fig8c", "fig8d", "fig8-transverse"}) {
    int code = 0;
    const fs::path p = serial_output(name, code);
    if (code != 0) {
      ok = false;
      detail += std::string(name) + " exit " + std::to_string(code) + "; ";
      continue;
    }
    const Csv c = parse_csv(slurp(p));
    if (!c.has("l1_coherence") || !c.has("jsd_coherence") || c.rows.empty()) ok = false;
    const std::string kind = scenario::to_string(scenario::parse_config(find_preset(name).text).kind);
    if (kind == "heom-qsl" && !c.has("tau_qsl_ratio")) ok = false;
    const auto meta = nlohmann::json::parse(slurp(p.string() + ".meta.json"));
    for (const auto& g : meta["groups"]) {
      const auto& rep = g["report"];
      note_drift(rep["trace_drift"].get<double>(), rep["hermiticity_drift"].get<double>());
      const auto& deltas = rep["convergence_deltas"];
      if (deltas.empty() || deltas.back().get<double>() >= 1e-6) {
        ok = false;
        detail += std::string(name) + " not converged; ";
      }
    }
    if (std::string(name) == "fig8-transverse") {
      const auto cfg = scenario::parse_config(find_preset(name).text);
      if (cfg.physics.coupling_operator == "sigma_z_b") ok = false;
      double spread = 0.0;
      for (double t : distinct(c, "t")) {
        const auto s = c.series("t", t, "temperature", "l1_coherence");
        double lo = 1e300, hi = -1e300;
        for (const auto& [T, v] : s) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (s.size() > 1) spread = std::max(spread, hi - lo);
      }
      if (spread < 1e-3) ok = false;
      detail += "transverse l1 spread over T " + fmt(spread) + "; ";
    }
  }
  ok = ok && g_trace_drift < 1e-8 && g_herm_drift < 1e-10;
  return {ok, detail + "drifts " + fmt(g_trace_drift) + "/" + fmt(g_herm_drift)};
}

Outcome determinism() {
  bool ok = true;
  std::string detail;
  std::size_t n = 0;
  for (const Preset& p : presets()) {
    int code = 0;
    const fs::path a = serial_output(p.name, code);
    const fs::path b = kOut / "w1b" / (p.name + ".csv");
    const fs::path c = kOut / "w8" / (p.name + ".csv");
    const int cb = run_cli(p.name, b, 1);
    const int cc = run_cli(p.name, c, 8);
    const std::string x = slurp(a);
    if (code != 0 || cb != 0 || cc != 0 || x.empty() || x != slurp(b) || x != slurp(c)) {
      ok = false;
      detail += p.name + " differs; ";
    }
    ++n;
  }
  return {ok, detail + std::to_string(n) + " presets"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gamma-oracle", gamma_oracle},
      {"qsl-generic-vs-closed", generic_vs_closed},
      {"fig1a-trend", fig1a_trend},
      {"fig1b-dual-character", fig1b_dual},
      {"fig4-ohmicity-trends", fig4_ohmicity},
      {"fig5-bangbang-plateau", fig5_plateau},
      {"heom-commuting-oracle", heom_oracle},
      {"heom-conservation", heom_conservation},
      {"drude-expansion", drude_expansion},
      {"coherence-measures", coherence_measures},
      {"heom-presets", heom_presets},
      {"determinism", determinism},
  };
  fs::remove_all(kOut);
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
