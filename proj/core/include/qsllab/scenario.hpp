#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qsllab::scenario {

enum class Kind {
  kDephasingQsl,
  kDephasingRatio,
  kBangBangQsl,
  kHeomQsl,
  kHeomCoherence,
};

const char* to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);

// Swept parameter: either `min : max : count` or an explicit list.
struct SweepAxis {
  std::string name;  // t, temperature, coupling, ohmicity, pulse_interval
  bool is_range = true;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::vector<double> list;

  std::vector<double> values() const;
  bool operator==(const SweepAxis&) const = default;
};

struct Physics {
  double coupling = 0.0;   // Lambda
  double cutoff = 0.0;     // omega_c
  double ohmicity = 1.0;   // s
  double temperature = 0.0;
  double frequency = 1.0;  // Omega
  double tau_d = 1.0;
  double t = 0.0;          // initial time when t is not swept
  double g0 = 0.1;
  double pulse_interval = 0.0;
  double init_x = 1.0;
  double init_y = 0.0;
  double init_z = 0.0;
  std::string coupling_operator = "sigma_z_b";  // or sigma_x_b

  bool operator==(const Physics&) const = default;
};

struct Numerics {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  std::size_t max_intervals = 400000;
  double grid_resolution = 0.03;
  double simpson_tol = 1e-8;
  double heom_tol = 1e-6;
  int heom_depth = 0;    // 0: converge in L
  int heom_cutoff = -1;  // -1: Matsubara cutoff rule
  double heom_dt = 0.0;  // 0: largest stable step
  double heom_output_interval = 0.05;
  std::size_t heom_max_ados = 250000;
  bool heom_terminator = true;

  bool operator==(const Numerics&) const = default;
};

struct ScenarioConfig {
  Kind kind = Kind::kDephasingQsl;
  std::string output;
  Physics physics;
  std::vector<SweepAxis> sweep;  // at most two, outer axis first
  Numerics numerics;

  bool operator==(const ScenarioConfig&) const = default;
};

// Defaults for a scenario kind, taken from the matching figure recipe.
ScenarioConfig defaults_for(Kind kind);

// INI text with [scenario], [physics], [sweep] and [numerics] sections.
// Overrides are `section.key=value` (or a bare key when unambiguous) and
// are applied after the file. Throws ParseError naming line and key.
ScenarioConfig parse_config(std::string_view text,
                            const std::vector<std::string>& overrides = {});

// Canonical text that parses back to the same config.
std::string serialize_config(const ScenarioConfig& config);

void validate(const ScenarioConfig& config);

struct ScenarioResult {
  std::string csv;
  std::string metadata;  // JSON: resolved config and numerics report
};

ScenarioResult run_scenario(const ScenarioConfig& config);

// Same bytes as run_scenario for every worker count >= 1.
ScenarioResult sweep_parallel(const ScenarioConfig& config,
                              std::size_t workers);

// Writes the CSV to `path` and the metadata to `path` + ".meta.json".
void write_result(const ScenarioResult& result, const std::string& path);

}  // namespace qsllab::scenario
