#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsllab/error.hpp"
#include "qsllab/parallel.hpp"
#include "qsllab/presets.hpp"
#include "qsllab/scenario.hpp"

namespace {

namespace sc = qsllab::scenario;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNonConvergence = 3;
constexpr int kInvariant = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qsllab::ParameterError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunArgs {
  std::string config_file;
  std::string preset;
  std::string out;
  std::size_t workers = 0;
  std::vector<std::string> overrides;
};

int run(const RunArgs& args) {
  if (args.config_file.empty() && args.preset.empty()) {
    throw qsllab::ParameterError("run needs a config file or --preset");
  }
  // A preset supplies the base recipe; a config file layers on top of it.
  std::string text;
  if (!args.preset.empty()) text = sc::find_preset(args.preset).text;
  if (!args.config_file.empty()) text += "\n" + read_file(args.config_file);
  const sc::ScenarioConfig config = sc::parse_config(text, args.overrides);

  std::string out = args.out;
  if (out.empty()) out = config.output;
  if (out.empty()) {
    out = (args.preset.empty()
               ? std::filesystem::path(args.config_file).stem().string()
               : args.preset) +
          ".csv";
  }
  const std::size_t workers = args.workers > 0 ? args.workers : qsllab::default_worker_count();
  const sc::ScenarioResult result = sc::sweep_parallel(config, workers);
  sc::write_result(result, out);
  std::cerr << "wrote " << out << " and " << out << ".meta.json\n";
  return kOk;
}

int list_presets() {
  for (const sc::Preset& p : sc::presets()) {
    std::cout << p.name << "\t" << p.description << "\n";
  }
  return kOk;
}

int report(const char* category, const std::exception& e, int code) {
  std::cerr << "qsl-lab: " << category << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum speed limit scenarios for dephasing and HEOM models",
               "qsl-lab"};
  app.require_subcommand(1);

  RunArgs args;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario and write CSV");
  run_cmd->add_option("config-file", args.config_file, "INI scenario file");
  run_cmd->add_option("--preset", args.preset, "Start from a named recipe");
  run_cmd->add_option("--out", args.out, "CSV path (metadata goes to PATH.meta.json)");
  run_cmd->add_option("--workers", args.workers,
                      "Worker threads (default: QSL_LAB_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--override", args.overrides,
                      "section.key=value, applied after the file")
      ->allow_extra_args(false);
  CLI::App* presets_cmd = app.add_subcommand("presets", "List figure recipes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*presets_cmd) return list_presets();
    return run(args);
  } catch (const qsllab::ParseError& e) {
    return report("config error", e, kConfigError);
  } catch (const qsllab::InvariantError& e) {
    return report("invariant violation", e, kInvariant);
  } catch (const qsllab::NonConvergenceError& e) {
    return report("no convergence", e, kNonConvergence);
  } catch (const qsllab::AccuracyError& e) {
    return report("no convergence", e, kNonConvergence);
  } catch (const qsllab::Error& e) {
    return report("config error", e, kConfigError);
  } catch (const std::exception& e) {
    return report("config error", e, kConfigError);
  }
}
