#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "plateopt/config.hpp"
#include "plateopt/errors.hpp"
#include "plateopt/experiments.hpp"
#include "plateopt/io.hpp"

using namespace plateopt;

namespace {

// Best effort: the output directory may be the thing that failed.
void record_error(const std::string& dir, const std::string& json) {
  std::cerr << json << '\n';
  if (dir.empty()) return;
  try {
    ensure_directory(dir);
    write_text_file(join_path(dir, "error.json"), json + "\n");
  } catch (const std::exception&) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Material optimization for bending isometries and thin shells"};
  app.require_subcommand(0, 1);

  std::string config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool list_presets = false;
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "named parameter set (see --list-presets)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for randomized initial designs");
  app.add_option("--threads", threads, "worker threads for parameter sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--list-presets", list_presets, "print the preset names and exit");
  for (const std::string& name : experiment_names())
    app.add_subcommand(name, "run the " + name + " experiment")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    record_error("", error_record_json(ConfigError(e.what(), 0)));
    return exit_code_for(ErrorKind::ConfigError);
  }

  if (list_presets) {
    for (const std::string& p : preset_names()) std::cout << p << '\n';
    return 0;
  }

  ExperimentConfig config;
  try {
    config = parse_config(config_path.empty() ? std::string() : read_text_file(config_path), preset);
    if (!app.get_subcommands().empty()) config.experiment = app.get_subcommands().front()->get_name();
    else if (config_path.empty() && preset.empty())
      throw ConfigError("expected a subcommand, --config or --preset", 0);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    run_experiment(config, std::cout);
  } catch (const Error& e) {
    record_error(out_dir.empty() ? config.output_dir : out_dir, error_record_json(e));
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    record_error(out_dir.empty() ? config.output_dir : out_dir,
                 std::string("{\"error\": \"InternalError\", \"message\": \"") + e.what() + "\", \"exit_code\": 1}");
    return 1;
  }
  return 0;
}
