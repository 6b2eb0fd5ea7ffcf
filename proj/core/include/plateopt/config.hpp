#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plateopt {

// Parameters of one command-line experiment. Which fields matter depends on
// the subcommand; the rest are carried along and echoed.
struct ExperimentConfig {
  std::string experiment = "solve-1d";
  std::string preset;
  std::uint64_t seed = 1;
  int threads = 1;

  double a = 1.0;
  double b = 100.0;
  double load = 10.0;
  std::vector<double> loads = {2.5, 25.0};
  double volume = 0.25;
  double c_l = 0.05;
  std::string design = "II";        // I, II, III or uniform
  std::string load_case = "uniform";  // uniform, corner, centered

  int n_cells = 256;
  int mesh_n = 16;
  int levels = 3;
  int max_iters = 60;
  double tol = 1e-10;

  double eta = 1e-2;
  double eps = 0.0;  // 0: twice the interface mesh size
  std::string init = "best_baseline";  // best_baseline, uniform, random
  std::string energy_scale = "as_printed";
  double affine_right_penalty = 0.0;

  std::string chart = "hemisphere";
  double delta = 1e-2;
  std::string bending_norm = "squared";

  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;

  // Throws ConfigError (line 0) on inconsistent values.
  void validate() const;
};

const std::vector<std::string>& experiment_names();
const std::vector<std::string>& preset_names();

// Defaults of a named preset; throws ConfigError for unknown names.
ExperimentConfig preset_config(const std::string& name);

// Line-oriented "key = value" text; '#' starts a comment. A `preset` key
// (or the preset argument, which wins) selects the defaults that the other
// keys then override. Unknown and repeated keys are errors with line numbers.
ExperimentConfig parse_config(const std::string& text, const std::string& preset = {});

// Every key with its resolved value, parseable by parse_config.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace plateopt
