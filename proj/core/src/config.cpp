#include "plateopt/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "plateopt/errors.hpp"

namespace plateopt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& s, int line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("line " + std::to_string(line) + ": " + key + " expects a number, got '" + s + "'", line);
  return v;
}

long long to_integer(const std::string& key, const std::string& s, int line) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("line " + std::to_string(line) + ": " + key + " expects an integer, got '" + s + "'", line);
  return v;
}

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, int)> set;
};

// Shortest representation that parses back to the same double.
std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Key real(const std::string& name, double ExperimentConfig::*m) {
  return {name, [m](const ExperimentConfig& c) { return shortest(c.*m); },
          [m, name](ExperimentConfig& c, const std::string& s, int line) { c.*m = to_double(name, s, line); }};
}

Key integer(const std::string& name, int ExperimentConfig::*m) {
  return {name, [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
          [m, name](ExperimentConfig& c, const std::string& s, int line) {
            c.*m = static_cast<int>(to_integer(name, s, line));
          }};
}

Key text(const std::string& name, std::string ExperimentConfig::*m) {
  return {name, [m](const ExperimentConfig& c) { return c.*m; },
          [m](ExperimentConfig& c, const std::string& s, int) { c.*m = s; }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      text("experiment", &ExperimentConfig::experiment),
      {"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& s, int line) {
         const auto res = std::from_chars(s.data(), s.data() + s.size(), c.seed);
         if (res.ec != std::errc() || res.ptr != s.data() + s.size())
           throw ConfigError("line " + std::to_string(line) + ": seed expects a non-negative integer, got '" + s + "'",
                             line);
       }},
      integer("threads", &ExperimentConfig::threads),
      real("a", &ExperimentConfig::a),
      real("b", &ExperimentConfig::b),
      real("load", &ExperimentConfig::load),
      {"loads",
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.loads.size(); ++i) s += (i ? ", " : "") + shortest(c.loads[i]);
         return s;
       },
       [](ExperimentConfig& c, const std::string& s, int line) {
         c.loads.clear();
         std::stringstream ss(s);
         std::string item;
         while (std::getline(ss, item, ',')) c.loads.push_back(to_double("loads", trim(item), line));
       }},
      real("volume", &ExperimentConfig::volume),
      real("c_l", &ExperimentConfig::c_l),
      text("design", &ExperimentConfig::design),
      text("load_case", &ExperimentConfig::load_case),
      integer("n_cells", &ExperimentConfig::n_cells),
      integer("mesh_n", &ExperimentConfig::mesh_n),
      integer("levels", &ExperimentConfig::levels),
      integer("max_iters", &ExperimentConfig::max_iters),
      real("tol", &ExperimentConfig::tol),
      real("eta", &ExperimentConfig::eta),
      real("eps", &ExperimentConfig::eps),
      text("init", &ExperimentConfig::init),
      text("energy_scale", &ExperimentConfig::energy_scale),
      real("affine_right_penalty", &ExperimentConfig::affine_right_penalty),
      text("chart", &ExperimentConfig::chart),
      real("delta", &ExperimentConfig::delta),
      text("bending_norm", &ExperimentConfig::bending_norm),
      text("output_dir", &ExperimentConfig::output_dir),
  };
  return k;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what, 0);
}

bool one_of(const std::string& s, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return s == o; });
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> n = {"solve-1d",   "optimize-1d", "compare-designs", "solve-plate",
                                             "eoc",        "optimize-plate", "solve-shell",  "optimize-shell"};
  return n;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> n = {"cantilever-1d", "optimal-1d", "figure1", "figure2", "figure4",
                                             "figure4-small-load", "figure6", "figure7", "figure8", "figure9"};
  return n;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "cantilever-1d") {
    c.experiment = "solve-1d";
  } else if (name == "optimal-1d") {
    c.experiment = "optimize-1d";
  } else if (name == "figure1") {
    c.experiment = "compare-designs";
    c.loads = {0.5, 1.0, 2.5, 5.0, 10.0, 25.0, 50.0, 100.0};
  } else if (name == "figure2") {
    c.experiment = "eoc";
    c.design = "homogeneous";
    c.load_case = "corner";
    c.load = 1.0;
    c.mesh_n = 32;
    c.levels = 4;
  } else if (name == "figure4" || name == "figure4-small-load") {
    c.experiment = "optimize-plate";
    c.load = name == "figure4" ? 100.0 * c.volume : 10.0 * c.volume;
    c.levels = 4;
  } else if (name == "figure6" || name == "figure7") {
    c.experiment = "optimize-shell";
    c.chart = "flat";
    c.load_case = name == "figure6" ? "centered" : "uniform";
    c.load = name == "figure6" ? -250.0 * c.volume : -20.0 * c.volume;
    c.eta = 1e-3;
    c.init = "uniform";
  } else if (name == "figure8") {
    c.experiment = "optimize-shell";
    c.chart = "hemisphere";
    c.load = 1e-3;
    c.volume = 0.5;
    c.eta = 1e-8;
    c.mesh_n = 10;
    c.init = "random";
  } else if (name == "figure9") {
    c.experiment = "optimize-shell";
    c.chart = "half_cylinder";
    c.load = -10.0;
    c.volume = 0.5;
    c.eta = 1e-3;
    c.delta = 0.031622776601683794;
    c.mesh_n = 8;
    c.init = "uniform";
  } else {
    throw ConfigError("unknown preset '" + name + "'", 0);
  }
  return c;
}

void ExperimentConfig::validate() const {
  const auto& e = experiment_names();
  require(std::find(e.begin(), e.end(), experiment) != e.end(), "unknown experiment '" + experiment + "'");
  require(threads >= 1, "threads must be >= 1");
  require(a > 0.0 && b >= a, "hardness requires 0 < a <= b");
  require(volume > 0.0 && volume <= 1.0, "volume must lie in (0, 1]");
  require(c_l >= 0.0, "c_l must be non-negative");
  require(n_cells >= 2, "n_cells must be >= 2");
  require(mesh_n >= 2, "mesh_n must be >= 2");
  require(levels >= 1, "levels must be >= 1");
  require(max_iters >= 1, "max_iters must be >= 1");
  require(tol > 0.0, "tol must be positive");
  require(eta >= 0.0, "eta must be non-negative");
  require(eps >= 0.0, "eps must be non-negative");
  require(delta > 0.0, "delta must be positive");
  require(affine_right_penalty >= 0.0, "affine_right_penalty must be non-negative");
  require(!loads.empty(), "loads must not be empty");
  require(one_of(design, {"I", "II", "III", "uniform", "homogeneous"}), "unknown design '" + design + "'");
  require(one_of(load_case, {"uniform", "corner", "centered"}), "unknown load_case '" + load_case + "'");
  require(one_of(init, {"best_baseline", "uniform", "random"}), "unknown init '" + init + "'");
  require(one_of(energy_scale, {"as_printed", "half"}), "unknown energy_scale '" + energy_scale + "'");
  require(one_of(chart, {"flat", "hemisphere", "half_cylinder"}), "unknown chart '" + chart + "'");
  require(one_of(bending_norm, {"squared", "unsquared"}), "unknown bending_norm '" + bending_norm + "'");
  require(!output_dir.empty(), "output_dir must not be empty");
  if (!preset.empty()) preset_config(preset);
}

ExperimentConfig parse_config(const std::string& text, const std::string& preset) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": missing key", line);
    const bool known = key == "preset" || std::any_of(keys().begin(), keys().end(),
                                                      [&](const Key& k) { return k.name == key; });
    if (!known) throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
    if (entries.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "' (first set on line " +
                            std::to_string(entries[key].line) + ")",
                        line);
    entries[key] = {value, line};
  }

  ExperimentConfig c;
  std::string p = preset;
  if (p.empty() && entries.count("preset")) p = entries["preset"].value;
  if (!p.empty()) {
    try {
      c = preset_config(p);
    } catch (const ConfigError& e) {
      const int l = preset.empty() ? entries["preset"].line : 0;
      throw ConfigError(l ? "line " + std::to_string(l) + ": " + e.what() : e.what(), l);
    }
  }
  for (const Key& k : keys()) {
    const auto it = entries.find(k.name);
    if (it != entries.end()) k.set(c, it->second.value, it->second.line);
  }
  return c;
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream os;
  if (!config.preset.empty()) os << "preset = " << config.preset << '\n';
  for (const Key& k : keys()) os << k.name << " = " << k.get(config) << '\n';
  return os.str();
}

}  // namespace plateopt
