#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "plateopt/config.hpp"
#include "plateopt/errors.hpp"
#include "plateopt/experiments.hpp"
#include "plateopt/io.hpp"

using namespace plateopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("plateopt_test_cli_io_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path.string()));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("empty config gives the defaults of the preset") {
  CHECK(parse_config("") == ExperimentConfig{});
  for (const std::string& p : preset_names()) {
    const ExperimentConfig c = parse_config("", p);
    CHECK(c == preset_config(p));
    CHECK(c.preset == p);
    CHECK_NOTHROW(c.validate());
  }
  CHECK(parse_config("preset = figure2\n") == preset_config("figure2"));
  CHECK(parse_config("preset = figure2\n", "figure4").experiment == "optimize-plate");
  CHECK_THROWS_AS(parse_config("", "no-such-preset"), ConfigError);
}

TEST_CASE("keys override the preset, comments and blanks are skipped") {
  const ExperimentConfig c = parse_config("# study\n\n  mesh_n = 12   # finer\nloads = 1, 2.5 ,4\nchart=flat\n", "figure4");
  CHECK(c.mesh_n == 12);
  CHECK(c.loads == std::vector<double>{1.0, 2.5, 4.0});
  CHECK(c.chart == "flat");
  CHECK(c.load == 25.0);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(config_error_line("a = 1\nb = 2\nmesh_n = 4\nfoo = 3\n") == 4);
  CHECK(config_error_line("a = 1\njust words\n") == 2);
  CHECK(config_error_line("\n\nmesh_n = 4.5\n") == 3);
  CHECK(config_error_line("tol = 1e-x\n") == 1);
  CHECK(config_error_line(" = 3\n") == 1);
  CHECK(config_error_line("seed = -4\n") == 1);
  CHECK(config_error_line("preset = nothing\n") == 1);
  try {
    parse_config("a = 1\nmesh_n = 3\na = 2\n");
    FAIL("duplicate key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("serialize and parse round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    ExperimentConfig c = preset_config(preset_names()[k % preset_names().size()]);
    c.a = 1.0 + U(rng);
    c.b = 10.0 + 1000.0 * U(rng);
    c.load = -5.0 + 10.0 * U(rng);
    c.loads = {U(rng), 3.0 * U(rng), 1e-7 * U(rng)};
    c.volume = U(rng);
    c.tol = std::pow(10.0, -14.0 * U(rng));
    c.delta = std::pow(10.0, -3.0 * U(rng));
    c.seed = rng();
    c.mesh_n = 2 + k;
    c.output_dir = "runs/case " + std::to_string(k);
    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
  }
}

TEST_CASE("validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  auto rejects = [](auto change) {
    ExperimentConfig x;
    change(x);
    CHECK_THROWS_AS(x.validate(), ConfigError);
  };
  rejects([](ExperimentConfig& x) { x.tol = 0.0; });
  rejects([](ExperimentConfig& x) { x.tol = -1e-8; });
  rejects([](ExperimentConfig& x) { x.delta = 0.0; });
  rejects([](ExperimentConfig& x) { x.volume = 1.5; });
  rejects([](ExperimentConfig& x) { x.b = 0.5; });
  rejects([](ExperimentConfig& x) { x.chart = "torus"; });
  rejects([](ExperimentConfig& x) { x.experiment = "fly"; });
  rejects([](ExperimentConfig& x) { x.preset = "figure99"; });
  rejects([](ExperimentConfig& x) { x.threads = 0; });
  rejects([](ExperimentConfig& x) { x.loads.clear(); });
}

TEST_CASE("error records and exit codes") {
  std::set<int> codes;
  for (ErrorKind k : {ErrorKind::NonConvergence, ErrorKind::InvalidProfile, ErrorKind::DomainError,
                      ErrorKind::SingularSystem, ErrorKind::SingularKKT, ErrorKind::DegenerateTriangle,
                      ErrorKind::MalformedProfile, ErrorKind::DegenerateMetric, ErrorKind::InvertedElement,
                      ErrorKind::ConfigError}) {
    CHECK(exit_code_for(k) != 0);
    codes.insert(exit_code_for(k));
  }
  CHECK(codes.size() == 10);

  CHECK(error_record_json(ConfigError("line 4: unknown key 'x'", 4)) ==
        "{\"error\": \"ConfigError\", \"message\": \"line 4: unknown key 'x'\", \"exit_code\": 2, \"line\": 4}");
  CHECK(error_record_json(NonConvergence("say \"no\"\n")) ==
        "{\"error\": \"NonConvergence\", \"message\": \"say \\\"no\\\"\\n\", \"exit_code\": 3}");
}

TEST_CASE("csv number format") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"x", "y"});
  w.begin_row();
  w.field(3);
  w.empty();
  w.end_row();
  CHECK(os.str() == "x,y\n3,\n");
}

TEST_CASE("load cases") {
  const TriMesh m = structured_rect(4, 4, 1.0, 1.0, ClampSide::Left);
  double f[3];
  load_case_force("uniform", 2.0, m)({0.3, 0.1}, f);
  CHECK(f[2] == 2.0);
  load_case_force("corner", 1.0, m)({0.95, -0.45}, f);
  CHECK((f[1] == 50.0 && f[2] == 1.0));
  load_case_force("corner", 1.0, m)({0.95, 0.45}, f);
  CHECK((f[1] == -50.0 && f[2] == 1.0));
  load_case_force("corner", 1.0, m)({0.5, 0.45}, f);
  CHECK((f[1] == 0.0 && f[2] == 0.0));
  load_case_force("centered", -3.0, m)({0.52, -0.04}, f);
  CHECK(f[2] == -3.0);
  load_case_force("centered", -3.0, m)({0.52, 0.06}, f);
  CHECK(f[2] == 0.0);
  CHECK_THROWS_AS(load_case_force("wind", 1.0, m), ConfigError);
}

TEST_CASE("solve-1d without load leaves K at zero and echoes the config") {
  ExperimentConfig c = parse_config("load = 0\nn_cells = 32\n", "cantilever-1d");
  c.output_dir = scratch_dir("solve1d").string();
  std::ostringstream log;
  run_experiment(c, log);
  const auto rows = read_csv(fs::path(c.output_dir) / "state.csv");
  REQUIRE(rows.size() == 34);
  CHECK(rows[0][1] == "K");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) == 0.0);
  CHECK(parse_config(read_text_file((fs::path(c.output_dir) / "config.txt").string())) == c);
}

TEST_CASE("compare-designs: row per load, best design changes, bit-identical reruns") {
  ExperimentConfig c = preset_config("figure1");
  c.threads = 2;
  c.output_dir = scratch_dir("compare_a").string();
  std::ostringstream log;
  run_experiment(c, log);
  const auto rows = read_csv(fs::path(c.output_dir) / "table.csv");
  REQUIRE(rows.size() == c.loads.size() + 1);
  CHECK(rows[0] == std::vector<std::string>{"load", "I", "II", "III", "best"});
  std::set<std::string> best;
  for (std::size_t i = 1; i < rows.size(); ++i) best.insert(rows[i][4]);
  CHECK(best.size() >= 2);

  ExperimentConfig d = c;
  d.threads = 1;
  d.output_dir = scratch_dir("compare_b").string();
  run_experiment(d, log);
  CHECK(read_text_file((fs::path(c.output_dir) / "table.csv").string()) ==
        read_text_file((fs::path(d.output_dir) / "table.csv").string()));
}

TEST_CASE("eoc with four levels reports rates") {
  ExperimentConfig c = parse_config("mesh_n = 8\n", "figure2");
  c.output_dir = scratch_dir("eoc").string();
  std::ostringstream log;
  run_experiment(c, log);
  const auto rows = read_csv(fs::path(c.output_dir) / "eoc.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"h", "isometry_l1", "eoc_isometry_l1", "kappa_l1", "eoc_kappa_l1"});
  CHECK(rows[1][2].empty());
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][2]) >= 0.9);
}

TEST_CASE("solver failures propagate as typed errors") {
  ExperimentConfig c = parse_config("experiment = solve-1d\n");
  c.output_dir = scratch_dir("unwritable").string();
  fs::create_directories(fs::path(c.output_dir).parent_path());
  write_text_file(c.output_dir, "a file where the directory should be");
  std::ostringstream log;
  CHECK_THROWS_AS(run_experiment(c, log), ConfigError);
  fs::remove(c.output_dir);
}
