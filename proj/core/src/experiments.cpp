#include "plateopt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "plateopt/adjoint1d.hpp"
#include "plateopt/design1d.hpp"
#include "plateopt/diagnostics.hpp"
#include "plateopt/grid1d.hpp"
#include "plateopt/io.hpp"
#include "plateopt/phasefield.hpp"
#include "plateopt/plate.hpp"
#include "plateopt/shell.hpp"

namespace plateopt {

namespace {

using Clock = std::chrono::steady_clock;

std::string seconds_since(Clock::time_point t0) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", std::chrono::duration<double>(Clock::now() - t0).count());
  return buf;
}

std::ofstream open_csv(const ExperimentConfig& c, const std::string& name) {
  const std::string path = join_path(c.output_dir, name);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path, 0);
  return f;
}

BaselineKind baseline_kind(const std::string& name) {
  if (name == "I") return BaselineKind::I;
  if (name == "III") return BaselineKind::III;
  return BaselineKind::II;
}

bool is_baseline(const std::string& design) { return design == "I" || design == "II" || design == "III"; }

EnergyScale energy_scale(const ExperimentConfig& c) {
  return c.energy_scale == "half" ? EnergyScale::Half : EnergyScale::AsPrinted;
}

ChartKind chart_kind(const std::string& name) {
  if (name == "flat") return ChartKind::Flat;
  if (name == "half_cylinder") return ChartKind::HalfCylinder;
  return ChartKind::Hemisphere;
}

// ---- 1D ----

MaterialProfile1D profile_1d(const ExperimentConfig& c, const Grid1D& grid) {
  if (is_baseline(c.design)) return averaged_profile({baseline_kind(c.design), c.volume, c.a, c.b}, grid);
  const double B = c.design == "homogeneous" ? c.a : c.a + (c.b - c.a) * c.volume;
  return MaterialProfile1D::constant(grid, B, c.a, c.b);
}

void write_state_1d(std::ostream& os, const PhaseSolution1D& sol) {
  const ProfileCurve curve = phase_to_curve(sol);
  CsvWriter w(os);
  w.header({"t", "K", "x", "z"});
  for (int i = 0; i < sol.grid.n_nodes(); ++i)
    w.row({sol.grid.nodes[i], sol.K[i], curve.points[i][0], curve.points[i][1]});
}

void solve_1d(const ExperimentConfig& c, std::ostream& log) {
  const Grid1D grid = Grid1D::uniform(c.n_cells);
  const LoadSpec1D load{c.load, {}};
  const PhaseSolution1D sol = solve_state_1d(profile_1d(c, grid), load, c.tol);
  if (!sol.converged) throw NonConvergence("1D state solve did not converge");
  auto f = open_csv(c, "state.csv");
  write_state_1d(f, sol);
  auto s = open_csv(c, "summary.csv");
  CsvWriter w(s);
  w.header({"converged", "newton_iterations", "residual", "compliance"});
  w.begin_row();
  w.field(1);
  w.field(sol.newton_iters);
  w.field(sol.residual_norm);
  w.field(compliance_1d(sol, load));
  w.end_row();
  log << "solve-1d: " << sol.newton_iters << " Newton iterations, compliance "
      << format_double(compliance_1d(sol, load)) << '\n';
}

void optimize_1d(const ExperimentConfig& c, std::ostream& log) {
  const Grid1D grid = Grid1D::uniform(c.n_cells);
  const LoadSpec1D load{c.load, {}};
  FixedPointOptions o;
  o.max_iters = std::max(o.max_iters, c.max_iters);
  const OptimizationResult1D r = optimize_fixed_point(load, c.c_l, c.a, c.b, grid, o);
  const PhaseSolution1D sol = solve_state_1d(r.design.profile(), load, c.tol);
  const AdjointSolution1D adj = solve_adjoint_1d(r.design.profile(), sol, load);
  const DesignStructure st = extract_structure(r.design);

  auto d = open_csv(c, "design.csv");
  CsvWriter dw(d);
  dw.header({"t_mid", "theta"});
  for (int e = 0; e < grid.n_cells(); ++e) dw.row({grid.midpoint(e), r.design.theta[e]});
  auto f = open_csv(c, "state.csv");
  write_state_1d(f, sol);
  auto s = open_csv(c, "summary.csv");
  CsvWriter w(s);
  w.header({"path", "converged", "iterations", "cost", "compliance", "kkt_residual", "t0", "t1", "tau"});
  w.begin_row();
  w.field(r.path);
  w.field(r.converged ? 1 : 0);
  w.field(r.iterations);
  w.field(r.cost);
  w.field(compliance_1d(sol, load));
  w.field(kkt_residual_1d(r.design, sol, adj, c.c_l));
  w.field(st.t0);
  w.field(st.t1);
  w.field(adj.tau);
  w.end_row();
  log << "optimize-1d: " << r.path << ", " << r.iterations << " iterations, cost " << format_double(r.cost)
      << ", plateau ends t0 = " << format_double(st.t0) << ", t1 = " << format_double(st.t1) << '\n';
}

void compare(const ExperimentConfig& c, std::ostream& log) {
  const DesignComparison t = compare_designs(c.volume, c.loads, c.a, c.b, Grid1D::uniform(c.n_cells), c.threads);
  auto f = open_csv(c, "table.csv");
  CsvWriter w(f);
  w.header({"load", "I", "II", "III", "best"});
  for (const auto& r : t.rows) {
    w.begin_row();
    w.field(r.load);
    for (double x : r.compliance) w.field(x);
    w.field(std::string(baseline_name(BaselineKind(r.best))));
    w.end_row();
    log << "load " << format_double(r.load) << ": best design " << baseline_name(BaselineKind(r.best)) << '\n';
  }
  auto g = open_csv(c, "crossovers.csv");
  CsvWriter cw(g);
  cw.header({"load_below", "load_above", "from", "to"});
  for (const auto& x : t.crossovers) {
    cw.begin_row();
    cw.field(x.load_below);
    cw.field(x.load_above);
    cw.field(std::string(baseline_name(BaselineKind(x.from))));
    cw.field(std::string(baseline_name(BaselineKind(x.to))));
    cw.end_row();
  }
}

// ---- plates ----

TriMesh plate_mesh(int n) { return structured_rect(n, n, 1.0, 1.0, ClampSide::Left); }

QuadField plate_hardness(const ExperimentConfig& c, const TriMesh& mesh) {
  if (is_baseline(c.design)) return indicator_hardness(mesh, c.a, c.b, baseline_region(baseline_kind(c.design), c.volume));
  const double B = c.design == "homogeneous" ? c.a : c.a + (c.b - c.a) * c.volume;
  return constant_field(mesh, {B});
}

PlateProblem plate_problem(const ExperimentConfig& c, const TriMesh& mesh) {
  PlateProblem p;
  p.B = plate_hardness(c, mesh);
  p.f = quad_field_from_function(mesh, 3, load_case_force(c.load_case, c.load, mesh));
  p.scale = energy_scale(c);
  p.affine_right_penalty = c.affine_right_penalty;
  return p;
}

PlateOptions plate_options(const ExperimentConfig& c) {
  PlateOptions o;
  o.newton_tol = c.tol;
  return o;
}

void write_history(std::ostream& os, const std::vector<double>& h) {
  CsvWriter w(os);
  w.header({"iteration", "residual"});
  for (std::size_t k = 0; k < h.size(); ++k) {
    w.begin_row();
    w.field(static_cast<int>(k));
    w.field(h[k]);
    w.end_row();
  }
}

void solve_plate(const ExperimentConfig& c, std::ostream& log) {
  const TriMesh mesh = plate_mesh(c.mesh_n);
  const PlateProblem p = plate_problem(c, mesh);
  const PlateState s = newton_solve_plate(mesh, p, PlateState::zero(mesh), plate_options(c));
  if (!s.converged) throw NonConvergence("plate Newton solve did not converge");
  auto f = open_csv(c, "summary.csv");
  CsvWriter w(f);
  w.header({"n_vertices", "h", "newton_iterations", "compliance", "isometry_l1", "kappa_l1", "max_constraint"});
  w.begin_row();
  w.field(mesh.n_vertices());
  w.field(mesh.max_diameter());
  w.field(s.iterations);
  w.field(plate_compliance(mesh, p, s));
  w.field(isometry_error_l1(mesh, s.w));
  w.field(gauss_curvature_l1(mesh, s.w));
  w.field(max_constraint_violation(mesh, s.w));
  w.end_row();
  auto h = open_csv(c, "newton.csv");
  write_history(h, s.history);
  write_deformed_vtk(join_path(c.output_dir, "deformed.vtk"), mesh, s.w);
  log << "solve-plate: " << s.iterations << " Newton iterations, compliance "
      << format_double(plate_compliance(mesh, p, s)) << '\n';
}

void eoc_study(const ExperimentConfig& c, std::ostream& log) {
  EocTable table;
  table.names = {"isometry_l1", "kappa_l1"};
  table.errors.assign(2, {});
  auto lf = open_csv(c, "levels.csv");
  CsvWriter lw(lf);
  lw.header({"level", "n", "h", "newton_iterations", "max_constraint"});
  for (int k = 0; k < c.levels; ++k) {
    const int n = c.mesh_n << k;
    const TriMesh mesh = plate_mesh(n);
    const PlateProblem p = plate_problem(c, mesh);
    const auto t0 = Clock::now();
    const PlateState s = newton_solve_plate(mesh, p, PlateState::zero(mesh), plate_options(c));
    if (!s.converged) throw NonConvergence("plate Newton solve did not converge at level " + std::to_string(k));
    table.h.push_back(mesh.max_diameter());
    table.errors[0].push_back(isometry_error_l1(mesh, s.w));
    table.errors[1].push_back(gauss_curvature_l1(mesh, s.w));
    lw.begin_row();
    lw.field(k);
    lw.field(n);
    lw.field(mesh.max_diameter());
    lw.field(s.iterations);
    lw.field(max_constraint_violation(mesh, s.w));
    lw.end_row();
    log << "level " << k << " (n = " << n << "): isometry " << format_double(table.errors[0].back()) << ", kappa "
        << format_double(table.errors[1].back()) << ", " << seconds_since(t0) << " s\n";
    if (k + 1 == c.levels) write_deformed_vtk(join_path(c.output_dir, "deformed.vtk"), mesh, s.w);
  }
  auto f = open_csv(c, "eoc.csv");
  table.write_csv(f);
}

std::vector<double> uniform_phase(const TriMesh& mesh, double volume) {
  return std::vector<double>(mesh.n_vertices(), std::clamp(2.0 * volume - 1.0, -1.0, 1.0));
}

std::vector<double> random_phase(const TriMesh& mesh, double volume, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  std::vector<double> v = uniform_phase(mesh, volume);
  for (double& x : v) x = std::clamp(x + U(rng), -1.0, 1.0);
  return v;
}

std::array<double, 3> baseline_compliances(const ExperimentConfig& c, const TriMesh& mesh, const DesignProblem2D& pr) {
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const auto region = baseline_region(BaselineKind(k), pr.volume);
    PlateProblem p = plate_problem_for(mesh, pr, phase_from_region(mesh, region));
    p.B = indicator_hardness(mesh, pr.a, pr.b, region);
    const PlateState s = newton_solve_plate(mesh, p, PlateState::zero(mesh), plate_options(c));
    out[k] = s.converged ? plate_compliance(mesh, p, s) : std::nan("");
  }
  return out;
}

void optimize_plate(const ExperimentConfig& c, std::ostream& log) {
  const TriMesh mesh = plate_mesh(c.mesh_n);
  DesignProblem2D pr;
  pr.force = load_case_force(c.load_case, c.load, mesh);
  pr.a = c.a;
  pr.b = c.b;
  pr.eta = c.eta;
  pr.volume = c.volume * mesh.total_area();
  pr.scale = energy_scale(c);
  pr.affine_right_penalty = c.affine_right_penalty;

  std::vector<double> v0;
  if (c.init == "best_baseline") {
    const auto base = baseline_compliances(c, mesh, pr);
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (base[k] < base[best]) best = k;
    v0 = phase_from_region(mesh, baseline_region(BaselineKind(best), pr.volume));
    log << "initial design: baseline " << baseline_name(BaselineKind(best)) << '\n';
  } else if (c.init == "random") {
    v0 = random_phase(mesh, c.volume, c.seed);
  } else {
    v0 = uniform_phase(mesh, c.volume);
  }
  pr.eps = c.eps > 0.0 ? c.eps : interface_width(mesh, v0);

  AdaptiveOptions o;
  o.levels = c.levels;
  o.update_eps = c.eps == 0.0;
  o.inner.max_iters = c.max_iters;
  o.inner.plate = plate_options(c);
  const auto t0 = Clock::now();
  o.on_level = [&](int level, const TriMesh& m, const DesignResult2D& r, const DesignProblem2D& p) {
    log << "level " << level << ": " << m.n_triangles() << " triangles, eps " << format_double(p.eps) << ", "
        << r.history.size() - 1 << " iterations, compliance " << format_double(r.compliance) << ", "
        << seconds_since(t0) << " s\n";
  };
  const AdaptiveResult res = adaptive_optimize(mesh, pr, v0, o);

  auto lf = open_csv(c, "levels.csv");
  CsvWriter lw(lf);
  lw.header({"level", "n_triangles", "n_vertices", "eps", "objective", "compliance", "marked_phase", "marked_total"});
  for (std::size_t k = 0; k < res.levels.size(); ++k) {
    const auto& L = res.levels[k];
    lw.begin_row();
    lw.field(static_cast<int>(k));
    lw.field(L.n_triangles);
    lw.field(L.n_vertices);
    lw.field(L.eps);
    lw.field(L.objective);
    lw.field(L.compliance);
    lw.field(L.marked_phase);
    lw.field(L.marked_total);
    lw.end_row();
  }
  auto hf = open_csv(c, "history.csv");
  res.result.write_history_csv(hf);

  const auto base = baseline_compliances(c, res.mesh, res.problem);
  auto bf = open_csv(c, "baselines.csv");
  CsvWriter bw(bf);
  bw.header({"design", "compliance"});
  for (int k = 0; k < 3; ++k) {
    bw.begin_row();
    bw.field(std::string(baseline_name(BaselineKind(k))));
    bw.field(base[k]);
    bw.end_row();
  }
  bw.begin_row();
  bw.field(std::string("optimized"));
  bw.field(res.result.compliance);
  bw.end_row();

  PointField phase{"phase", 1, res.result.v};
  PointField hard{"hardness", 1, material_from_phase(res.result.v, pr.a, pr.b)};
  write_deformed_vtk(join_path(c.output_dir, "design.vtk"), res.mesh, res.result.state.w, {phase, hard});
  log << "optimized compliance " << format_double(res.result.compliance) << "; baselines I "
      << format_double(base[0]) << ", II " << format_double(base[1]) << ", III " << format_double(base[2]) << '\n';
}

// ---- shells ----

std::vector<double> deformed_positions(const ShellState& s) {
  const int n = s.psi.n_nodes();
  std::vector<double> pos(3 * n);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < 3; ++k) pos[3 * p + k] = s.psi(p, k, 0);
  return pos;
}

std::vector<double> reference_positions(const ShellGeometry& g) {
  const int n = g.mesh().n_vertices();
  std::vector<double> pos(3 * n);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < 3; ++k) pos[3 * p + k] = g.reference()(p, k, 0);
  return pos;
}

PointField displacement_field(const ShellGeometry& g, const ShellState& s) {
  const int n = g.mesh().n_vertices();
  PointField d{"displacement", 3, std::vector<double>(3 * n)};
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < 3; ++k) d.values[3 * p + k] = s.psi(p, k, 0) - g.reference()(p, k, 0);
  return d;
}

ShellOptions shell_options(const ExperimentConfig& c) {
  ShellOptions o;
  o.tol = std::max(c.tol, 1e-12);
  return o;
}

void solve_shell(const ExperimentConfig& c, std::ostream& log) {
  const ChartKind kind = chart_kind(c.chart);
  const ShellGeometry geom(chart_mesh(kind, c.mesh_n), kind);
  const TriMesh& mesh = geom.mesh();
  const std::vector<double> v = c.design == "homogeneous" ? std::vector<double>(mesh.n_vertices(), -1.0)
                                                          : uniform_phase(mesh, c.volume);
  ShellProblem p;
  p.B = material_at_quadrature(mesh, v, c.a, c.b);
  p.f = quad_field_from_function(mesh, 3, load_case_force(c.load_case, c.load, mesh));
  p.delta = c.delta;
  const ShellState s = newton_solve_shell(geom, p, ShellState::reference(geom), shell_options(c));
  if (!s.converged) throw NonConvergence("shell Newton solve did not converge");
  const BendingNorm norm = c.bending_norm == "unsquared" ? BendingNorm::Unsquared : BendingNorm::Squared;

  auto f = open_csv(c, "summary.csv");
  CsvWriter w(f);
  w.header({"n_vertices", "delta", "newton_iterations", "compliance", "max_displacement", "membrane_energy",
            "bending_energy"});
  w.begin_row();
  w.field(mesh.n_vertices());
  w.field(c.delta);
  w.field(s.iterations);
  w.field(shell_compliance(geom, p, s));
  w.field(max_displacement(geom, s));
  w.field(membrane_energy(geom, p.B, s.psi));
  w.field(shell_bending_energy(geom, p.B, s.psi, norm));
  w.end_row();
  auto h = open_csv(c, "newton.csv");
  write_history(h, s.history);
  write_vtk_file(join_path(c.output_dir, "deformed.vtk"), mesh, {displacement_field(geom, s)}, {},
                 deformed_positions(s));
  write_vtk_file(join_path(c.output_dir, "reference.vtk"), mesh, {}, {}, reference_positions(geom));
  log << "solve-shell: " << s.iterations << " Newton iterations, max displacement "
      << format_double(max_displacement(geom, s)) << '\n';
}

void optimize_shell(const ExperimentConfig& c, std::ostream& log) {
  const ChartKind kind = chart_kind(c.chart);
  const TriMesh mesh = chart_mesh(kind, c.mesh_n);
  ShellDesignProblem d;
  d.force = load_case_force(c.load_case, c.load, mesh);
  d.a = c.a;
  d.b = c.b;
  d.eta = c.eta;
  d.delta = c.delta;
  d.volume = c.volume * chart_area(kind);
  const std::vector<double> v0 = c.init == "random" ? random_phase(mesh, c.volume, c.seed) : uniform_phase(mesh, c.volume);
  d.eps = c.eps > 0.0 ? c.eps : interface_width(mesh, v0);

  ShellDesignOptions o;
  o.max_iters = c.max_iters;
  o.shell = shell_options(c);
  const auto t0 = Clock::now();
  const ShellAdaptiveResult res = adaptive_optimize_shell(mesh, kind, d, v0, c.levels, o, c.eps == 0.0);
  const ShellGeometry geom(res.mesh, kind);

  auto lf = open_csv(c, "levels.csv");
  CsvWriter lw(lf);
  lw.header({"level", "n_triangles"});
  for (std::size_t k = 0; k < res.n_triangles.size(); ++k) {
    lw.begin_row();
    lw.field(static_cast<int>(k));
    lw.field(res.n_triangles[k]);
    lw.end_row();
  }
  auto hf = open_csv(c, "history.csv");
  res.result.write_history_csv(hf);
  auto sf = open_csv(c, "summary.csv");
  CsvWriter sw(sf);
  sw.header({"objective", "compliance", "interface_length", "hard_area", "surface_area", "eps", "max_displacement"});
  sw.begin_row();
  sw.field(res.result.objective);
  sw.field(res.result.compliance);
  sw.field(interface_length(res.mesh, res.result.v, res.problem.eps));
  sw.field(surface_hard_area(geom, res.result.v));
  sw.field(geom.surface_area());
  sw.field(res.problem.eps);
  sw.field(max_displacement(geom, res.result.state));
  sw.end_row();

  PointField phase{"phase", 1, res.result.v};
  write_vtk_file(join_path(c.output_dir, "design_chart.vtk"), res.mesh, {phase});
  write_vtk_file(join_path(c.output_dir, "design_deformed.vtk"), res.mesh,
                 {phase, displacement_field(geom, res.result.state)}, {}, deformed_positions(res.result.state));
  log << "optimize-shell: " << res.n_triangles.size() << " levels, compliance "
      << format_double(res.result.compliance) << ", interface length "
      << format_double(interface_length(res.mesh, res.result.v, res.problem.eps)) << ", "
      << seconds_since(t0) << " s\n";
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

}  // namespace

std::function<void(const Eigen::Vector2d&, double*)> load_case_force(const std::string& load_case, double load,
                                                                    const TriMesh& mesh) {
  Eigen::Vector2d lo = mesh.vertices.front(), hi = lo;
  for (const auto& x : mesh.vertices) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  if (load_case == "corner") {
    return [=](const Eigen::Vector2d& x, double* o) {
      o[0] = o[1] = o[2] = 0.0;
      if (x.x() < hi.x() - 0.1) return;
      if (x.y() <= lo.y() + 0.1) {
        o[1] = 50.0;
        o[2] = load;
      } else if (x.y() >= hi.y() - 0.1) {
        o[1] = -50.0;
        o[2] = load;
      }
    };
  }
  if (load_case == "centered") {
    const Eigen::Vector2d m = 0.5 * (lo + hi);
    return [=](const Eigen::Vector2d& x, double* o) {
      o[0] = o[1] = 0.0;
      o[2] = (x - m).cwiseAbs().maxCoeff() <= 0.05 ? load : 0.0;
    };
  }
  if (load_case != "uniform") throw ConfigError("unknown load_case '" + load_case + "'", 0);
  return [=](const Eigen::Vector2d&, double* o) {
    o[0] = o[1] = 0.0;
    o[2] = load;
  };
}

void run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  ensure_directory(config.output_dir);
  write_text_file(join_path(config.output_dir, "config.txt"), serialize_config(config));
  const std::string& e = config.experiment;
  if (e == "solve-1d") solve_1d(config, log);
  else if (e == "optimize-1d") optimize_1d(config, log);
  else if (e == "compare-designs") compare(config, log);
  else if (e == "solve-plate") solve_plate(config, log);
  else if (e == "eoc") eoc_study(config, log);
  else if (e == "optimize-plate") optimize_plate(config, log);
  else if (e == "solve-shell") solve_shell(config, log);
  else if (e == "optimize-shell") optimize_shell(config, log);
}

std::string error_record_json(const Error& error) {
  std::ostringstream os;
  os << "{\"error\": \"" << error_kind_name(error.kind()) << "\", \"message\": \"" << json_escape(error.what())
     << "\", \"exit_code\": " << exit_code_for(error.kind());
  if (const auto* c = dynamic_cast<const ConfigError*>(&error); c && c->line > 0) os << ", \"line\": " << c->line;
  os << "}";
  return os.str();
}

}  // namespace plateopt
