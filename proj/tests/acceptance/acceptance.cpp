// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <Eigen/Geometry>
#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "plateopt/adjoint1d.hpp"
#include "plateopt/design1d.hpp"
#include "plateopt/diagnostics.hpp"
#include "plateopt/experiments.hpp"
#include "plateopt/grid1d.hpp"
#include "plateopt/phasefield.hpp"
#include "plateopt/plate.hpp"
#include "plateopt/quadrature.hpp"
#include "plateopt/shell.hpp"

using namespace plateopt;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::printf("    ");
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
  std::fflush(stdout);
}

// Converged plate states seen by any criterion, for the nodal isometry check.
struct TrackedState {
  std::string name;
  double max_g;
};
std::vector<TrackedState> g_tracked;

void track(const std::string& name, const TriMesh& mesh, const PlateState& s) {
  if (s.converged) g_tracked.push_back({name, max_constraint_violation(mesh, s.w)});
}

// ---- 1D ----

bool gradient_1d() {
  const auto t0 = Clock::now();
  const Grid1D g = Grid1D::uniform(256);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double c_l = 0.01;
  double worst = 0.0;
  for (double c : {1.0, 10.0}) {
    const LoadSpec1D load{c, {}};
    for (int trial = 0; trial < 20; ++trial) {
      RelaxedDesign d = RelaxedDesign::constant(g, 0.0, 1.0, 100.0);
      for (double& t : d.theta) t = U(rng);
      const PhaseSolution1D s = solve_state_1d(d.profile(), load, 1e-12);
      const AdjointSolution1D adj = solve_adjoint_1d(d.profile(), s, load);
      const auto grad = design_gradient_1d(d, s, adj, c_l);
      Newton1DOptions o;
      o.tol = 1e-13;
      o.initial_guess = s.K;
      double num = 0.0, den = 0.0;
      for (int e = 0; e < g.n_cells(); ++e) {
        RelaxedDesign dp = d, dm = d;
        dp.theta[e] = std::min(1.0, d.theta[e] + 1e-6);
        dm.theta[e] = std::max(0.0, d.theta[e] - 1e-6);
        const double fd = (total_cost_1d(dp, load, c_l, o) - total_cost_1d(dm, load, c_l, o)) /
                          (dp.theta[e] - dm.theta[e]) / g.h(e);
        num += (fd - grad[e]) * (fd - grad[e]);
        den += fd * fd;
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  const double dt = since(t0);
  note("40 random designs (c = 1, 10), n = 256: worst relative l2 error %.3e, %.2f s", worst, dt);
  return worst <= 1e-5 && dt < 10.0;
}

bool kkt_structure() {
  const Grid1D g = Grid1D::uniform(256);
  const LoadSpec1D load{10.0, {}};
  bool ok = true;
  for (double c_l : {0.02, 0.05, 0.1}) {
    const OptimizationResult1D r = optimize_fixed_point(load, c_l, 1.0, 100.0, g);
    const PhaseSolution1D s = solve_state_1d(r.design.profile(), load, 1e-12);
    const AdjointSolution1D adj = solve_adjoint_1d(r.design.profile(), s, load);
    const double kkt = kkt_residual_1d(r.design, s, adj, c_l);
    const DesignStructure st = extract_structure(r.design, 1e-6);
    double prefix = 0.0, suffix = 0.0;
    for (int e = 0; e < g.n_cells(); ++e) {
      if (g.midpoint(e) < st.t0) prefix = std::max(prefix, 1.0 - r.design.theta[e]);
      if (g.midpoint(e) > st.t1) suffix = std::max(suffix, r.design.theta[e]);
    }
    const bool pass = r.converged && kkt <= 1e-6 && st.monotone_violation <= 1e-6 && prefix <= 1e-6 &&
                      suffix <= 1e-6 && st.t0 < st.t1 && st.t1 < 1.0 && !st.all_soft;
    note("c_l = %.2f: t0 = %.4f, t1 = %.4f, monotone violation %.2e, kkt residual %.2e, %s", c_l, st.t0, st.t1,
         st.monotone_violation, kkt, pass ? "ok" : "violated");
    ok = ok && pass;
  }
  return ok;
}

bool design_regimes() {
  const Grid1D g = Grid1D::uniform(256);
  bool ok = true;
  for (double b : {32.0, 100.0, 1000.0}) {
    const DesignComparison t = compare_designs(0.25, {0.01, 0.1}, 1.0, b, g);
    for (const auto& r : t.rows) {
      const bool pass = r.compliance[1] < r.compliance[0];
      note("V = 0.25, b = %g, load %g: I %.6e, II %.6e %s", b, r.load, r.compliance[0], r.compliance[1],
           pass ? "(II < I)" : "(II >= I)");
      ok = ok && pass;
    }
  }
  const DesignComparison t = compare_designs(0.75, {200.0, 1000.0}, 1.0, 100.0, g);
  for (const auto& r : t.rows) {
    const bool pass = r.compliance[0] < r.compliance[1] && r.compliance[0] < r.compliance[2];
    note("V = 0.75, b = 100, load %g: I %.6e, II %.6e, III %.6e", r.load, r.compliance[0], r.compliance[1],
         r.compliance[2]);
    ok = ok && pass;
  }
  return ok;
}

bool threshold() {
  const Grid1D g = Grid1D::uniform(256);
  bool ok = true;
  for (double c : {0.5, 1.0, 2.0}) {
    const LoadSpec1D load{c, {}};
    const RelaxedDesign soft = RelaxedDesign::constant(g, 0.0, 1.0, 100.0);
    const PhaseSolution1D s = solve_state_1d(soft.profile(), load, 1e-12);
    const AdjointSolution1D adj = solve_adjoint_1d(soft.profile(), s, load);
    const double closed = closed_form_threshold(load, 1.0, 100.0, g);
    const double found = threshold_cl(load, 1.0, 100.0, g);
    const double rel = std::abs(found - closed) / closed;
    note("c = %g (tau = %g at theta = 0): bisection %.6e, closed form %.6e, relative difference %.2e", c, adj.tau,
         found, closed, rel);
    ok = ok && adj.tau == 1.0 && rel <= 0.05;
  }
  return ok;
}

bool adjoint_signs() {
  const Grid1D g = Grid1D::uniform(256);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int bad = 0, with_switch = 0;
  for (int trial = 0; trial < 20; ++trial) {
    RelaxedDesign d = RelaxedDesign::constant(g, 0.0, 1.0, 100.0);
    for (double& t : d.theta) t = U(rng);
    const LoadSpec1D load{1.0 + 400.0 * U(rng), {}};
    const PhaseSolution1D s = solve_state_1d(d.profile(), load, 1e-12);
    const AdjointSolution1D adj = solve_adjoint_1d(d.profile(), s, load);
    bool ok = true;
    for (int i = 1; i + 1 < g.n_nodes(); ++i) ok = ok && adj.P[i] < 0.0;
    for (int i = 0; i < g.n_cells(); ++i) {
      if (g.nodes[i + 1] <= adj.tau) ok = ok && adj.p[i + 1] > adj.p[i];
      else if (g.nodes[i] >= adj.tau) ok = ok && adj.p[i + 1] < adj.p[i];
    }
    int zeros = 0;
    for (int i = 1; i + 1 < g.n_nodes() - 1; ++i)
      if ((adj.p[i] < 0.0) != (adj.p[i + 1] < 0.0)) ++zeros;
    if (adj.tau < 1.0) {
      ++with_switch;
      ok = ok && zeros == 1 && adj.tau0.has_value();
    } else {
      ok = ok && zeros == 0;
    }
    if (!ok) ++bad;
  }
  note("20 random designs, c in [1, 401]: %d with tau < 1, %d violating the sign structure", with_switch, bad);
  return bad == 0 && with_switch > 0;
}

// ---- plates ----

QuadField corner_force(const TriMesh& mesh) { return quad_field_from_function(mesh, 3, load_case_force("corner", 1.0, mesh)); }

bool dkt_eoc() {
  std::vector<double> iso, kap, h;
  const auto t0 = Clock::now();
  double slowest = 0.0;
  for (int k = 0; k < 4; ++k) {
    const int n = 32 << k;
    const TriMesh m = structured_rect(n, n, 1.0, 1.0, ClampSide::Left);
    PlateProblem pr;
    pr.B = constant_field(m, {1.0});
    pr.f = corner_force(m);
    const auto tl = Clock::now();
    const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
    slowest = std::max(slowest, since(tl));
    track("homogeneous benchmark n=" + std::to_string(n), m, s);
    h.push_back(m.max_diameter());
    iso.push_back(isometry_error_l1(m, s.w));
    kap.push_back(gauss_curvature_l1(m, s.w));
    note("h = %.6f: converged %d, isometry L1 %.4e, kappa L1 %.4e, %.1f s", h.back(), s.converged, iso.back(),
         kap.back(), since(tl));
  }
  const auto ri = eoc(iso), rk = eoc(kap);
  bool ok = true;
  for (std::size_t i = 0; i < ri.size(); ++i) {
    note("EOC level %zu: isometry %.3f (band [0.9, 1.5]), kappa %.3f (band [0.3, 0.8])", i + 1, ri[i], rk[i]);
    ok = ok && ri[i] >= 0.9 && ri[i] <= 1.5 && rk[i] >= 0.3 && rk[i] <= 0.8;
  }
  const bool magnitude = iso[0] >= 0.0638 / 2 && iso[0] <= 0.0638 * 2 && kap[0] >= 3.992 / 2 && kap[0] <= 3.992 * 2;
  note("coarsest level vs reference magnitudes: isometry %.4e vs 0.0638, kappa %.4e vs 3.992 (factor 2): %s", iso[0],
       kap[0], magnitude ? "ok" : "outside");
  note("largest level %.1f s, total %.1f s", slowest, since(t0));
  if (!ok || !magnitude)
    note("the solver stays on the nearly flat branch for this load; see the decisions ledger");
  return ok && magnitude && slowest < 1800.0;
}

bool plate_symmetry() {
  const TriMesh m = structured_rect(16, 16, 1.0, 1.0, ClampSide::Left);
  PlateProblem pr;
  pr.B = indicator_hardness(m, 1.0, 100.0, baseline_region(BaselineKind::II, 0.25));
  pr.f = corner_force(m);
  const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
  track("symmetric strip", m, s);
  const double sign[3] = {1.0, -1.0, 1.0};
  double mismatch = 0.0;
  PointLocator loc(m);
  for (int p = 0; p < m.n_vertices(); ++p) {
    const Eigen::Vector2d q(m.vertices[p].x(), -m.vertices[p].y());
    int mp = -1;
    for (int k = 0; k < m.n_vertices(); ++k)
      if ((m.vertices[k] - q).norm() < 1e-12) mp = k;
    if (mp < 0) return false;
    for (int c = 0; c < 3; ++c) {
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 0) - sign[c] * s.w(p, c, 0)));
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 1) - sign[c] * s.w(p, c, 1)));
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 2) + sign[c] * s.w(p, c, 2)));
    }
  }
  note("16x16 symmetric mesh, strip design, mirrored corner loads: converged %d, nodal mismatch %.3e", s.converged,
       mismatch);
  return s.converged && mismatch <= 1e-8;
}

// Extruded 1D phase for a given 2D hardness: returns the compliance ratio.
struct CylinderRun {
  bool converged = false;
  int iterations = 0;
  double compliance_2d = 0.0;
  double compliance_1d = 0.0;
};

CylinderRun cylinder_run(int n, double c, const QuadField& B, double Bbar, const TriMesh& m) {
  const int sub = 8;
  const Grid1D g = Grid1D::uniform(n * sub);
  const LoadSpec1D load{c, {}};
  const PhaseSolution1D sol = solve_state_1d(MaterialProfile1D::constant(g, Bbar, 1.0, 100.0), load, 1e-12);
  std::vector<double> X(g.n_nodes(), 0.0), Z(g.n_nodes(), 0.0);
  for (int i = 0; i < g.n_cells(); ++i) {
    const double h = g.h(i), k0 = sol.K[i], k1 = sol.K[i + 1], km = 0.5 * (k0 + k1);
    X[i + 1] = X[i] + h / 6.0 * (std::cos(k0) + 4.0 * std::cos(km) + std::cos(k1));
    Z[i + 1] = Z[i] + h / 6.0 * (std::sin(k0) + 4.0 * std::sin(km) + std::sin(k1));
  }
  PlateState init = PlateState::zero(m);
  for (int p = 0; p < m.n_vertices(); ++p) {
    const int i = static_cast<int>(std::lround(m.vertices[p].x() * n * sub));
    init.w(p, 0, 0) = X[i] - g.nodes[i];
    init.w(p, 0, 1) = std::cos(sol.K[i]) - 1.0;
    init.w(p, 2, 0) = Z[i];
    init.w(p, 2, 1) = std::sin(sol.K[i]);
  }
  PlateProblem pr;
  pr.scale = EnergyScale::Half;
  pr.B = B;
  pr.f = constant_field(m, {0.0, 0.0, -c});
  const PlateState s = newton_solve_plate(m, pr, init);
  track("extruded cylinder", m, s);
  return {s.converged, s.iterations, plate_compliance(m, pr, s), c * compliance_1d(sol, load)};
}

bool cylindrical_cross_check() {
  const int n = 128;
  const double c = 10.0, V = 0.25, Bbar = V * 100.0 + (1.0 - V);
  const TriMesh m = structured_rect(n, n, 1.0, 1.0, ClampSide::Left);
  const CylinderRun r =
      cylinder_run(n, c, indicator_hardness(m, 1.0, 100.0, baseline_region(BaselineKind::II, V)), Bbar, m);
  const double rel = std::abs(r.compliance_2d - r.compliance_1d) / r.compliance_1d;
  note("design II strip, h = %.4f, c = %g: converged %d in %d iterations, 2D %.6e vs 1D %.6e (relative %.3e)",
       m.max_diameter(), c, r.converged, r.iterations, r.compliance_2d, r.compliance_1d, rel);
  const CylinderRun u = cylinder_run(n, c, constant_field(m, {Bbar}), Bbar, m);
  note("diagnostic, averaged hardness spread uniformly: converged %d in %d iterations, relative %.3e", u.converged,
       u.iterations, std::abs(u.compliance_2d - u.compliance_1d) / u.compliance_1d);
  if (rel > 0.02) note("the strip relaxes to a non-cylindrical state; see the decisions ledger");
  return r.converged && r.iterations <= 5 && rel <= 0.02;
}

bool phase_gradient() {
  const auto t0 = Clock::now();
  const TriMesh m = structured_rect(16, 16, 1.0, 1.0, ClampSide::Left);
  DesignProblem2D pr;
  pr.force = load_case_force("uniform", 25.0, m);
  pr.volume = 0.25;
  pr.eps = 2.0 * m.max_diameter();
  pr.eta = 1e-2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  std::vector<double> v(m.n_vertices());
  for (double& x : v) x = U(rng);
  PlateOptions o;
  o.newton_tol = 1e-13;
  const DesignEvaluation base = evaluate_design(m, pr, v, PlateState::zero(m), o);
  if (!base.state.converged) return false;
  track("phase-field gradient check", m, base.state);
  const auto g = design_gradient_2d(m, pr, v, base.state, adjoint_solve_2d(m, plate_problem_for(m, pr, v), base.state));
  double num = 0.0, den = 0.0;
  bool converged = true;
  for (int j = 0; j < m.n_vertices(); ++j) {
    const double h = 1e-4;
    auto vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    const DesignEvaluation ep = evaluate_design(m, pr, vp, base.state, o);
    const DesignEvaluation em = evaluate_design(m, pr, vm, base.state, o);
    converged = converged && ep.state.converged && em.state.converged;
    const double fd = (ep.objective - em.objective) / (2.0 * h);
    num += (fd - g[j]) * (fd - g[j]);
    den += fd * fd;
  }
  const double rel = std::sqrt(num / den), dt = since(t0);
  note("%d nodes, all components: relative l2 error %.3e, %.1f s", m.n_vertices(), rel, dt);
  return converged && rel <= 1e-4 && dt < 120.0 && m.n_vertices() <= 300;
}

std::array<double, 3> sharp_baselines(const TriMesh& m, const DesignProblem2D& pr) {
  std::array<double, 3> c{};
  for (int k = 0; k < 3; ++k) {
    const auto region = baseline_region(BaselineKind(k), pr.volume);
    PlateProblem p = plate_problem_for(m, pr, phase_from_region(m, region));
    p.B = indicator_hardness(m, pr.a, pr.b, region);
    const PlateState s = newton_solve_plate(m, p, PlateState::zero(m));
    track(std::string("baseline ") + baseline_name(BaselineKind(k)), m, s);
    c[k] = s.converged ? plate_compliance(m, p, s) : std::nan("");
  }
  return c;
}

bool optimized_dominates() {
  const auto t0 = Clock::now();
  const TriMesh m = structured_rect(16, 16, 1.0, 1.0, ClampSide::Left);
  DesignProblem2D pr;
  pr.force = load_case_force("uniform", 100.0 * 0.25, m);
  pr.volume = 0.25;
  pr.eta = 1e-2;
  const auto c0 = sharp_baselines(m, pr);
  const int best = static_cast<int>(std::min_element(c0.begin(), c0.end()) - c0.begin());
  const auto v0 = phase_from_region(m, baseline_region(BaselineKind(best), pr.volume));
  pr.eps = interface_width(m, v0);
  AdaptiveOptions o;
  o.levels = 4;
  o.inner.max_iters = 60;
  o.on_level = [&](int level, const TriMesh& mesh, const DesignResult2D& r, const DesignProblem2D& p) {
    note("level %d: %d vertices, eps %.4f, %zu iterations, compliance %.6f", level, mesh.n_vertices(), p.eps,
         r.history.size() - 1, r.compliance);
    track("optimized design level " + std::to_string(level), mesh, r.state);
  };
  const AdaptiveResult res = adaptive_optimize(m, pr, v0, o);
  const auto c1 = sharp_baselines(res.mesh, res.problem);
  const double best1 = *std::min_element(c1.begin(), c1.end());
  const double tol = 1e-8 * best1;
  note("final mesh: optimized %.6f; sharp baselines I %.6f, II %.6f, III %.6f; %.1f s", res.result.compliance, c1[0],
       c1[1], c1[2], since(t0));
  return res.levels.size() >= 3 && res.result.compliance <= best1 - tol;
}

bool nodal_isometry() {
  if (g_tracked.empty()) {
    const TriMesh m = structured_rect(16, 16, 1.0, 1.0, ClampSide::Left);
    PlateProblem pr;
    pr.B = constant_field(m, {1.0});
    pr.f = corner_force(m);
    track("homogeneous benchmark n=16", m, newton_solve_plate(m, pr, PlateState::zero(m)));
  }
  double worst = 0.0;
  std::string where;
  for (const auto& t : g_tracked)
    if (t.max_g >= worst) {
      worst = t.max_g;
      where = t.name;
    }
  note("%zu converged plate states: max nodal |G| %.3e (%s)", g_tracked.size(), worst, where.c_str());
  return worst <= 1e-9;
}

// ---- shells ----

bool shell_properties() {
  bool ok = true;
  const double w0 = membrane_density(0.4, 0.4, Eigen::Matrix2d::Identity());
  const ShellGeometry hemi(chart_mesh(ChartKind::Hemisphere, 6), ChartKind::Hemisphere);
  const QuadField B = material_at_quadrature(hemi.mesh(), std::vector<double>(hemi.mesh().n_vertices(), 0.0), 1, 100);
  const double e0 = membrane_energy(hemi, B, hemi.reference());
  note("W_mem(I) = %.17g, membrane energy of the reference = %.17g", w0, e0);
  ok = ok && w0 == 0.0 && std::abs(e0) <= 1e-12;

  // Rigid motion of a loaded state.
  ShellProblem pr{B, quad_field_from_function(hemi.mesh(), 3, load_case_force("uniform", 0.05, hemi.mesh())), 1e-1};
  const ShellState s = newton_solve_shell(hemi, pr, ShellState::reference(hemi));
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1.0, -2.0, 0.5).normalized()).toRotationMatrix();
  const Eigen::Vector3d t(0.3, -1.2, 2.5);
  DktField moved = s.psi;
  for (int p = 0; p < moved.n_nodes(); ++p)
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d col;
      for (int c = 0; c < 3; ++c) col[c] = s.psi(p, c, k);
      col = R * col;
      if (k == 0) col += t;
      for (int c = 0; c < 3; ++c) moved(p, c, k) = col[c];
    }
  const double m0 = membrane_energy(hemi, B, s.psi), m1 = membrane_energy(hemi, B, moved);
  const double b0 = shell_bending_energy(hemi, B, s.psi), b1 = shell_bending_energy(hemi, B, moved);
  const double dm = std::abs(m1 - m0) / std::max(1.0, std::abs(m0)), db = std::abs(b1 - b0) / std::max(1.0, std::abs(b0));
  note("rigid motion: membrane %.6e -> change %.2e, bending %.6e -> change %.2e", m0, dm, b0, db);
  ok = ok && s.converged && dm <= 1e-10 && db <= 1e-10;

  // Hemisphere: the interface gets longer as eta decreases.
  {
    const auto t0 = Clock::now();
    const ShellGeometry g(chart_mesh(ChartKind::Hemisphere, 10), ChartKind::Hemisphere);
    ShellDesignProblem d;
    d.force = load_case_force("uniform", 1e-3, g.mesh());
    d.volume = 0.5 * g.surface_area();
    d.delta = 1e-2;
    d.eps = 2.0 * g.mesh().max_diameter();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.2, 0.2);
    std::vector<double> v0(g.mesh().n_vertices());
    for (double& x : v0) x = U(rng);
    ShellDesignOptions o;
    o.max_iters = 60;
    double prev = -1.0;
    bool increasing = true;
    for (double eta : {1e-7, 1e-8, 1e-9}) {
      d.eta = eta;
      const ShellDesignResult r = optimize_shell_design(g, d, v0, o);
      const double L = interface_length(g.mesh(), r.v, d.eps);
      note("hemisphere eta = %.0e: %zu iterations, compliance %.6e, interface length %.4f", eta, r.history.size() - 1,
           r.compliance, L);
      increasing = increasing && L > prev;
      prev = L;
    }
    note("eta sweep %.1f s", since(t0));
    ok = ok && increasing;
  }

  // Half cylinder: thinner shells deflect more.
  {
    const auto t0 = Clock::now();
    const ShellGeometry g(chart_mesh(ChartKind::HalfCylinder, 6), ChartKind::HalfCylinder);
    const QuadField Bc = material_at_quadrature(g.mesh(), std::vector<double>(g.mesh().n_vertices(), 0.0), 1, 100);
    const QuadField f = quad_field_from_function(g.mesh(), 3, load_case_force("uniform", -10.0, g.mesh()));
    double prev = 0.0;
    bool increasing = true;
    for (double e : {-1.0, -1.5, -2.0, -2.5}) {
      const ShellProblem p{Bc, f, std::pow(10.0, e)};
      const ShellState s = newton_solve_shell(g, p, ShellState::reference(g));
      const double u = max_displacement(g, s);
      note("half cylinder delta = 10^%.1f: converged %d, max displacement %.6f", e, s.converged, u);
      increasing = increasing && s.converged && u > prev;
      prev = u;
    }
    note("delta sweep %.1f s", since(t0));
    ok = ok && increasing;
  }
  return ok;
}

bool quadrature_exactness() {
  const QuadRule& r = triangle_rule_12();
  double worst = 0.0;
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; i + j <= 6; ++j) {
      double q = 0.0;
      for (int k = 0; k < r.size(); ++k) q += 0.5 * r.weights[k] * std::pow(r.bary[k][1], i) * std::pow(r.bary[k][2], j);
      // i! j! / (i + j + 2)!
      const double exact = std::tgamma(i + 1.0) * std::tgamma(j + 1.0) / std::tgamma(i + j + 3.0);
      worst = std::max(worst, std::abs(q - exact));
    }
  note("12-point rule, %d points, all monomials of degree <= 6: max error %.3e", r.size(), worst);
  return r.size() == 12 && worst <= 1e-14;
}

struct Criterion {
  int id;
  const char* title;
  std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  // Criterion 7 runs last so that it sees every converged plate state.
  const std::vector<Criterion> criteria = {
      {1, "1D adjoint gradient vs central differences", gradient_1d},
      {2, "1D optimizer KKT structure", kkt_structure},
      {3, "1D design regimes (II beats I at small load, I best at V = 0.75, large load)", design_regimes},
      {4, "material cost threshold vs closed form", threshold},
      {5, "adjoint sign structure", adjoint_signs},
      {6, "DKT convergence rates on the homogeneous benchmark", dkt_eoc},
      {8, "reflection symmetry of symmetric data", plate_symmetry},
      {9, "extruded cylinder cross-check", cylindrical_cross_check},
      {10, "phase-field adjoint gradient vs central differences", phase_gradient},
      {11, "optimized design beats the sharp baselines after adaptive refinement", optimized_dominates},
      {12, "shell energy well, rigid invariance, eta and delta sweeps", shell_properties},
      {13, "quadrature exactness", quadrature_exactness},
      {7, "nodal isometry of converged plate states", nodal_isometry},
  };

  std::map<int, std::pair<bool, std::string>> results;
  const auto t_all = Clock::now();
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::printf("[%2d] %s\n", c.id, c.title);
    std::fflush(stdout);
    const auto t0 = Clock::now();
    bool pass = false;
    try {
      pass = c.run();
    } catch (const std::exception& e) {
      note("exception: %s", e.what());
    }
    std::printf("     -> %s (%.1f s)\n", pass ? "PASS" : "FAIL", since(t0));
    std::fflush(stdout);
    results[c.id] = {pass, c.title};
  }

  std::printf("\nsummary (%.1f s)\n", since(t_all));
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::printf("%s criterion %2d: %s\n", r.first ? "PASS" : "FAIL", id, r.second.c_str());
    failed += r.first ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
