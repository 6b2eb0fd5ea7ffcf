#include "plateopt/phasefield.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "plateopt/diagnostics.hpp"
#include "plateopt/errors.hpp"
#include "plateopt/io.hpp"

namespace plateopt {

void DesignProblem2D::validate(const TriMesh& mesh) const {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive", 0);
  if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative", 0);
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("hardness values must be positive", 0);
  const double area = mesh.total_area();
  if (!(volume > 0.0) || volume > area * (1.0 + 1e-12))
    throw ConfigError("target area must lie in (0, area of the domain]", 0);
  if (!force) throw ConfigError("missing force", 0);
}

std::vector<double> material_from_phase(const std::vector<double>& v, double a, double b) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double chi = hard_fraction(v[i]);
    out[i] = a * (1.0 - chi) + b * chi;
  }
  return out;
}

QuadField material_at_quadrature(const TriMesh& mesh, const std::vector<double>& v, double a, double b) {
  return quad_field_from_nodal(mesh, material_from_phase(v, a, b));
}

double double_well(double v) {
  const double s = v * v - 1.0;
  return 9.0 / 16.0 * s * s;
}

namespace {

double double_well_derivative(double v) { return 9.0 / 4.0 * v * (v * v - 1.0); }

}  // namespace

double modica_mortola(const TriMesh& mesh, const std::vector<double>& v, double eps) {
  const QuadRule& rule = triangle_rule_12();
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    const double area = mesh.area(t);
    double psi = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      psi += rule.weights[q] * double_well(l[0] * v[T[0]] + l[1] * v[T[1]] + l[2] * v[T[2]]);
    }
    s += area * (eps * p1_gradient(mesh, t, v).squaredNorm() + psi / eps);
  }
  return 0.5 * s;
}

std::vector<double> modica_mortola_gradient(const TriMesh& mesh, const std::vector<double>& v, double eps) {
  const QuadRule& rule = triangle_rule_12();
  std::vector<double> g(v.size(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    const double area = mesh.area(t);
    const Eigen::Vector2d gv = p1_gradient(mesh, t, v);
    // Gradients of the hat functions: rows of the inverse Jacobian.
    const Eigen::Vector2d x0 = mesh.vertices[T[0]];
    Eigen::Matrix2d J;
    J.col(0) = mesh.vertices[T[1]] - x0;
    J.col(1) = mesh.vertices[T[2]] - x0;
    const Eigen::Matrix2d Jit = J.inverse().transpose();
    const std::array<Eigen::Vector2d, 3> dphi = {Jit * Eigen::Vector2d(-1.0, -1.0), Jit * Eigen::Vector2d(1.0, 0.0),
                                                 Jit * Eigen::Vector2d(0.0, 1.0)};
    for (int i = 0; i < 3; ++i) g[T[i]] += eps * area * gv.dot(dphi[i]);
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      const double c =
          0.5 / eps * area * rule.weights[q] * double_well_derivative(l[0] * v[T[0]] + l[1] * v[T[1]] + l[2] * v[T[2]]);
      for (int i = 0; i < 3; ++i) g[T[i]] += c * l[i];
    }
  }
  return g;
}

double area_of_hard_phase(const TriMesh& mesh, const std::vector<double>& v) {
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    s += mesh.area(t) / 3.0 * (hard_fraction(v[T[0]]) + hard_fraction(v[T[1]]) + hard_fraction(v[T[2]]));
  }
  return s;
}

std::vector<double> lumped_mass(const TriMesh& mesh) {
  std::vector<double> m(mesh.n_vertices(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t)
    for (int i : mesh.triangles[t]) m[i] += mesh.area(t) / 3.0;
  return m;
}

PlateProblem plate_problem_for(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v) {
  PlateProblem p;
  p.B = material_at_quadrature(mesh, v, problem.a, problem.b);
  p.f = quad_field_from_function(mesh, 3, problem.force);
  p.scale = problem.scale;
  p.affine_right_penalty = problem.affine_right_penalty;
  return p;
}

AdjointState2D adjoint_solve_2d(const TriMesh& mesh, const PlateProblem& plate, const PlateState& state) {
  const std::vector<Matrix9> K = plate_stiffness(mesh, plate);
  const PlateKkt kkt(mesh, K, state);
  std::vector<double> r = load_vector(mesh, plate.f);
  for (double& x : r) x = -x;
  const std::vector<Eigen::Vector3d> g(mesh.n_vertices(), Eigen::Vector3d::Zero());
  AdjointState2D out;
  out.p = DktField(mesh.n_vertices(), 3);
  kkt.solve(r, g, out.p.dofs, out.mu);
  return out;
}

std::vector<double> design_gradient_2d(const TriMesh& mesh, const DesignProblem2D& problem,
                                       const std::vector<double>& v, const PlateState& state,
                                       const AdjointState2D& adjoint) {
  std::vector<double> g(v.size(), 0.0);
  if (problem.eta != 0.0) {
    g = modica_mortola_gradient(mesh, v, problem.eps);
    for (double& x : g) x *= problem.eta;
  }
  // dB/dv_j = (b - a) / 2 phi_j; the bending energy is factor * int B |grad theta|^2.
  const QuadRule& rule = triangle_rule_12();
  const double c0 = 2.0 * energy_factor(problem.scale) * 0.5 * (problem.b - problem.a);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementTable tab = tabulate(mesh, t, rule);
    std::array<Local9, 3> lw, lp;
    for (int c = 0; c < 3; ++c) {
      lw[c] = state.w.local(mesh, t, c);
      lp[c] = adjoint.p.local(mesh, t, c);
    }
    const auto& T = mesh.triangles[t];
    for (int q = 0; q < rule.size(); ++q) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += (tab.basis[q].dtheta * lw[c]).dot(tab.basis[q].dtheta * lp[c]);
      const double coef = c0 * tab.area * rule.weights[q] * s;
      for (int i = 0; i < 3; ++i) g[T[i]] += coef * rule.bary[q][i];
    }
  }
  return g;
}

DesignEvaluation evaluate_design(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v,
                                 const PlateState& init, const PlateOptions& options) {
  const PlateProblem plate = plate_problem_for(mesh, problem, v);
  DesignEvaluation e;
  e.state = newton_solve_plate(mesh, plate, init, options);
  e.compliance = plate_compliance(mesh, plate, e.state);
  e.perimeter = modica_mortola(mesh, v, problem.eps);
  e.objective = e.compliance + problem.eta * e.perimeter;
  return e;
}

double project_box_area(const std::vector<double>& mass, double volume, std::vector<double>& v) {
  double total = 0.0;
  for (double m : mass) total += m;
  // sum m_j clamp(v_j - tau) must equal 2 V - |S|.
  const double target = 2.0 * volume - total;
  auto weighted = [&](double tau) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += mass[j] * std::clamp(v[j] - tau, -1.0, 1.0);
    return s;
  };
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it - 1.0, hi = *hi_it + 1.0;  // weighted(lo) = total, weighted(hi) = -total
  if (target >= total) {
    std::fill(v.begin(), v.end(), 1.0);
    return lo;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (weighted(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double tau = 0.5 * (lo + hi);
  // Exact solve on the active set found by bisection.
  double free_mass = 0.0, rhs = target;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double y = v[j] - tau;
    if (y <= -1.0) {
      rhs += mass[j];
    } else if (y >= 1.0) {
      rhs -= mass[j];
    } else {
      free_mass += mass[j];
      rhs -= mass[j] * v[j];
    }
  }
  if (free_mass > 0.0) {
    const double exact = -rhs / free_mass;
    if (std::abs(exact - tau) <= 1e-8 * std::max(1.0, std::abs(tau))) tau = exact;
  }
  for (double& x : v) x = std::clamp(x - tau, -1.0, 1.0);
  return tau;
}

void write_design_history_csv(std::ostream& os, const std::vector<DesignHistoryRow>& history) {
  CsvWriter csv(os);
  csv.header({"iteration", "objective", "compliance", "area_residual", "step", "multiplier"});
  for (const auto& r : history) {
    csv.begin_row();
    csv.field(r.iteration);
    csv.field(r.objective);
    csv.field(r.compliance);
    csv.field(r.area_residual);
    csv.field(r.step);
    csv.field(r.multiplier);
    csv.end_row();
  }
}

DesignResult2D optimize_design_2d(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v0,
                                  const DesignOptions2D& options, const PlateState* warm) {
  problem.validate(mesh);
  auto evaluate = [&](const std::vector<double>& v, const PlateState& init) {
    const DesignEvaluation e = evaluate_design(mesh, problem, v, init, options.plate);
    return DesignSample<PlateState>{e.state, e.objective, e.compliance, e.state.converged};
  };
  auto gradient = [&](const std::vector<double>& v, const PlateState& state) {
    const PlateProblem plate = plate_problem_for(mesh, problem, v);
    return design_gradient_2d(mesh, problem, v, state, adjoint_solve_2d(mesh, plate, state));
  };
  bool ok = false;
  DesignResult2D res = projected_descent(lumped_mass(mesh), problem.volume, v0, options,
                                         warm ? *warm : PlateState::zero(mesh), evaluate, gradient, &ok);
  if (!ok) throw NonConvergence("state solve failed at the initial design");
  return res;
}

std::vector<double> phase_from_region(const TriMesh& mesh, const std::function<bool(const Eigen::Vector2d&)>& hard) {
  std::vector<double> v(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i) v[i] = hard(mesh.vertices[i]) ? 1.0 : -1.0;
  return v;
}

std::function<bool(const Eigen::Vector2d&)> baseline_region(BaselineKind kind, double volume, double y_center) {
  switch (kind) {
    case BaselineKind::I:
      return [=](const Eigen::Vector2d& x) { return x.x() < volume; };
    case BaselineKind::II:
      return [=](const Eigen::Vector2d& x) { return std::abs(x.y() - y_center) < 0.5 * volume; };
    case BaselineKind::III: {
      const double s = std::sqrt(volume);
      return [=](const Eigen::Vector2d& x) { return x.x() < s && std::abs(x.y() - y_center) < 0.5 * s; };
    }
  }
  return {};
}

std::vector<double> restrict_p1(const Refinement& r, const std::vector<double>& fine) {
  return {fine.begin(), fine.begin() + r.old_vertex_count};
}

double interface_width(const TriMesh& mesh, const std::vector<double>& v) {
  double h = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    const double lo = std::min({v[T[0]], v[T[1]], v[T[2]]});
    const double hi = std::max({v[T[0]], v[T[1]], v[T[2]]});
    if (lo <= 0.0 && hi >= 0.0 && hi > lo) h = std::max(h, mesh.diameter(t));
  }
  return 2.0 * (h > 0.0 ? h : mesh.max_diameter());
}

AdaptiveResult adaptive_optimize(const TriMesh& mesh0, const DesignProblem2D& problem, const std::vector<double>& v0,
                                 const AdaptiveOptions& options) {
  if (options.levels < 1) throw ConfigError("levels must be at least 1", 0);
  AdaptiveResult out;
  out.mesh = mesh0;
  out.problem = problem;
  std::vector<double> v = v0;
  PlateState warm = PlateState::zero(out.mesh);
  for (int level = 0; level < options.levels; ++level) {
    if (options.update_eps) out.problem.eps = interface_width(out.mesh, v);
    out.result = optimize_design_2d(out.mesh, out.problem, v, options.inner, &warm);
    AdaptiveLevel info;
    info.n_triangles = out.mesh.n_triangles();
    info.n_vertices = out.mesh.n_vertices();
    info.eps = out.problem.eps;
    info.objective = out.result.objective;
    info.compliance = out.result.compliance;
    const MarkingReport phase = mark_phase_gradient(out.mesh, out.result.v);
    info.marked_phase = static_cast<int>(phase.marked.size());
    out.last_phase_marks = phase;
    if (level + 1 == options.levels) {
      info.marked_total = 0;
      out.levels.push_back(info);
      if (options.on_level) options.on_level(level, out.mesh, out.result, out.problem);
      break;
    }
    const MarkingReport marks =
        mark_union(phase, mark_isometry_error(out.mesh, out.result.state.w, options.isometry_fraction));
    info.marked_total = static_cast<int>(marks.marked.size());
    out.levels.push_back(info);
    if (options.on_level) options.on_level(level, out.mesh, out.result, out.problem);
    const Refinement r = bisect(out.mesh, marks.marked);
    v = prolong_p1(r, out.result.v);
    warm = PlateState::zero(r.mesh);
    warm.w = prolong_dkt(out.mesh, r, out.result.state.w);
    out.mesh = r.mesh;
  }
  return out;
}

}  // namespace plateopt
