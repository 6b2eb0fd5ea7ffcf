#include "plateopt/design1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "plateopt/errors.hpp"

namespace plateopt {

const char* baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::I: return "I";
    case BaselineKind::II: return "II";
    case BaselineKind::III: return "III";
  }
  return "?";
}

MaterialProfile1D averaged_profile(const BaselineDesign& design, const Grid1D& grid) {
  if (!(design.V > 0.0 && design.V < 1.0)) throw InvalidProfile("area fraction V must lie in (0, 1)");
  MaterialProfile1D p;
  p.grid = grid;
  p.a = design.a;
  p.b = design.b;
  p.values.resize(grid.n_cells());
  const double sv = std::sqrt(design.V);
  for (int e = 0; e < grid.n_cells(); ++e) {
    const double t = grid.midpoint(e);
    double v = design.a;
    switch (design.kind) {
      case BaselineKind::I: v = t < design.V ? design.b : design.a; break;
      case BaselineKind::II: v = design.V * design.b + (1.0 - design.V) * design.a; break;
      case BaselineKind::III: v = t < sv ? sv * design.b + (1.0 - sv) * design.a : design.a; break;
    }
    p.values[e] = v;
  }
  return p;
}

DesignComparison compare_designs(double V, const std::vector<double>& loads, double a, double b,
                                 const Grid1D& grid, int threads) {
  if (!(V > 0.0 && V < 1.0)) throw InvalidProfile("area fraction V must lie in (0, 1)");
  std::array<MaterialProfile1D, 3> profiles = {
      averaged_profile({BaselineKind::I, V, a, b}, grid),
      averaged_profile({BaselineKind::II, V, a, b}, grid),
      averaged_profile({BaselineKind::III, V, a, b}, grid),
  };
  DesignComparison out;
  out.rows.resize(loads.size());
  auto work = [&](std::size_t i) {
    DesignComparisonRow& row = out.rows[i];
    row.load = loads[i];
    LoadSpec1D load{loads[i], {}};
    for (int d = 0; d < 3; ++d) row.compliance[d] = compliance_1d(solve_state_1d(profiles[d], load), load);
    row.best = 0;
    for (int d = 1; d < 3; ++d)
      if (row.compliance[d] < row.compliance[row.best]) row.best = d;
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(loads.size())));
  if (nt == 1) {
    for (std::size_t i = 0; i < loads.size(); ++i) work(i);
  } else {
    std::vector<std::exception_ptr> errors(nt);
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < loads.size(); i += nt) work(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const auto& lo = out.rows[i - 1];
    const auto& hi = out.rows[i];
    const bool all_zero = lo.compliance[lo.best] == 0.0 || hi.compliance[hi.best] == 0.0;
    if (lo.best != hi.best && !all_zero) out.crossovers.push_back({lo.load, hi.load, lo.best, hi.best});
  }
  return out;
}

namespace {

double weighted_dot(const Grid1D& g, const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (int e = 0; e < g.n_cells(); ++e) s += g.h(e) * x[e] * y[e];
  return s;
}

// Evaluates cost and gradient of a design, warm-starting the state solve.
class CostEvaluator {
 public:
  CostEvaluator(const LoadSpec1D& load, double c_l, GradientConvention conv)
      : load_(load), c_l_(c_l), conv_(conv) {}

  double cost(const RelaxedDesign& d, PhaseSolution1D* state_out = nullptr) {
    Newton1DOptions opt;
    opt.tol = 1e-12;
    if (!warm_.empty() && warm_.size() == d.theta.size() + 1) opt.initial_guess = warm_;
    PhaseSolution1D s = solve_state_1d(d.profile(), load_, opt);
    const double J = compliance_1d(s, load_) + c_l_ * d.material();
    if (state_out) *state_out = std::move(s);
    return J;
  }

  void accept(const PhaseSolution1D& s) { warm_ = s.K; }

  std::vector<double> gradient(const RelaxedDesign& d, const PhaseSolution1D& s, AdjointSolution1D* adj_out = nullptr) {
    AdjointSolution1D adj = solve_adjoint_1d(d.profile(), s, load_, 1e-9);
    std::vector<double> g = design_gradient_1d(d, s, adj, c_l_, conv_);
    if (adj_out) *adj_out = std::move(adj);
    return g;
  }

 private:
  LoadSpec1D load_;
  double c_l_;
  GradientConvention conv_;
  std::vector<double> warm_;
};

double projected_gradient_norm(const RelaxedDesign& d, const std::vector<double>& g) {
  double m = 0.0;
  for (std::size_t e = 0; e < g.size(); ++e) {
    const double t = std::clamp(d.theta[e] - g[e], 0.0, 1.0);
    m = std::max(m, std::abs(t - d.theta[e]));
  }
  return m;
}

}  // namespace

OptimizationResult1D optimize_projected_gradient(const RelaxedDesign& init, const LoadSpec1D& load,
                                                 double c_l, const ProjectedGradientOptions& options) {
  init.validate();
  const Grid1D& grid = init.grid;
  CostEvaluator ev(load, c_l, options.convention);
  RelaxedDesign x = init;
  PhaseSolution1D state;
  double J = ev.cost(x, &state);
  ev.accept(state);
  std::vector<double> g = ev.gradient(x, state);

  OptimizationResult1D res;
  res.path = "projected_gradient";
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  double step = gmax > 0.0 ? 0.1 / gmax : 1.0;
  int it = 0;
  double pg = projected_gradient_norm(x, g);
  for (; it < options.max_iters && pg > options.tol; ++it) {
    RelaxedDesign trial = x;
    PhaseSolution1D trial_state;
    double J_trial = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t e = 0; e < g.size(); ++e) trial.theta[e] = std::clamp(x.theta[e] - step * g[e], 0.0, 1.0);
      std::vector<double> d(g.size());
      for (std::size_t e = 0; e < g.size(); ++e) d[e] = trial.theta[e] - x.theta[e];
      const double slope = weighted_dot(grid, g, d);
      J_trial = ev.cost(trial, &trial_state);
      if (J_trial <= J + 1e-4 * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ev.accept(trial_state);
    std::vector<double> g_new = ev.gradient(trial, trial_state);
    std::vector<double> dx(g.size()), dg(g.size());
    for (std::size_t e = 0; e < g.size(); ++e) {
      dx[e] = trial.theta[e] - x.theta[e];
      dg[e] = g_new[e] - g[e];
    }
    const double sy = weighted_dot(grid, dx, dg);
    const double ss = weighted_dot(grid, dx, dx);
    // Barzilai-Borwein step in the cell-length weighted inner product.
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : std::min(step * 4.0, 1e12);
    x = std::move(trial);
    J = J_trial;
    state = std::move(trial_state);
    g = std::move(g_new);
    pg = projected_gradient_norm(x, g);
  }
  res.design = x;
  res.cost = J;
  res.iterations = it;
  res.stationarity = pg;
  res.converged = pg <= options.tol;
  return res;
}

OptimizationResult1D optimize_fixed_point(const LoadSpec1D& load, double c_l, double a, double b,
                                          const Grid1D& grid, const FixedPointOptions& options) {
  if (!(c_l > 0.0)) throw InvalidProfile("fixed-point iteration needs c_l > 0");
  RelaxedDesign x = RelaxedDesign::constant(grid, 0.5, a, b);
  if (options.init_theta) x.theta = *options.init_theta;
  x.validate();
  const double ce = effective_cl(c_l, a, b, options.convention);
  CostEvaluator ev(load, c_l, options.convention);

  PhaseSolution1D state;
  double J = ev.cost(x, &state);
  ev.accept(state);
  double omega = options.relaxation;

  OptimizationResult1D res;
  res.path = "fixed_point";
  RelaxedDesign best = x;
  double best_kkt = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iters; ++it) {
    const MaterialProfile1D prof = x.profile();
    AdjointSolution1D adj = solve_adjoint_1d(prof, state, load, 1e-9);
    const double kkt = kkt_residual_1d(x, state, adj, c_l, options.convention);
    if (kkt < best_kkt) {
      best_kkt = kkt;
      best = x;
    }
    if (kkt <= options.tol) {
      res.converged = true;
      break;
    }
    const std::vector<double> kp = cell_kp(prof, state, adj);
    std::vector<double> target(kp.size());
    for (std::size_t e = 0; e < kp.size(); ++e) {
      const double Bn = std::clamp(std::sqrt(std::max(kp[e], 0.0) / ce), a, b);
      target[e] = std::clamp((Bn - a) / (b - a), 0.0, 1.0);
    }
    bool accepted = false;
    while (omega >= 1e-8) {
      RelaxedDesign trial = x;
      for (std::size_t e = 0; e < kp.size(); ++e) {
        double t = (1.0 - omega) * x.theta[e] + omega * target[e];
        if (target[e] == 0.0 && t < 1e-10) t = 0.0;
        if (target[e] == 1.0 && t > 1.0 - 1e-10) t = 1.0;
        trial.theta[e] = t;
      }
      PhaseSolution1D ts;
      const double Jt = ev.cost(trial, &ts);
      if (Jt <= J + 1e-13 * std::max(1.0, std::abs(J))) {
        x = std::move(trial);
        state = std::move(ts);
        ev.accept(state);
        J = Jt;
        accepted = true;
        break;
      }
      omega *= 0.5;
    }
    if (!accepted) break;
  }

  if (res.converged) {
    res.design = x;
    res.cost = J;
    res.iterations = it;
    res.stationarity = best_kkt;
    return res;
  }
  if (!options.fallback) {
    res.design = best;
    res.cost = ev.cost(best);
    res.iterations = it;
    res.stationarity = best_kkt;
    return res;
  }
  ProjectedGradientOptions pgo;
  pgo.convention = options.convention;
  OptimizationResult1D pg = optimize_projected_gradient(best, load, c_l, pgo);
  pg.iterations += it;
  const PhaseSolution1D s = solve_state_1d(pg.design.profile(), load, 1e-12);
  const AdjointSolution1D adj = solve_adjoint_1d(pg.design.profile(), s, load, 1e-9);
  pg.stationarity = kkt_residual_1d(pg.design, s, adj, c_l, options.convention);
  pg.converged = pg.stationarity <= options.tol;
  return pg;
}

DesignStructure extract_structure(const RelaxedDesign& design, double tol_plateau) {
  design.validate();
  const Grid1D& g = design.grid;
  const int n = g.n_cells();
  DesignStructure s;
  const auto& th = design.theta;
  if (std::all_of(th.begin(), th.end(), [&](double t) { return t <= tol_plateau; })) {
    s.all_soft = true;
    s.t0 = 0.0;
    s.t1 = 0.0;
    return s;
  }
  if (std::all_of(th.begin(), th.end(), [&](double t) { return t >= 1.0 - tol_plateau; })) {
    s.all_hard = true;
    s.t0 = 1.0;
    s.t1 = 1.0;
    return s;
  }
  int i0 = 0;
  while (i0 < n && th[i0] >= 1.0 - tol_plateau) ++i0;
  int i1 = n - 1;
  while (i1 >= 0 && th[i1] <= tol_plateau) --i1;
  if (i1 == n - 1) throw MalformedProfile("design has no soft suffix");
  s.t0 = g.nodes[i0];
  s.t1 = g.nodes[i1 + 1];
  double viol = 0.0;
  for (int e = std::max(i0 - 1, 0); e + 1 <= std::min(i1 + 1, n - 1); ++e) viol = std::max(viol, th[e + 1] - th[e]);
  s.monotone_violation = viol;
  return s;
}

double closed_form_threshold(const LoadSpec1D& load, double a, double b, const Grid1D& grid,
                             GradientConvention convention) {
  if (load.magnitude == 0.0) return 0.0;
  const MaterialProfile1D prof = MaterialProfile1D::constant(grid, a, a, b);
  const PhaseSolution1D s = solve_state_1d(prof, load, 1e-12);
  const AdjointSolution1D adj = solve_adjoint_1d(prof, s, load, 1e-9);
  const std::vector<double> kp = cell_kp(prof, s, adj);
  const double m = *std::max_element(kp.begin(), kp.end());
  const double factor = convention == GradientConvention::FiniteDifference ? b - a : 1.0;
  return std::max(m, 0.0) / (a * a) * factor;
}

double threshold_cl(const LoadSpec1D& load, double a, double b, const Grid1D& grid,
                    const ThresholdOptions& options) {
  if (load.magnitude == 0.0) return 0.0;
  FixedPointOptions fpo;
  fpo.convention = options.convention;
  fpo.init_theta = std::vector<double>(grid.n_cells(), 0.0);
  fpo.tol = 1e-9;
  fpo.max_iters = 4000;
  auto all_soft = [&](double c_l) {
    const OptimizationResult1D r = optimize_fixed_point(load, c_l, a, b, grid, fpo);
    return *std::max_element(r.design.theta.begin(), r.design.theta.end()) <= options.zero_tol;
  };
  double hi = std::max(closed_form_threshold(load, a, b, grid, options.convention), 1e-8);
  while (!all_soft(hi)) hi *= 2.0;
  double lo = hi * 0.5;
  while (lo > 1e-14 && all_soft(lo)) {
    hi = lo;
    lo *= 0.5;
  }
  while (hi - lo > options.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (all_soft(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace plateopt
