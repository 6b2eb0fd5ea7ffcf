#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "plateopt/io.hpp"

namespace plateopt {

// Closest point in the mass-lumped metric of [-1, 1]^n intersected with
// {sum_j m_j (v_j + 1) / 2 = volume}: v_j = clamp(y_j - tau). Returns tau.
double project_box_area(const std::vector<double>& mass, double volume, std::vector<double>& v);

struct DesignHistoryRow {
  int iteration = 0;
  double objective = 0.0;
  double compliance = 0.0;
  double area_residual = 0.0;
  double step = 0.0;
  double multiplier = 0.0;
};

void write_design_history_csv(std::ostream& os, const std::vector<DesignHistoryRow>& history);

struct DescentOptions {
  int max_iters = 100;
  double objective_tol = 1e-7;  // relative decrease over three accepted steps
  double step_tol = 1e-7;       // on max |dv|
  double armijo = 1e-4;
  int max_backtracks = 20;
  double initial_step = 0.2;    // max |dv| of the first trial step
};

template <class State>
struct DesignResult {
  std::vector<double> v;
  State state;
  double objective = 0.0;
  double compliance = 0.0;
  bool converged = false;
  std::vector<DesignHistoryRow> history;

  void write_history_csv(std::ostream& os) const { write_design_history_csv(os, history); }
};

template <class State>
struct DesignSample {
  State state;
  double objective = 0.0;
  double compliance = 0.0;
  bool ok = false;
};

// Projected gradient descent in the lumped-mass metric with Barzilai-Borwein
// steps and Armijo backtracking. evaluate(v, warm) -> DesignSample<State>,
// gradient(v, state) -> nodal derivative of the objective.
template <class State, class Evaluate, class Gradient>
DesignResult<State> projected_descent(const std::vector<double>& mass, double volume, std::vector<double> v,
                                      const DescentOptions& options, const State& warm, Evaluate&& evaluate,
                                      Gradient&& gradient, bool* initial_ok = nullptr) {
  const int n = static_cast<int>(v.size());
  auto area_residual = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += mass[j] * 0.5 * (x[j] + 1.0);
    return s - volume;
  };
  for (double& x : v) x = std::clamp(x, -1.0, 1.0);
  double tau = project_box_area(mass, volume, v);

  DesignResult<State> res;
  DesignSample<State> cur = evaluate(v, warm);
  if (initial_ok) *initial_ok = cur.ok;
  if (!cur.ok) {
    res.v = std::move(v);
    res.state = std::move(cur.state);
    return res;
  }
  std::vector<double> g = gradient(v, cur.state);
  res.history.push_back({0, cur.objective, cur.compliance, area_residual(v), 0.0, tau});

  double gmax = 0.0;
  for (int j = 0; j < n; ++j) gmax = std::max(gmax, std::abs(g[j] / mass[j]));
  double alpha = gmax > 0.0 ? options.initial_step / gmax : 1.0;
  int small_decrease = 0;

  for (int it = 1; it <= options.max_iters; ++it) {
    bool accepted = false;
    std::vector<double> vn(n), dv(n);
    DesignSample<State> next;
    double step = 0.0;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      for (int j = 0; j < n; ++j) vn[j] = v[j] - alpha * g[j] / mass[j];
      tau = project_box_area(mass, volume, vn);
      double slope = 0.0;
      step = 0.0;
      for (int j = 0; j < n; ++j) {
        dv[j] = vn[j] - v[j];
        slope += g[j] * dv[j];
        step = std::max(step, std::abs(dv[j]));
      }
      if (step < options.step_tol) break;
      next = evaluate(vn, cur.state);
      if (next.ok && next.objective <= cur.objective + options.armijo * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.converged = step < options.step_tol;
      break;
    }
    const std::vector<double> gn = gradient(vn, next.state);
    double sy = 0.0, sms = 0.0;
    for (int j = 0; j < n; ++j) {
      sy += dv[j] * (gn[j] - g[j]);
      sms += mass[j] * dv[j] * dv[j];
    }
    alpha = sy > 0.0 ? sms / sy : 2.0 * alpha;
    const double decrease = cur.objective - next.objective;
    v = vn;
    g = gn;
    cur = std::move(next);
    res.history.push_back({it, cur.objective, cur.compliance, area_residual(v), step, tau});
    small_decrease = decrease <= options.objective_tol * std::abs(cur.objective) ? small_decrease + 1 : 0;
    if (small_decrease >= 3 || step < options.step_tol) {
      res.converged = true;
      break;
    }
  }
  res.v = std::move(v);
  res.state = std::move(cur.state);
  res.objective = cur.objective;
  res.compliance = cur.compliance;
  return res;
}

}  // namespace plateopt
