#include "plateopt/adjoint1d.hpp"

#include <algorithm>
#include <cmath>

#include "plateopt/errors.hpp"

namespace plateopt {

namespace {

double interp_crossing(double t0, double t1, double f0, double f1) {
  if (f0 == f1) return t1;
  return t0 + (t1 - t0) * f0 / (f0 - f1);
}

}  // namespace

AdjointSolution1D solve_adjoint_1d(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                                   const LoadSpec1D& load, double tol) {
  profile.validate();
  if (!same_grid(profile.grid, state.grid)) throw InvalidProfile("state and profile grids differ");
  const Grid1D& g = profile.grid;
  const int n = g.n_cells();
  const double c = load.magnitude;

  Tridiagonal A;
  assemble_state_system(profile, load, state.K, nullptr, &A);

  std::vector<double> rhs(n, 0.0);
  for (int e = 0; e < n; ++e) {
    const double h = g.h(e);
    for (int q = 0; q < 3; ++q) {
      const double s = kGauss3Points[q];
      const double Kq = (1.0 - s) * state.K[e] + s * state.K[e + 1];
      const double v = -kGauss3Weights[q] * h * load.arm_at(g, e, s) * std::cos(Kq);
      if (e > 0) rhs[e - 1] += v * (1.0 - s);
      rhs[e] += v * s;
    }
  }

  AdjointSolution1D out;
  out.grid = g;
  const std::vector<double> x = solve_tridiagonal(A, rhs);
  out.P.assign(n + 1, 0.0);
  for (int i = 0; i < n; ++i) out.P[i + 1] = x[i];

  const std::vector<double> Ax = A.apply(x);
  double r2 = 0.0;
  for (int i = 0; i < n; ++i) r2 += (Ax[i] - rhs[i]) * (Ax[i] - rhs[i]);
  out.residual_norm = std::sqrt(r2);
  double scale = 0.0;
  for (double v : rhs) scale += v * v;
  if (!(out.residual_norm <= tol * std::max(1.0, std::sqrt(scale))))
    throw SingularSystem("adjoint solve residual above tolerance");

  out.p_cell.resize(n);
  for (int e = 0; e < n; ++e) out.p_cell[e] = profile.values[e] * (out.P[e + 1] - out.P[e]) / g.h(e);

  // Nodal fluxes from the strong form, integrated from the free end.
  out.p.assign(n + 1, 0.0);
  out.k.assign(n + 1, 0.0);
  for (int e = n - 1; e >= 0; --e) {
    const double h = g.h(e);
    double ip = 0.0, ik = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double s = kGauss3Points[q];
      const double Kq = (1.0 - s) * state.K[e] + s * state.K[e + 1];
      const double Pq = (1.0 - s) * out.P[e] + s * out.P[e + 1];
      const double m = load.arm_at(g, e, s);
      ip += kGauss3Weights[q] * h * (m * std::cos(Kq) - c * m * Pq * std::sin(Kq));
      ik += kGauss3Weights[q] * h * c * m * std::cos(Kq);
    }
    out.p[e] = out.p[e + 1] - ip;
    out.k[e] = out.k[e + 1] - ik;
  }

  out.tau = 1.0;
  out.tau0.reset();
  if (c > 0.0) {
    double f_prev = 0.0;
    bool have_prev = false;
    for (int i = 1; i <= n; ++i) {
      if (!(state.K[i] < 0.0)) continue;
      const double f = c * out.P[i] - std::cos(state.K[i]) / std::sin(state.K[i]);
      if (have_prev && f <= 0.0 && f_prev > 0.0) {
        out.tau = interp_crossing(g.nodes[i - 1], g.nodes[i], f_prev, f);
        break;
      }
      if (!have_prev && f <= 0.0) {
        out.tau = g.nodes[i];
        break;
      }
      f_prev = f;
      have_prev = true;
    }
    if (out.tau < 1.0) {
      for (int i = 1; i <= n && g.nodes[i - 1] < out.tau; ++i) {
        if (out.p[i - 1] < 0.0 && out.p[i] >= 0.0) {
          out.tau0 = interp_crossing(g.nodes[i - 1], g.nodes[i], out.p[i - 1], out.p[i]);
          break;
        }
      }
    }
  }
  return out;
}

std::vector<double> design_gradient_1d(const RelaxedDesign& design, const PhaseSolution1D& state,
                                       const AdjointSolution1D& adjoint, double c_l,
                                       GradientConvention convention) {
  const Grid1D& g = design.grid;
  const int n = g.n_cells();
  const double factor = convention == GradientConvention::FiniteDifference ? design.b - design.a : 1.0;
  std::vector<double> grad(n);
  for (int e = 0; e < n; ++e) {
    const double h = g.h(e);
    const double dK = (state.K[e + 1] - state.K[e]) / h;
    const double dP = (adjoint.P[e + 1] - adjoint.P[e]) / h;
    grad[e] = -factor * dK * dP + c_l;
  }
  return grad;
}

std::vector<double> cell_kp(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                            const AdjointSolution1D& adjoint) {
  const Grid1D& g = profile.grid;
  std::vector<double> kp(g.n_cells());
  for (int e = 0; e < g.n_cells(); ++e) {
    const double h = g.h(e);
    const double B = profile.values[e];
    kp[e] = B * B * (state.K[e + 1] - state.K[e]) / h * (adjoint.P[e + 1] - adjoint.P[e]) / h;
  }
  return kp;
}

double effective_cl(double c_l, double a, double b, GradientConvention convention) {
  return convention == GradientConvention::FiniteDifference ? c_l / (b - a) : c_l;
}

double kkt_residual_1d(const RelaxedDesign& design, const PhaseSolution1D& state,
                       const AdjointSolution1D& adjoint, double c_l, GradientConvention convention,
                       double bound_tol) {
  const MaterialProfile1D prof = design.profile();
  const std::vector<double> kp = cell_kp(prof, state, adjoint);
  const double ce = effective_cl(c_l, design.a, design.b, convention);
  const double a2 = design.a * design.a, b2 = design.b * design.b;
  double worst = 0.0;
  for (std::size_t e = 0; e < kp.size(); ++e) {
    const double th = design.theta[e];
    double v;
    if (th <= bound_tol) v = std::max(0.0, kp[e] - ce * a2);
    else if (th >= 1.0 - bound_tol) v = std::max(0.0, ce * b2 - kp[e]);
    else v = std::abs(kp[e] - ce * prof.values[e] * prof.values[e]);
    worst = std::max(worst, v);
  }
  return worst;
}

AdjointPairing adjoint_pairing(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                               const AdjointSolution1D& adjoint, const LoadSpec1D& load,
                               const std::vector<double>& beta) {
  const Grid1D& g = profile.grid;
  const int n = g.n_cells();
  // s_i = sum_e beta_e K'_e phi_i' h_e, the derivative of the residual in direction beta.
  std::vector<double> s(n, 0.0);
  for (int e = 0; e < n; ++e) {
    const double dK = state.K[e + 1] - state.K[e];
    const double v = beta[e] * dK / g.h(e);
    if (e > 0) s[e - 1] -= v;
    s[e] += v;
  }
  AdjointPairing out{};
  double via_adj = 0.0;
  for (int i = 0; i < n; ++i) via_adj += adjoint.P[i + 1] * s[i];
  out.via_adjoint = via_adj;

  Tridiagonal A;
  assemble_state_system(profile, load, state.K, nullptr, &A);
  std::vector<double> minus_s(n);
  for (int i = 0; i < n; ++i) minus_s[i] = -s[i];
  const std::vector<double> Kdot = solve_tridiagonal(A, minus_s);
  double dJ = 0.0;
  for (int e = 0; e < n; ++e) {
    const double h = g.h(e);
    for (int q = 0; q < 3; ++q) {
      const double t = kGauss3Points[q];
      const double Kq = (1.0 - t) * state.K[e] + t * state.K[e + 1];
      const double Kdq = (e > 0 ? (1.0 - t) * Kdot[e - 1] : 0.0) + t * Kdot[e];
      dJ -= kGauss3Weights[q] * h * load.arm_at(g, e, t) * std::cos(Kq) * Kdq;
    }
  }
  out.via_linearized_state = -dJ;
  return out;
}

}  // namespace plateopt
