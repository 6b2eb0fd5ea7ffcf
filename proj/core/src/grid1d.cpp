#include "plateopt/grid1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "plateopt/errors.hpp"

namespace plateopt {

Grid1D Grid1D::uniform(int n_cells) {
  if (n_cells < 1) throw InvalidProfile("grid needs at least one cell");
  Grid1D g;
  g.nodes.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) g.nodes[i] = static_cast<double>(i) / n_cells;
  g.nodes.back() = 1.0;
  return g;
}

void Grid1D::validate() const {
  if (nodes.size() < 2) throw InvalidProfile("grid needs at least one cell");
  if (nodes.front() != 0.0 || nodes.back() != 1.0) throw InvalidProfile("grid must span [0, 1] exactly");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw InvalidProfile("grid nodes must be strictly increasing");
}

bool same_grid(const Grid1D& x, const Grid1D& y) { return x.nodes == y.nodes; }

MaterialProfile1D MaterialProfile1D::constant(const Grid1D& grid, double value, double a, double b) {
  MaterialProfile1D p;
  p.grid = grid;
  p.values.assign(grid.n_cells(), value);
  p.a = a;
  p.b = b;
  return p;
}

void MaterialProfile1D::validate() const {
  grid.validate();
  if (!(a > 0.0)) throw InvalidProfile("soft hardness a must be positive");
  if (!(b > a)) throw InvalidProfile("hard hardness b must exceed a");
  if (static_cast<int>(values.size()) != grid.n_cells()) throw InvalidProfile("profile size does not match grid");
  const double slack = 1e-12 * b;
  for (std::size_t e = 0; e < values.size(); ++e) {
    if (!(values[e] >= a - slack && values[e] <= b + slack)) {
      std::ostringstream os;
      os << "hardness " << values[e] << " in cell " << e << " outside [" << a << ", " << b << "]";
      throw InvalidProfile(os.str());
    }
  }
}

double LoadSpec1D::arm_at(const Grid1D& grid, int cell, double s) const {
  if (arm.empty()) return 1.0 - (grid.nodes[cell] + s * grid.h(cell));
  return (1.0 - s) * arm[cell] + s * arm[cell + 1];
}

void LoadSpec1D::validate(const Grid1D& grid) const {
  if (!(magnitude >= 0.0)) throw InvalidProfile("load magnitude must be nonnegative");
  if (!arm.empty() && static_cast<int>(arm.size()) != grid.n_nodes())
    throw InvalidProfile("load arm profile must have one value per node");
}

std::vector<double> Tridiagonal::apply(const std::vector<double>& x) const {
  const int n = size();
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += lower[i] * x[i - 1];
    if (i + 1 < n) s += upper[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

std::vector<double> solve_tridiagonal(const Tridiagonal& m, const std::vector<double>& rhs) {
  const int n = m.size();
  std::vector<double> c(n), d(n);
  double scale = 0.0;
  for (double v : m.diag) scale = std::max(scale, std::abs(v));
  const double tiny = 1e-14 * std::max(scale, 1e-300);
  double piv = m.diag[0];
  if (std::abs(piv) <= tiny) throw SingularSystem("tridiagonal pivot vanished at row 0");
  c[0] = n > 1 ? m.upper[0] / piv : 0.0;
  d[0] = rhs[0] / piv;
  for (int i = 1; i < n; ++i) {
    piv = m.diag[i] - m.lower[i] * c[i - 1];
    if (std::abs(piv) <= tiny) throw SingularSystem("tridiagonal pivot vanished at row " + std::to_string(i));
    c[i] = i + 1 < n ? m.upper[i] / piv : 0.0;
    d[i] = (rhs[i] - m.lower[i] * d[i - 1]) / piv;
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

void assemble_state_system(const MaterialProfile1D& profile, const LoadSpec1D& load,
                           const std::vector<double>& K, std::vector<double>* residual,
                           Tridiagonal* jacobian) {
  const Grid1D& g = profile.grid;
  const int n = g.n_cells();
  const double c = load.magnitude;
  if (residual) residual->assign(n, 0.0);
  if (jacobian) *jacobian = Tridiagonal(n);

  // Global node j maps to row j-1; node 0 is eliminated by K(0) = 0.
  auto add_r = [&](int node, double v) {
    if (node > 0) (*residual)[node - 1] += v;
  };
  auto add_j = [&](int row_node, int col_node, double v) {
    if (row_node == 0 || col_node == 0) return;
    const int r = row_node - 1;
    if (col_node == row_node) jacobian->diag[r] += v;
    else if (col_node == row_node + 1) jacobian->upper[r] += v;
    else jacobian->lower[r] += v;
  };

  for (int e = 0; e < n; ++e) {
    const double h = g.h(e);
    const double B = profile.values[e];
    const double k = B / h;
    const double dK = K[e + 1] - K[e];
    if (residual) {
      add_r(e, -k * dK);
      add_r(e + 1, k * dK);
    }
    if (jacobian) {
      add_j(e, e, k);
      add_j(e, e + 1, -k);
      add_j(e + 1, e, -k);
      add_j(e + 1, e + 1, k);
    }
    if (c == 0.0) continue;
    for (int q = 0; q < 3; ++q) {
      const double s = kGauss3Points[q];
      const double wq = kGauss3Weights[q] * h * c * load.arm_at(g, e, s);
      const double phi0 = 1.0 - s, phi1 = s;
      const double Kq = phi0 * K[e] + phi1 * K[e + 1];
      if (residual) {
        const double cq = std::cos(Kq);
        add_r(e, wq * cq * phi0);
        add_r(e + 1, wq * cq * phi1);
      }
      if (jacobian) {
        const double sq = -std::sin(Kq) * wq;
        add_j(e, e, sq * phi0 * phi0);
        add_j(e, e + 1, sq * phi0 * phi1);
        add_j(e + 1, e, sq * phi1 * phi0);
        add_j(e + 1, e + 1, sq * phi1 * phi1);
      }
    }
  }
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct NewtonOutcome {
  bool ok = false;
  int iters = 0;
  double residual = 0.0;
};

// Size of the residual that rounding alone produces for the current iterate.
double roundoff_floor(const MaterialProfile1D& profile, const LoadSpec1D& load, const std::vector<double>& K) {
  double kmax = 0.0, stiff = 0.0;
  for (double v : K) kmax = std::max(kmax, std::abs(v));
  for (int e = 0; e < profile.grid.n_cells(); ++e) stiff = std::max(stiff, profile.values[e] / profile.grid.h(e));
  const double eps = std::numeric_limits<double>::epsilon();
  return 16.0 * eps * std::sqrt(static_cast<double>(K.size())) * (stiff * kmax + load.magnitude);
}

// Damped Newton at a fixed load; K holds nodal values including K(0) = 0.
NewtonOutcome newton_at_load(const MaterialProfile1D& profile, const LoadSpec1D& load,
                             std::vector<double>& K, double requested_tol, int max_iters) {
  NewtonOutcome out;
  double tol = std::max(requested_tol, roundoff_floor(profile, load, K));
  std::vector<double> R, R_trial, K_trial;
  Tridiagonal J;
  assemble_state_system(profile, load, K, &R, &J);
  double r = norm2(R);
  int polish = 0;
  for (int it = 0; it < max_iters; ++it) {
    if (r <= tol) {
      if (polish >= 2) break;
      ++polish;
    }
    std::vector<double> rhs(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) rhs[i] = -R[i];
    std::vector<double> d;
    try {
      d = solve_tridiagonal(J, rhs);
    } catch (const SingularSystem&) {
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-10) {
      K_trial = K;
      for (std::size_t i = 0; i < d.size(); ++i) K_trial[i + 1] += alpha * d[i];
      assemble_state_system(profile, load, K_trial, &R_trial, nullptr);
      const double rt = norm2(R_trial);
      if (std::isfinite(rt) && (rt < (1.0 - 1e-4 * alpha) * r || (r <= tol && rt <= r))) {
        accepted = true;
        break;
      }
      if (r <= tol) break;
      alpha *= 0.5;
    }
    ++out.iters;
    if (!accepted) break;
    K.swap(K_trial);
    assemble_state_system(profile, load, K, &R, &J);
    r = norm2(R);
    tol = std::max(requested_tol, roundoff_floor(profile, load, K));
  }
  out.residual = r;
  out.ok = r <= tol;
  return out;
}

}  // namespace

PhaseSolution1D solve_state_1d(const MaterialProfile1D& profile, const LoadSpec1D& load,
                               const Newton1DOptions& options) {
  profile.validate();
  load.validate(profile.grid);
  if (!(options.tol > 0.0)) throw InvalidProfile("tolerance must be positive");
  const int n = profile.grid.n_cells();
  PhaseSolution1D sol;
  sol.grid = profile.grid;
  sol.K.assign(n + 1, 0.0);
  const double c = load.magnitude;
  if (c == 0.0) {
    sol.converged = true;
    return sol;
  }

  int total_iters = 0;
  if (options.initial_guess && static_cast<int>(options.initial_guess->size()) == n + 1) {
    std::vector<double> K = *options.initial_guess;
    K[0] = 0.0;
    NewtonOutcome o = newton_at_load(profile, load, K, options.tol, options.max_iters);
    total_iters += o.iters;
    if (o.ok) {
      sol.K = std::move(K);
      sol.converged = true;
      sol.newton_iters = total_iters;
      sol.residual_norm = o.residual;
      return sol;
    }
  }

  // Continuation in the load, doubling from a level where c / min(B) <= 1.
  double bmin = *std::min_element(profile.values.begin(), profile.values.end());
  double c_done = 0.0;
  double c_next = std::min(c, bmin);
  std::vector<double> K(n + 1, 0.0);
  const double stage_tol = std::max(options.tol, 1e-8);
  int refinements = 0;
  LoadSpec1D stage = load;
  while (true) {
    const bool last = c_next >= c;
    stage.magnitude = last ? c : c_next;
    std::vector<double> K_try = K;
    NewtonOutcome o = newton_at_load(profile, stage, K_try, last ? options.tol : stage_tol, options.max_iters);
    total_iters += o.iters;
    if (o.ok) {
      K.swap(K_try);
      c_done = stage.magnitude;
      if (last) {
        sol.K = std::move(K);
        sol.converged = true;
        sol.newton_iters = total_iters;
        sol.residual_norm = o.residual;
        return sol;
      }
      c_next = std::min(c, 2.0 * c_done);
      continue;
    }
    if (++refinements > 60) {
      sol.K = std::move(K);
      sol.newton_iters = total_iters;
      sol.residual_norm = o.residual;
      throw NonConvergence("1D Newton continuation failed at load " + std::to_string(stage.magnitude));
    }
    c_next = c_done + 0.5 * (stage.magnitude - c_done);
  }
}

PhaseSolution1D solve_state_1d(const MaterialProfile1D& profile, const LoadSpec1D& load, double tol) {
  Newton1DOptions o;
  o.tol = tol;
  return solve_state_1d(profile, load, o);
}

ProfileCurve phase_to_curve(const PhaseSolution1D& sol) {
  const Grid1D& g = sol.grid;
  ProfileCurve c;
  const int nn = g.n_nodes();
  c.points.resize(nn);
  c.normals.resize(nn);
  c.tangents.resize(nn);
  c.points[0] = {0.0, 0.0};
  for (int i = 0; i < nn; ++i) {
    c.tangents[i] = {std::cos(sol.K[i]), std::sin(sol.K[i])};
    c.normals[i] = {-std::sin(sol.K[i]), std::cos(sol.K[i])};
  }
  for (int e = 0; e + 1 < nn; ++e) {
    const double h = g.h(e);
    c.points[e + 1][0] = c.points[e][0] + 0.5 * h * (std::cos(sol.K[e]) + std::cos(sol.K[e + 1]));
    c.points[e + 1][1] = c.points[e][1] + 0.5 * h * (std::sin(sol.K[e]) + std::sin(sol.K[e + 1]));
  }
  return c;
}

double ProfileCurve::length(const Grid1D& grid) const {
  double s = 0.0;
  for (int e = 0; e < grid.n_cells(); ++e) {
    const double l0 = std::hypot(tangents[e][0], tangents[e][1]);
    const double l1 = std::hypot(tangents[e + 1][0], tangents[e + 1][1]);
    s += 0.5 * grid.h(e) * (l0 + l1);
  }
  return s;
}

double compliance_1d(const PhaseSolution1D& sol, const LoadSpec1D& load) {
  const Grid1D& g = sol.grid;
  for (std::size_t i = 0; i < sol.K.size(); ++i) {
    const double k = sol.K[i];
    if (!(k > -std::numbers::pi && k <= 0.0)) {
      std::ostringstream os;
      os << "phase " << k << " at node " << i << " outside (-pi, 0]";
      throw DomainError(os.str());
    }
  }
  double s = 0.0;
  for (int e = 0; e < g.n_cells(); ++e) {
    const double h = g.h(e);
    for (int q = 0; q < 3; ++q) {
      const double t = kGauss3Points[q];
      const double Kq = (1.0 - t) * sol.K[e] + t * sol.K[e + 1];
      s += kGauss3Weights[q] * h * load.arm_at(g, e, t) * std::abs(std::sin(Kq));
    }
  }
  return s;
}

RelaxedDesign RelaxedDesign::constant(const Grid1D& grid, double theta, double a, double b) {
  RelaxedDesign d;
  d.grid = grid;
  d.theta.assign(grid.n_cells(), theta);
  d.a = a;
  d.b = b;
  return d;
}

void RelaxedDesign::validate() const {
  grid.validate();
  if (static_cast<int>(theta.size()) != grid.n_cells()) throw InvalidProfile("design size does not match grid");
  if (!(a > 0.0) || !(b > a)) throw InvalidProfile("invalid hardness bounds");
  for (double t : theta)
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidProfile("design value outside [0, 1]");
}

MaterialProfile1D RelaxedDesign::profile() const {
  MaterialProfile1D p;
  p.grid = grid;
  p.a = a;
  p.b = b;
  p.values.resize(theta.size());
  for (std::size_t e = 0; e < theta.size(); ++e) p.values[e] = (1.0 - theta[e]) * a + theta[e] * b;
  return p;
}

double RelaxedDesign::material() const {
  double s = 0.0;
  for (int e = 0; e < grid.n_cells(); ++e) s += theta[e] * grid.h(e);
  return s;
}

double total_cost_1d(const RelaxedDesign& design, const LoadSpec1D& load, double c_l,
                     const Newton1DOptions& options) {
  if (!(c_l >= 0.0)) throw InvalidProfile("material cost c_l must be nonnegative");
  design.validate();
  const PhaseSolution1D sol = solve_state_1d(design.profile(), load, options);
  return compliance_1d(sol, load) + c_l * design.material();
}

}  // namespace plateopt
