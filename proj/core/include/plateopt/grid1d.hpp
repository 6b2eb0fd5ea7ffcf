#pragma once

#include <array>
#include <optional>
#include <vector>

namespace plateopt {

struct Grid1D {
  std::vector<double> nodes;

  static Grid1D uniform(int n_cells);

  int n_cells() const { return static_cast<int>(nodes.size()) - 1; }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
  double h(int cell) const { return nodes[cell + 1] - nodes[cell]; }
  double midpoint(int cell) const { return 0.5 * (nodes[cell] + nodes[cell + 1]); }

  // Throws InvalidProfile unless 0 = t_0 < t_1 < ... < t_n = 1.
  void validate() const;
};

bool same_grid(const Grid1D& x, const Grid1D& y);

// Per-cell averaged hardness on a 1D grid.
struct MaterialProfile1D {
  Grid1D grid;
  std::vector<double> values;
  double a = 1.0;
  double b = 100.0;

  static MaterialProfile1D constant(const Grid1D& grid, double value, double a, double b);
  void validate() const;
};

// Vertical load of magnitude c. The moment arm defaults to (1 - t); a nodal
// arm profile replaces it when given.
struct LoadSpec1D {
  double magnitude = 0.0;
  std::vector<double> arm;

  double arm_at(const Grid1D& grid, int cell, double s) const;
  void validate(const Grid1D& grid) const;
};

struct PhaseSolution1D {
  Grid1D grid;
  std::vector<double> K;
  bool converged = false;
  int newton_iters = 0;
  double residual_norm = 0.0;

  double slope(int cell) const { return (K[cell + 1] - K[cell]) / grid.h(cell); }
};

struct ProfileCurve {
  std::vector<std::array<double, 2>> points;
  std::vector<std::array<double, 2>> normals;
  std::vector<std::array<double, 2>> tangents;

  // Trapezoidal length of |u'| along the parameter grid.
  double length(const Grid1D& grid) const;
};

struct Newton1DOptions {
  double tol = 1e-10;
  int max_iters = 200;
  // Warm start; continuation from zero is used if Newton fails from here.
  std::optional<std::vector<double>> initial_guess;
};

// Three-point Gauss rule on the unit interval.
inline constexpr std::array<double, 3> kGauss3Points = {0.11270166537925831, 0.5, 0.8872983346207417};
inline constexpr std::array<double, 3> kGauss3Weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

struct Tridiagonal {
  std::vector<double> lower, diag, upper;
  explicit Tridiagonal(int n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
  int size() const { return static_cast<int>(diag.size()); }
  std::vector<double> apply(const std::vector<double>& x) const;
};

// Gaussian elimination without pivoting; throws SingularSystem on a vanishing pivot.
std::vector<double> solve_tridiagonal(const Tridiagonal& m, const std::vector<double>& rhs);

// Residual and Jacobian of the nodal Galerkin system for the unknowns K_1..K_n.
// Entry i of the returned vectors refers to node i+1.
void assemble_state_system(const MaterialProfile1D& profile, const LoadSpec1D& load,
                           const std::vector<double>& K, std::vector<double>* residual,
                           Tridiagonal* jacobian);

PhaseSolution1D solve_state_1d(const MaterialProfile1D& profile, const LoadSpec1D& load,
                               const Newton1DOptions& options);
PhaseSolution1D solve_state_1d(const MaterialProfile1D& profile, const LoadSpec1D& load,
                               double tol = 1e-10);

ProfileCurve phase_to_curve(const PhaseSolution1D& sol);

// Integral of arm * |sin K| with the assembly quadrature.
double compliance_1d(const PhaseSolution1D& sol, const LoadSpec1D& load = {});

struct RelaxedDesign {
  Grid1D grid;
  std::vector<double> theta;
  double a = 1.0;
  double b = 100.0;

  static RelaxedDesign constant(const Grid1D& grid, double theta, double a, double b);
  MaterialProfile1D profile() const;
  double material() const;
  void validate() const;
};

double total_cost_1d(const RelaxedDesign& design, const LoadSpec1D& load, double c_l,
                     const Newton1DOptions& options = {});

}  // namespace plateopt
