#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "plateopt/dkt.hpp"
#include "plateopt/mesh2d.hpp"
#include "plateopt/phasefield.hpp"
#include "plateopt/projected_descent.hpp"

namespace plateopt {

enum class ChartKind { Flat, Hemisphere, HalfCylinder };

const char* chart_name(ChartKind kind);

// Chart value with first and second derivatives.
struct ChartPoint {
  Eigen::Vector3d x;
  Eigen::Matrix<double, 3, 2> D;
  Eigen::Vector3d d11, d12, d22;
};

// Flat: (x1, x2, 0). Hemisphere: inverse stereographic projection of the
// unit disc. HalfCylinder: ((1 - cos pi x1) / 2pi, x2, sin(pi x1) / 2pi).
ChartPoint chart_eval(ChartKind kind, const Eigen::Vector2d& xi);

struct FundamentalForms {
  Eigen::Matrix2d g;
  Eigen::Matrix2d A;  // second derivatives against the unit normal D1 x D2
};

// Throws DegenerateMetric if det g <= 0.
FundamentalForms fundamental_forms(const ChartPoint& p);
inline FundamentalForms fundamental_forms(ChartKind kind, const Eigen::Vector2d& xi) {
  return fundamental_forms(chart_eval(kind, xi));
}

// Exact area of the reference surface: 1, 2 pi and 1/2.
double chart_area(ChartKind kind);

// Chart domain meshes with the clamped boundaries used for each surface:
// flat (0,1)^2 clamped on the whole boundary, the unit disc clamped where the
// hemisphere has p3 = 0 and |p1| >= 0.9, and (0,1)^2 clamped at x2 in {0, 1}
// for the half cylinder.
TriMesh chart_mesh(ChartKind kind, int n);
void tag_chart_dirichlet(TriMesh& mesh, ChartKind kind);

// Nodal DKT interpolant of the chart (values and exact gradients).
DktField chart_interpolant(const TriMesh& mesh, ChartKind kind);

enum class BendingNorm { Squared, Unsquared };

// Reference metric data at the quadrature points, computed from the DKT
// interpolant of the chart with the same discrete operators as the deformed
// surface, so that the interpolant itself is exactly stress free.
class ShellGeometry {
 public:
  ShellGeometry(TriMesh mesh, ChartKind chart);

  struct Point {
    Eigen::Matrix2d G, Gi, A;
    double sqrt_det = 0.0;
  };

  const TriMesh& mesh() const { return mesh_; }
  ChartKind chart() const { return chart_; }
  const DktField& reference() const { return reference_; }
  const ElementTable& table(int t) const { return tables_[t]; }
  const Point& point(int t, int q) const { return points_[static_cast<std::size_t>(t) * 12 + q]; }
  // int_omega sqrt(det G) phi_j for the hat functions phi_j.
  const std::vector<double>& surface_mass() const { return mass_; }
  double surface_area() const;

 private:
  TriMesh mesh_;
  ChartKind chart_;
  DktField reference_;
  std::vector<ElementTable> tables_;
  std::vector<Point> points_;
  std::vector<double> mass_;
};

// Lame parameters mu = lambda = 2/5 B (Poisson ratio 1/4).
inline double lame_from_hardness(double B) { return 0.4 * B; }

// mu/2 tr F + lambda/4 det F - (mu/2 + lambda/4) log det F - mu - lambda/4;
// +inf when det F <= 0.
double membrane_density(double mu, double lambda, const Eigen::Matrix2d& F);

// Energies of a deformed chart psi (3 components). The membrane energy throws
// InvertedElement at a quadrature point with det F <= 0.
double membrane_energy(const ShellGeometry& geom, const QuadField& B, const DktField& psi);
double shell_bending_energy(const ShellGeometry& geom, const QuadField& B, const DktField& psi,
                            BendingNorm norm = BendingNorm::Squared);

struct ShellProblem {
  QuadField B;
  QuadField f;  // force per unit reference area, 3 components
  double delta = 1e-2;
};

// delta E_mem + delta^3 E_bend and its gradient (Dirichlet entries included).
double shell_energy(const ShellGeometry& geom, const ShellProblem& problem, const DktField& psi);
std::vector<double> shell_energy_gradient(const ShellGeometry& geom, const ShellProblem& problem,
                                          const DktField& psi);

// Derivative of the load potential int sqrt(det G) f . psi.
std::vector<double> shell_load_vector(const ShellGeometry& geom, const QuadField& f);

struct ShellState {
  DktField psi;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;  // residual norms of the last Newton run

  static ShellState reference(const ShellGeometry& geom);
};

struct ShellOptions {
  double tol = 1e-9;  // on max |gradient|, relative to the load
  int max_iters = 40;
  int continuation_steps = 6;
  bool warm_start = true;
  int max_bisections = 8;
};

// Newton's method on the total potential with a positive definite shift of
// the Hessian when needed and an Armijo line search; load continuation from
// the reference configuration when the full load fails.
ShellState newton_solve_shell(const ShellGeometry& geom, const ShellProblem& problem, const ShellState& init,
                              const ShellOptions& options = {});

// int sqrt(det G) f . (psi - psi_ref).
double shell_compliance(const ShellGeometry& geom, const ShellProblem& problem, const ShellState& state);
double max_displacement(const ShellGeometry& geom, const ShellState& state);

struct ShellDesignProblem {
  ForceFunction force;
  double a = 1.0;
  double b = 100.0;
  double eps = 0.1;
  double eta = 1e-3;
  double volume = 0.5;  // on the reference surface
  double delta = 1e-2;

  void validate(const ShellGeometry& geom) const;
};

ShellProblem shell_problem_for(const ShellGeometry& geom, const ShellDesignProblem& design,
                               const std::vector<double>& v);

// Area of the hard phase on the reference surface.
double surface_hard_area(const ShellGeometry& geom, const std::vector<double>& v);

// Adjoint-based derivative of compliance + eta MM with respect to v (the
// Modica-Mortola term lives on the chart domain).
std::vector<double> shell_design_gradient(const ShellGeometry& geom, const ShellDesignProblem& design,
                                          const std::vector<double>& v, const ShellState& state);

struct ShellDesignOptions : DescentOptions {
  ShellOptions shell;
};

using ShellDesignResult = DesignResult<ShellState>;

ShellDesignResult optimize_shell_design(const ShellGeometry& geom, const ShellDesignProblem& design,
                                        const std::vector<double>& v0, const ShellDesignOptions& options = {},
                                        const ShellState* warm = nullptr);

struct ShellAdaptiveResult {
  TriMesh mesh;
  ShellDesignResult result;
  ShellDesignProblem problem;
  std::vector<int> n_triangles;  // per level
};

// Adaptive loop with phase-gradient marking only. With update_eps the
// interface width is reset to interface_width() before every level.
ShellAdaptiveResult adaptive_optimize_shell(const TriMesh& mesh, ChartKind chart, const ShellDesignProblem& design,
                                            const std::vector<double>& v0, int levels,
                                            const ShellDesignOptions& options = {}, bool update_eps = true);

// Interface length estimate MM(v) / c_Psi with c_Psi = int_{-1}^{1} sqrt(Psi) = 1.
inline double interface_length(const TriMesh& mesh, const std::vector<double>& v, double eps) {
  return modica_mortola(mesh, v, eps);
}

}  // namespace plateopt
