#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "plateopt/design1d.hpp"
#include "plateopt/dkt.hpp"
#include "plateopt/mesh2d.hpp"
#include "plateopt/plate.hpp"
#include "plateopt/projected_descent.hpp"

namespace plateopt {

using ForceFunction = std::function<void(const Eigen::Vector2d&, double*)>;

// Data of a phase-field design problem on a plate. The mesh is passed
// separately because the adaptive loop replaces it.
struct DesignProblem2D {
  ForceFunction force;  // 3 components
  double a = 1.0;
  double b = 100.0;
  double eps = 0.1;     // interface width
  double eta = 1e-2;    // perimeter weight
  double volume = 0.5;  // target area of the hard phase
  EnergyScale scale = EnergyScale::AsPrinted;
  double affine_right_penalty = 0.0;

  // Throws ConfigError on invalid parameters.
  void validate(const TriMesh& mesh) const;
};

inline double hard_fraction(double v) { return 0.5 * (v + 1.0); }

// Nodal B = a (1 - chi(v)) + b chi(v).
std::vector<double> material_from_phase(const std::vector<double>& v, double a, double b);
// The same, interpolated affinely to the quadrature points.
QuadField material_at_quadrature(const TriMesh& mesh, const std::vector<double>& v, double a, double b);

// 1/2 int eps |grad v|^2 + Psi(v) / eps with Psi(v) = 9/16 (v^2 - 1)^2.
double double_well(double v);
double modica_mortola(const TriMesh& mesh, const std::vector<double>& v, double eps);
std::vector<double> modica_mortola_gradient(const TriMesh& mesh, const std::vector<double>& v, double eps);

// int chi(v), exact for piecewise affine v; its gradient is 1/2 int phi_j.
double area_of_hard_phase(const TriMesh& mesh, const std::vector<double>& v);
std::vector<double> lumped_mass(const TriMesh& mesh);

PlateProblem plate_problem_for(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v);

// Adjoint pair for the cost F_h[w]: solves the KKT system at `state` with
// right-hand side (-dF/dw, 0).
struct AdjointState2D {
  DktField p;
  std::vector<Eigen::Vector3d> mu;
};
AdjointState2D adjoint_solve_2d(const TriMesh& mesh, const PlateProblem& plate, const PlateState& state);

// Nodal derivative of J = F_h[w] + eta MM(v) with respect to v.
std::vector<double> design_gradient_2d(const TriMesh& mesh, const DesignProblem2D& problem,
                                       const std::vector<double>& v, const PlateState& state,
                                       const AdjointState2D& adjoint);

struct DesignEvaluation {
  PlateState state;
  double compliance = 0.0;
  double perimeter = 0.0;  // Modica-Mortola value
  double objective = 0.0;
};

// Solves the state problem (warm started from `init`) and evaluates J.
DesignEvaluation evaluate_design(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v,
                                 const PlateState& init, const PlateOptions& options = {});

struct DesignOptions2D : DescentOptions {
  PlateOptions plate;
};

using DesignResult2D = DesignResult<PlateState>;

// Projected gradient descent with Barzilai-Borwein steps and Armijo
// backtracking; the area constraint is enforced exactly by the projection.
DesignResult2D optimize_design_2d(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v0,
                                  const DesignOptions2D& options = {}, const PlateState* warm = nullptr);

// Sharp nodal phase field: +1 where `hard` holds, -1 elsewhere.
std::vector<double> phase_from_region(const TriMesh& mesh, const std::function<bool(const Eigen::Vector2d&)>& hard);

// The three cylindrical baselines on (0, l) x (y0, y0 + 1) as predicates.
std::function<bool(const Eigen::Vector2d&)> baseline_region(BaselineKind kind, double volume, double y_center = 0.0);

// Restriction of a prolonged P1 field back to the coarse vertices.
std::vector<double> restrict_p1(const Refinement& r, const std::vector<double>& fine);

// 2 x the largest diameter among triangles cut by {v = 0}; falls back to the
// global maximum when no triangle is cut.
double interface_width(const TriMesh& mesh, const std::vector<double>& v);

struct AdaptiveOptions {
  int levels = 3;
  double isometry_fraction = 0.25;
  bool update_eps = true;
  DesignOptions2D inner;
  // Called after each level with the level index and its result.
  std::function<void(int, const TriMesh&, const DesignResult2D&, const DesignProblem2D&)> on_level;
};

struct AdaptiveLevel {
  int n_triangles = 0;
  int n_vertices = 0;
  double eps = 0.0;
  double objective = 0.0;
  double compliance = 0.0;
  int marked_phase = 0;
  int marked_total = 0;
};

struct AdaptiveResult {
  TriMesh mesh;
  DesignResult2D result;
  DesignProblem2D problem;  // with the final eps
  std::vector<AdaptiveLevel> levels;
  MarkingReport last_phase_marks;  // phase-gradient marks on the final mesh
};

// optimize -> mark (phase gradient union isometry error) -> bisect -> prolong,
// repeated `levels` times; the last level is optimized without refinement.
AdaptiveResult adaptive_optimize(const TriMesh& mesh, const DesignProblem2D& problem, const std::vector<double>& v0,
                                 const AdaptiveOptions& options = {});

}  // namespace plateopt
