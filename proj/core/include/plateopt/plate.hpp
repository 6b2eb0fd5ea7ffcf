#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "plateopt/dkt.hpp"
#include "plateopt/mesh2d.hpp"
#include "plateopt/sparse_solver.hpp"

namespace plateopt {

// Material and load for the isometry-constrained plate.
struct PlateProblem {
  QuadField B;  // hardness at the quadrature points
  QuadField f;  // force density, 3 components
  EnergyScale scale = EnergyScale::AsPrinted;
  // When positive, penalizes non-affine deformation of the right edge
  // (x1 = max x1) with this weight.
  double affine_right_penalty = 0.0;
};

// Constant hardness and piecewise constant force helpers.
QuadField constant_field(const TriMesh& mesh, const std::vector<double>& value);
// Hardness a(1 - chi) + b chi with chi the indicator of `hard`, sampled at
// quadrature points.
QuadField indicator_hardness(const TriMesh& mesh, double a, double b,
                             const std::function<bool(const Eigen::Vector2d&)>& hard);

// Lagrange multipliers are stored as (lambda1, lambda2, lambda12) paired with
// (G11, G22, G12); Dirichlet nodes carry zeros.
struct PlateState {
  DktField w;
  std::vector<Eigen::Vector3d> lambda;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;  // residual norms of the last Newton run

  static PlateState zero(const TriMesh& mesh);
};

struct PlateOptions {
  double newton_tol = 1e-10;      // relative to the scale of the force balance
  double constraint_tol = 1e-11;  // on max |G|
  int max_iters = 40;             // per continuation step
  int continuation_steps = 8;     // geometric load steps from 2^(1-steps)
  bool warm_start = true;         // try the full load from the initial state first
  int max_bisections = 6;
  // Shift indefinite reduced Hessians and globalize with an exact-penalty
  // merit; otherwise plain Newton with backtracking on the KKT residual.
  bool convexify = true;
};

// (G11, G22, G12) at a node.
Eigen::Vector3d nodal_constraints(const DktField& w, int node);

// Builds the Lagrangian Hessian at a state and solves saddle point systems
//   [H C^T; C 0] [x; l] = [r; g]
// with a per-node null-space reduction of the nodal constraints.
class PlateKkt {
 public:
  // With convexify, a multiple of the identity is added to the reduced
  // Hessian until it is positive definite (see shift()).
  PlateKkt(const TriMesh& mesh, const std::vector<Matrix9>& K, const PlateState& state, bool convexify = false);

  // r has the DktField layout (Dirichlet entries ignored); g per node.
  void solve(const std::vector<double>& r, const std::vector<Eigen::Vector3d>& g, std::vector<double>& x,
             std::vector<Eigen::Vector3d>& l) const;
  void apply_hessian(const std::vector<double>& x, std::vector<double>& y) const;
  bool used_lu() const { return solver_.used_lu(); }
  double shift() const { return shift_; }

 private:
  void solve_once(const std::vector<double>& r, const std::vector<Eigen::Vector3d>& g, std::vector<double>& x,
                  std::vector<Eigen::Vector3d>& l) const;

  const TriMesh& mesh_;
  const std::vector<Matrix9>& K_;
  std::vector<char> free_;
  std::vector<Eigen::Matrix<double, 3, 6>> C_;
  std::vector<Eigen::Matrix<double, 6, 3>> Z_;
  std::vector<Eigen::Matrix3d> CCt_inv_;
  std::vector<Eigen::Vector3d> lambda_;
  std::unique_ptr<BlockSymmetricMatrix> reduced_;
  SymmetricSolver solver_;
  double shift_ = 0.0;
};

// Element stiffness of the problem including the optional edge penalty.
std::vector<Matrix9> plate_stiffness(const TriMesh& mesh, const PlateProblem& problem);

// Gradient of the Lagrangian with respect to w (Dirichlet entries zeroed).
std::vector<double> plate_residual(const TriMesh& mesh, const std::vector<Matrix9>& K, const std::vector<double>& F,
                                   const PlateState& state, double load_fraction);

// Newton's method on the saddle point system with load continuation. Throws
// SingularKKT when the constraint Jacobian loses rank; on failure returns the
// best iterate with converged = false.
PlateState newton_solve_plate(const TriMesh& mesh, const PlateProblem& problem, const PlateState& init,
                              const PlateOptions& options = {});

// Compliance F_h[w].
double plate_compliance(const TriMesh& mesh, const PlateProblem& problem, const PlateState& state);
double max_constraint_violation(const TriMesh& mesh, const DktField& w);

}  // namespace plateopt
