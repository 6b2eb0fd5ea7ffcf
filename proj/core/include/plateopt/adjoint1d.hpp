#pragma once

#include <optional>
#include <vector>

#include "plateopt/grid1d.hpp"

namespace plateopt {

// How c_l enters the gradient and the optimality thresholds.
//  FiniteDifference: g = -(b-a) K'P' + c_l, thresholds use c_l / (b-a).
//  Unscaled:         g = -K'P' + c_l,       thresholds use c_l.
enum class GradientConvention { FiniteDifference, Unscaled };

struct AdjointSolution1D {
  Grid1D grid;
  std::vector<double> P;       // nodal adjoint
  std::vector<double> p_cell;  // B P' per cell
  std::vector<double> p;       // nodal flux, integrated back from p(1) = 0
  std::vector<double> k;       // nodal B K', integrated back from k(1) = 0
  double tau = 1.0;
  std::optional<double> tau0;
  double residual_norm = 0.0;
};

AdjointSolution1D solve_adjoint_1d(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                                   const LoadSpec1D& load, double tol = 1e-10);

// Per-cell gradient density of the total cost; multiplying by the cell
// length gives the derivative with respect to the cell's design value.
std::vector<double> design_gradient_1d(const RelaxedDesign& design, const PhaseSolution1D& state,
                                       const AdjointSolution1D& adjoint, double c_l,
                                       GradientConvention convention = GradientConvention::FiniteDifference);

// Per-cell product (B K')(B P').
std::vector<double> cell_kp(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                            const AdjointSolution1D& adjoint);

// c_l as it enters the pointwise optimality conditions.
double effective_cl(double c_l, double a, double b, GradientConvention convention);

double kkt_residual_1d(const RelaxedDesign& design, const PhaseSolution1D& state,
                       const AdjointSolution1D& adjoint, double c_l,
                       GradientConvention convention = GradientConvention::FiniteDifference,
                       double bound_tol = 1e-12);

// Integral of beta * K' * P' over (0,1) for a per-cell beta, evaluated from the
// linearized state equation tested with the adjoint and, independently, from
// the adjoint equation tested with the linearized state.
struct AdjointPairing {
  double via_linearized_state;
  double via_adjoint;
};
AdjointPairing adjoint_pairing(const MaterialProfile1D& profile, const PhaseSolution1D& state,
                               const AdjointSolution1D& adjoint, const LoadSpec1D& load,
                               const std::vector<double>& beta);

}  // namespace plateopt
