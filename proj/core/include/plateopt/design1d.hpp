#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "plateopt/adjoint1d.hpp"
#include "plateopt/grid1d.hpp"

namespace plateopt {

enum class BaselineKind { I, II, III };

const char* baseline_name(BaselineKind kind);

// I: hard layer [0,V] at the clamp; II: hard strip along the full length
// (constant average); III: hard square of side sqrt(V) at the clamp.
struct BaselineDesign {
  BaselineKind kind = BaselineKind::II;
  double V = 0.5;
  double a = 1.0;
  double b = 100.0;
};

// Per-cell average of the analytic design, sampled at cell midpoints.
MaterialProfile1D averaged_profile(const BaselineDesign& design, const Grid1D& grid);

struct DesignComparisonRow {
  double load = 0.0;
  std::array<double, 3> compliance{};  // I, II, III
  int best = 0;
};

struct Crossover {
  double load_below = 0.0;
  double load_above = 0.0;
  int from = 0;
  int to = 0;
};

struct DesignComparison {
  std::vector<DesignComparisonRow> rows;
  std::vector<Crossover> crossovers;
};

DesignComparison compare_designs(double V, const std::vector<double>& loads, double a, double b,
                                 const Grid1D& grid, int threads = 1);

struct OptimizationResult1D {
  RelaxedDesign design;
  bool converged = false;
  int iterations = 0;
  double cost = 0.0;
  double stationarity = 0.0;  // projected-gradient norm or KKT residual
  std::string path;           // "fixed_point" or "projected_gradient"
};

struct ProjectedGradientOptions {
  int max_iters = 2000;
  double tol = 1e-12;
  GradientConvention convention = GradientConvention::FiniteDifference;
};

OptimizationResult1D optimize_projected_gradient(const RelaxedDesign& init, const LoadSpec1D& load,
                                                 double c_l, const ProjectedGradientOptions& options = {});

struct FixedPointOptions {
  int max_iters = 20000;
  double tol = 1e-7;
  double relaxation = 0.5;
  GradientConvention convention = GradientConvention::FiniteDifference;
  std::optional<std::vector<double>> init_theta;  // defaults to theta = 0.5
  bool fallback = true;
};

OptimizationResult1D optimize_fixed_point(const LoadSpec1D& load, double c_l, double a, double b,
                                          const Grid1D& grid, const FixedPointOptions& options = {});

struct DesignStructure {
  bool all_soft = false;
  bool all_hard = false;
  double t0 = 0.0;
  double t1 = 1.0;
  double monotone_violation = 0.0;
};

DesignStructure extract_structure(const RelaxedDesign& design, double tol_plateau = 1e-3);

// Value of c_l above which theta = 0 satisfies the optimality conditions:
// max over cells of kp at theta = 0, divided by a^2 (times (b-a) in the
// finite-difference convention).
double closed_form_threshold(const LoadSpec1D& load, double a, double b, const Grid1D& grid,
                             GradientConvention convention = GradientConvention::FiniteDifference);

struct ThresholdOptions {
  GradientConvention convention = GradientConvention::FiniteDifference;
  double zero_tol = 1e-10;  // max theta regarded as all-soft
  double rel_tol = 1e-6;
};

// Bisection on c_l for the smallest value at which the optimizer returns theta = 0.
double threshold_cl(const LoadSpec1D& load, double a, double b, const Grid1D& grid,
                    const ThresholdOptions& options = {});

}  // namespace plateopt
