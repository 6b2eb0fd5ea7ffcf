#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <vector>

#include "plateopt/mesh2d.hpp"
#include "plateopt/quadrature.hpp"

namespace plateopt {

// Local scalar DOFs on a triangle: (w, d1 w, d2 w) at vertex 0, then 1, then 2.
using Local9 = Eigen::Matrix<double, 9, 1>;

// Rows that map Local9 to quantities at one point of the element.
struct BasisEval {
  Eigen::Matrix<double, 1, 9> value;
  Eigen::Matrix<double, 2, 9> grad;    // exact gradient of the reduced cubic
  Eigen::Matrix<double, 2, 9> theta;   // discrete gradient
  Eigen::Matrix<double, 4, 9> dtheta;  // d1 th1, d2 th1, d1 th2, d2 th2
};

// Reduced cubic and discrete gradient on one triangle, built by solving the
// local interpolation systems in coordinates scaled by the diameter.
class DktElement {
 public:
  DktElement(const TriMesh& mesh, int t);

  BasisEval eval(const Eigen::Vector2d& x) const;

  // Monomial coefficients (1, s, r, s^2, sr, r^2, s^3, s^2 r, s r^2, r^3) in
  // scaled coordinates (s, r) = (x - center) / scale.
  const Eigen::Matrix<double, 10, 9>& cubic() const { return cubic_; }
  // The 12x9 discrete gradient: quadratic coefficients of th1 then th2.
  const Eigen::Matrix<double, 12, 9>& gradient_map() const { return theta_; }
  const Eigen::Vector2d& center() const { return center_; }
  double scale() const { return scale_; }

 private:
  Eigen::Vector2d center_;
  double scale_ = 1.0;
  Eigen::Matrix<double, 10, 9> cubic_;
  Eigen::Matrix<double, 12, 9> theta_;
};

// One DktElement per triangle. Throws DegenerateTriangle.
std::vector<DktElement> build_discrete_gradient(const TriMesh& mesh);

// Element data at the points of a quadrature rule.
struct ElementTable {
  double area = 0.0;
  std::vector<Eigen::Vector2d> points;
  std::vector<BasisEval> basis;
};

ElementTable tabulate(const TriMesh& mesh, int t, const QuadRule& rule = triangle_rule_12());

// Nodal values and gradients of `components` scalar functions. Layout:
// dofs[(node * components + comp) * 3 + k], k = 0 value, 1 d1, 2 d2.
struct DktField {
  int components = 3;
  std::vector<double> dofs;

  DktField() = default;
  DktField(int n_nodes, int comps) : components(comps), dofs(static_cast<std::size_t>(n_nodes) * comps * 3, 0.0) {}

  int n_nodes() const { return static_cast<int>(dofs.size()) / (3 * components); }
  static int index(int node, int comp, int k, int comps) { return (node * comps + comp) * 3 + k; }
  double& operator()(int node, int comp, int k) { return dofs[index(node, comp, k, components)]; }
  double operator()(int node, int comp, int k) const { return dofs[index(node, comp, k, components)]; }

  Local9 local(const TriMesh& mesh, int t, int comp) const;
  Eigen::Vector2d gradient(int node, int comp) const { return {(*this)(node, comp, 1), (*this)(node, comp, 2)}; }
};

// value, d1, d2 of component `comp` at x.
using NodalSampler = std::function<std::array<double, 3>(const Eigen::Vector2d& x, int comp)>;

// Nodal interpolant: values and gradients sampled at the vertices.
DktField interpolate(const TriMesh& mesh, int components, const NodalSampler& f);

// Per-component values, cubic gradients, discrete gradients and their
// derivatives at a point of triangle t.
struct PointEval {
  Eigen::VectorXd value;         // components
  Eigen::MatrixXd grad;          // components x 2
  Eigen::MatrixXd theta;         // components x 2
  Eigen::MatrixXd dtheta;        // components x 4
};
PointEval evaluate(const DktElement& el, const TriMesh& mesh, const DktField& f, int t, const Eigen::Vector2d& x);

// A scalar or vector field sampled at the quadrature points, triangle-major.
struct QuadField {
  int components = 1;
  int points_per_triangle = 12;
  std::vector<double> values;

  double at(int t, int q, int comp = 0) const {
    return values[(static_cast<std::size_t>(t) * points_per_triangle + q) * components + comp];
  }
};

QuadField quad_field_from_function(const TriMesh& mesh, int components,
                                   const std::function<void(const Eigen::Vector2d&, double*)>& f,
                                   const QuadRule& rule = triangle_rule_12());
// Piecewise affine interpolation of nodal values.
QuadField quad_field_from_nodal(const TriMesh& mesh, const std::vector<double>& nodal,
                                const QuadRule& rule = triangle_rule_12());

enum class EnergyScale { AsPrinted, Half };

inline double energy_factor(EnergyScale s) { return s == EnergyScale::Half ? 0.5 : 1.0; }

// sum_T |T| sum_q w_q B(x_q) |grad theta_h(x_q)|^2, summed over components.
double bending_energy(const TriMesh& mesh, const QuadField& B, const DktField& w,
                      EnergyScale scale = EnergyScale::AsPrinted);

// sum_T |T| sum_q w_q f(x_q) . w(x_q).
double force_energy(const TriMesh& mesh, const QuadField& f, const DktField& w);

// Per-triangle Hessian of the bending energy of one scalar component:
// E = sum_c 1/2 w_c^T K w_c with element blocks K_T.
using Matrix9 = Eigen::Matrix<double, 9, 9>;
std::vector<Matrix9> element_stiffness(const TriMesh& mesh, const QuadField& B, EnergyScale scale);

// Gradient of the force energy with respect to the DOFs of a field with
// f.components components.
std::vector<double> load_vector(const TriMesh& mesh, const QuadField& f);

// y = K x componentwise, for fields laid out as DktField::dofs.
void apply_stiffness(const TriMesh& mesh, const std::vector<Matrix9>& K, int components, const std::vector<double>& x,
                     std::vector<double>& y);

struct IsometryResidual {
  double g11 = 0.0, g12 = 0.0, g22 = 0.0;
};

// Nodal isometry defect of u = id + w from the gradient DOFs (3 components).
IsometryResidual isometry_residual_at(const DktField& w, int node);
std::vector<IsometryResidual> isometry_residual(const DktField& w);

// DKT interpolation of a field onto a refinement: old nodes keep their DOFs,
// new edge midpoints take the cubic's value and the averaged gradients of
// the triangles sharing the edge.
DktField prolong_dkt(const TriMesh& coarse, const Refinement& r, const DktField& f);

}  // namespace plateopt
