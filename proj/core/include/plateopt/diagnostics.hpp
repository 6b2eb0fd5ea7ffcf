#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "plateopt/dkt.hpp"
#include "plateopt/mesh2d.hpp"

namespace plateopt {

// Per-triangle integral of |grad u^T grad u - I|_F^p for u = id + w, using the
// exact gradient of the reduced cubics (p = 1 or 2).
std::vector<double> isometry_error_per_triangle(const TriMesh& mesh, const DktField& w, int power);
double isometry_error_l1(const TriMesh& mesh, const DktField& w);

// Top `fraction` of triangles by the squared isometry error.
MarkingReport mark_isometry_error(const TriMesh& mesh, const DktField& w, double fraction);

// Unit normal from the discrete tangents e_j + theta_h(w)_j.
Eigen::Vector3d discrete_normal(const Eigen::MatrixXd& theta);

// kappa_h = det(sum_c n_c grad theta_c) at a point.
double discrete_gauss_curvature(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& dtheta);

// Integral of |kappa_h| per triangle and in total.
std::vector<double> gauss_curvature_per_triangle(const TriMesh& mesh, const DktField& w);
double gauss_curvature_l1(const TriMesh& mesh, const DktField& w);

// Weighted variance of the quadrature-point normals per triangle.
std::vector<double> normal_variance(const TriMesh& mesh, const DktField& w);
std::vector<int> detect_affine_region(const TriMesh& mesh, const DktField& w, double threshold = 1e-9);

// Per-vertex unit normals from the nodal gradients.
std::vector<Eigen::Vector3d> gauss_map_samples(const TriMesh& mesh, const DktField& w);

// L2 norm of grad theta_h(w_coarse) - grad theta_h(w_fine), integrated on the
// fine mesh, which must be a refinement of the coarse one.
double h2_difference(const TriMesh& coarse, const DktField& w_coarse, const TriMesh& fine, const DktField& w_fine);

// EOC_k = log2(e_k / e_{k+1}).
std::vector<double> eoc(const std::vector<double>& errors);

struct EocTable {
  std::vector<double> h;
  std::vector<std::string> names;
  std::vector<std::vector<double>> errors;  // per quantity, per level

  std::vector<double> rates(std::size_t quantity) const { return eoc(errors[quantity]); }
  // CSV: h, then value and EOC per quantity (EOC empty on the first row).
  void write_csv(std::ostream& os) const;
};

// Deformed configuration with displacement, normals, kappa_h and the affine
// flag as point/cell data.
void write_deformed_vtk(const std::string& path, const TriMesh& mesh, const DktField& w,
                        const std::vector<PointField>& extra_point = {}, const std::vector<CellField>& extra_cell = {});

}  // namespace plateopt
