#include "plateopt/diagnostics.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <ostream>

#include "plateopt/io.hpp"

namespace plateopt {

std::vector<double> isometry_error_per_triangle(const TriMesh& mesh, const DktField& w, int power) {
  const QuadRule& rule = triangle_rule_12();
  std::vector<double> out(mesh.n_triangles(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementTable tab = tabulate(mesh, t, rule);
    std::array<Local9, 3> l;
    for (int c = 0; c < 3; ++c) l[c] = w.local(mesh, t, c);
    double s = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      Eigen::Matrix<double, 3, 2> Du;
      for (int c = 0; c < 3; ++c) Du.row(c) = (tab.basis[q].grad * l[c]).transpose();
      Du(0, 0) += 1.0;
      Du(1, 1) += 1.0;
      const double e = (Du.transpose() * Du - Eigen::Matrix2d::Identity()).norm();
      s += rule.weights[q] * (power == 1 ? e : e * e);
    }
    out[t] = tab.area * s;
  }
  return out;
}

double isometry_error_l1(const TriMesh& mesh, const DktField& w) {
  double s = 0.0;
  for (double v : isometry_error_per_triangle(mesh, w, 1)) s += v;
  return s;
}

MarkingReport mark_isometry_error(const TriMesh& mesh, const DktField& w, double fraction) {
  return mark_top_fraction(isometry_error_per_triangle(mesh, w, 2), fraction, MarkCriterion::IsometryError);
}

Eigen::Vector3d discrete_normal(const Eigen::MatrixXd& theta) {
  const Eigen::Vector3d t1(1.0 + theta(0, 0), theta(1, 0), theta(2, 0));
  const Eigen::Vector3d t2(theta(0, 1), 1.0 + theta(1, 1), theta(2, 1));
  return t1.cross(t2).normalized();
}

double discrete_gauss_curvature(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& dtheta) {
  const Eigen::Vector3d n = discrete_normal(theta);
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  for (int c = 0; c < 3; ++c) {
    A(0, 0) += n[c] * dtheta(c, 0);
    A(0, 1) += n[c] * dtheta(c, 1);
    A(1, 0) += n[c] * dtheta(c, 2);
    A(1, 1) += n[c] * dtheta(c, 3);
  }
  return A.determinant();
}

namespace {

template <class F>
void for_quad_points(const TriMesh& mesh, const DktField& w, F&& f) {
  const QuadRule& rule = triangle_rule_12();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementTable tab = tabulate(mesh, t, rule);
    std::array<Local9, 3> l;
    for (int c = 0; c < 3; ++c) l[c] = w.local(mesh, t, c);
    for (int q = 0; q < rule.size(); ++q) {
      Eigen::MatrixXd theta(3, 2), dtheta(3, 4);
      for (int c = 0; c < 3; ++c) {
        theta.row(c) = (tab.basis[q].theta * l[c]).transpose();
        dtheta.row(c) = (tab.basis[q].dtheta * l[c]).transpose();
      }
      f(t, q, tab.area * rule.weights[q], theta, dtheta);
    }
  }
}

}  // namespace

std::vector<double> gauss_curvature_per_triangle(const TriMesh& mesh, const DktField& w) {
  std::vector<double> out(mesh.n_triangles(), 0.0);
  for_quad_points(mesh, w, [&](int t, int, double wt, const Eigen::MatrixXd& th, const Eigen::MatrixXd& dth) {
    out[t] += wt * std::abs(discrete_gauss_curvature(th, dth));
  });
  return out;
}

double gauss_curvature_l1(const TriMesh& mesh, const DktField& w) {
  double s = 0.0;
  for (double v : gauss_curvature_per_triangle(mesh, w)) s += v;
  return s;
}

std::vector<double> normal_variance(const TriMesh& mesh, const DktField& w) {
  const QuadRule& rule = triangle_rule_12();
  std::vector<double> out(mesh.n_triangles(), 0.0);
  std::vector<Eigen::Vector3d> normals(rule.size());
  for_quad_points(mesh, w, [&](int t, int q, double, const Eigen::MatrixXd& th, const Eigen::MatrixXd&) {
    normals[q] = discrete_normal(th);
    if (q + 1 < rule.size()) return;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int k = 0; k < rule.size(); ++k) mean += rule.weights[k] * normals[k];
    double v = 0.0;
    for (int k = 0; k < rule.size(); ++k) v += rule.weights[k] * (normals[k] - mean).squaredNorm();
    out[t] = v;
  });
  return out;
}

std::vector<int> detect_affine_region(const TriMesh& mesh, const DktField& w, double threshold) {
  std::vector<int> out;
  const auto v = normal_variance(mesh, w);
  for (int t = 0; t < mesh.n_triangles(); ++t)
    if (v[t] < threshold) out.push_back(t);
  return out;
}

std::vector<Eigen::Vector3d> gauss_map_samples(const TriMesh& mesh, const DktField& w) {
  std::vector<Eigen::Vector3d> out(mesh.n_vertices());
  for (int p = 0; p < mesh.n_vertices(); ++p) {
    const Eigen::Vector3d a(1.0 + w(p, 0, 1), w(p, 1, 1), w(p, 2, 1));
    const Eigen::Vector3d b(w(p, 0, 2), 1.0 + w(p, 1, 2), w(p, 2, 2));
    out[p] = a.cross(b).normalized();
  }
  return out;
}

double h2_difference(const TriMesh& coarse, const DktField& w_coarse, const TriMesh& fine, const DktField& w_fine) {
  const QuadRule& rule = triangle_rule_12();
  const PointLocator loc(coarse);
  double s = 0.0;
  for (int t = 0; t < fine.n_triangles(); ++t) {
    const ElementTable tab = tabulate(fine, t, rule);
    const int tc = loc.locate(fine.centroid(t));
    const DktElement el(coarse, tc);
    for (int q = 0; q < rule.size(); ++q) {
      const BasisEval bc = el.eval(tab.points[q]);
      double d = 0.0;
      for (int c = 0; c < 3; ++c)
        d += (tab.basis[q].dtheta * w_fine.local(fine, t, c) - bc.dtheta * w_coarse.local(coarse, tc, c)).squaredNorm();
      s += tab.area * rule.weights[q] * d;
    }
  }
  return std::sqrt(s);
}

std::vector<double> eoc(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
  return out;
}

void EocTable::write_csv(std::ostream& os) const {
  CsvWriter csv(os);
  std::vector<std::string> header = {"h"};
  for (const auto& n : names) {
    header.push_back(n);
    header.push_back("eoc_" + n);
  }
  csv.header(header);
  for (std::size_t k = 0; k < h.size(); ++k) {
    csv.begin_row();
    csv.field(h[k]);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (k < errors[i].size()) {
        csv.field(errors[i][k]);
      } else {
        csv.empty();
      }
      if (k > 0 && k < errors[i].size()) {
        csv.field(std::log2(errors[i][k - 1] / errors[i][k]));
      } else {
        csv.empty();
      }
    }
    csv.end_row();
  }
}

void write_deformed_vtk(const std::string& path, const TriMesh& mesh, const DktField& w,
                        const std::vector<PointField>& extra_point, const std::vector<CellField>& extra_cell) {
  const int n = mesh.n_vertices();
  std::vector<double> pos(3 * n);
  PointField disp{"displacement", 3, std::vector<double>(3 * n)};
  PointField normal{"normal", 3, std::vector<double>(3 * n)};
  const auto nm = gauss_map_samples(mesh, w);
  for (int p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) {
      disp.values[3 * p + c] = w(p, c, 0);
      normal.values[3 * p + c] = nm[p][c];
      pos[3 * p + c] = (c < 2 ? mesh.vertices[p][c] : 0.0) + w(p, c, 0);
    }
  CellField kappa{"kappa_l1_density", gauss_curvature_per_triangle(mesh, w)};
  for (int t = 0; t < mesh.n_triangles(); ++t) kappa.values[t] /= mesh.area(t);
  const auto var = normal_variance(mesh, w);
  CellField affine{"affine", std::vector<double>(mesh.n_triangles())};
  for (int t = 0; t < mesh.n_triangles(); ++t) affine.values[t] = var[t] < 1e-9 ? 1.0 : 0.0;
  std::vector<PointField> pf = {disp, normal};
  pf.insert(pf.end(), extra_point.begin(), extra_point.end());
  std::vector<CellField> cf = {kappa, affine};
  cf.insert(cf.end(), extra_cell.begin(), extra_cell.end());
  write_vtk_file(path, mesh, pf, cf, pos);
}

}  // namespace plateopt
