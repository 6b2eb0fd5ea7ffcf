#include "plateopt/dkt.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

#include "plateopt/errors.hpp"

namespace plateopt {

namespace {

using Row10 = Eigen::Matrix<double, 1, 10>;
using Row6 = Eigen::Matrix<double, 1, 6>;

Row10 cubic_row(const Eigen::Vector2d& s) {
  const double x = s.x(), y = s.y();
  Row10 m;
  m << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
  return m;
}

Eigen::Matrix<double, 2, 10> cubic_grad(const Eigen::Vector2d& s) {
  const double x = s.x(), y = s.y();
  Eigen::Matrix<double, 2, 10> g;
  g << 0, 1, 0, 2 * x, y, 0, 3 * x * x, 2 * x * y, y * y, 0,
       0, 0, 1, 0, x, 2 * y, 0, x * x, 2 * x * y, 3 * y * y;
  return g;
}

Row6 quad_row(const Eigen::Vector2d& s) {
  const double x = s.x(), y = s.y();
  Row6 m;
  m << 1, x, y, x * x, x * y, y * y;
  return m;
}

Eigen::Matrix<double, 2, 6> quad_grad(const Eigen::Vector2d& s) {
  const double x = s.x(), y = s.y();
  Eigen::Matrix<double, 2, 6> g;
  g << 0, 1, 0, 2 * x, y, 0,
       0, 0, 1, 0, x, 2 * y;
  return g;
}

}  // namespace

DktElement::DktElement(const TriMesh& mesh, int t) {
  const auto& T = mesh.triangles[t];
  const std::array<Eigen::Vector2d, 3> p = {mesh.vertices[T[0]], mesh.vertices[T[1]], mesh.vertices[T[2]]};
  scale_ = mesh.diameter(t);
  center_ = (p[0] + p[1] + p[2]) / 3.0;
  if (!(mesh.area(t) > 1e-14 * scale_ * scale_))
    throw DegenerateTriangle("degenerate triangle " + std::to_string(t), t);

  std::array<Eigen::Vector2d, 3> s;
  for (int i = 0; i < 3; ++i) s[i] = (p[i] - center_) / scale_;

  Eigen::Matrix<double, 10, 10> M;
  Row10 centroid = cubic_row(Eigen::Vector2d::Zero());
  for (int i = 0; i < 3; ++i) {
    const Row10 v = cubic_row(s[i]);
    const Eigen::Matrix<double, 2, 10> g = cubic_grad(s[i]) / scale_;
    M.row(3 * i) = v;
    M.row(3 * i + 1) = g.row(0);
    M.row(3 * i + 2) = g.row(1);
    // w(p_T) = 1/3 sum_i [w_i + 1/2 grad w_i . (p_T - p_i)]
    const Eigen::Vector2d d = center_ - p[i];
    centroid -= (v + 0.5 * (d.x() * g.row(0) + d.y() * g.row(1))) / 3.0;
  }
  M.row(9) = centroid;
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(M);
  if (!lu.isInvertible()) throw DegenerateTriangle("singular DKT system on triangle " + std::to_string(t), t);
  cubic_ = lu.inverse().leftCols<9>();

  Eigen::Matrix<double, 12, 12> A = Eigen::Matrix<double, 12, 12>::Zero();
  Eigen::Matrix<double, 12, 9> R = Eigen::Matrix<double, 12, 9>::Zero();
  for (int i = 0; i < 3; ++i) {
    const Row6 q = quad_row(s[i]);
    A.block<1, 6>(2 * i, 0) = q;
    A.block<1, 6>(2 * i + 1, 6) = q;
    R(2 * i, 3 * i + 1) = 1.0;
    R(2 * i + 1, 3 * i + 2) = 1.0;
  }
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    const Eigen::Vector2d tan = p[j] - p[i];
    const Eigen::Vector2d nor(tan.y(), -tan.x());
    const Eigen::Vector2d sm = 0.5 * (s[i] + s[j]);
    const Row6 qm = quad_row(sm);
    A.block<1, 6>(6 + k, 0) = tan.x() * qm;
    A.block<1, 6>(6 + k, 6) = tan.y() * qm;
    const Eigen::Matrix<double, 2, 9> gm = cubic_grad(sm) / scale_ * cubic_;
    R.row(6 + k) = tan.transpose() * gm;
    const Row6 qn = qm - 0.5 * (quad_row(s[i]) + quad_row(s[j]));
    A.block<1, 6>(9 + k, 0) = nor.x() * qn;
    A.block<1, 6>(9 + k, 6) = nor.y() * qn;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 12, 12>> lu2(A);
  if (!lu2.isInvertible()) throw DegenerateTriangle("singular gradient system on triangle " + std::to_string(t), t);
  theta_ = lu2.solve(R);
}

BasisEval DktElement::eval(const Eigen::Vector2d& x) const {
  const Eigen::Vector2d s = (x - center_) / scale_;
  BasisEval b;
  b.value = cubic_row(s) * cubic_;
  b.grad = cubic_grad(s) / scale_ * cubic_;
  const Row6 q = quad_row(s);
  const Eigen::Matrix<double, 2, 6> dq = quad_grad(s) / scale_;
  const auto t1 = theta_.topRows<6>();
  const auto t2 = theta_.bottomRows<6>();
  b.theta.row(0) = q * t1;
  b.theta.row(1) = q * t2;
  b.dtheta.row(0) = dq.row(0) * t1;
  b.dtheta.row(1) = dq.row(1) * t1;
  b.dtheta.row(2) = dq.row(0) * t2;
  b.dtheta.row(3) = dq.row(1) * t2;
  return b;
}

std::vector<DktElement> build_discrete_gradient(const TriMesh& mesh) {
  std::vector<DktElement> out;
  out.reserve(mesh.triangles.size());
  for (int t = 0; t < mesh.n_triangles(); ++t) out.emplace_back(mesh, t);
  return out;
}

ElementTable tabulate(const TriMesh& mesh, int t, const QuadRule& rule) {
  const DktElement el(mesh, t);
  const auto& T = mesh.triangles[t];
  ElementTable tab;
  tab.area = mesh.area(t);
  tab.points.resize(rule.size());
  tab.basis.resize(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    const auto& l = rule.bary[q];
    tab.points[q] = l[0] * mesh.vertices[T[0]] + l[1] * mesh.vertices[T[1]] + l[2] * mesh.vertices[T[2]];
    tab.basis[q] = el.eval(tab.points[q]);
  }
  return tab;
}

Local9 DktField::local(const TriMesh& mesh, int t, int comp) const {
  Local9 l;
  const auto& T = mesh.triangles[t];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) l[3 * i + k] = (*this)(T[i], comp, k);
  return l;
}

DktField interpolate(const TriMesh& mesh, int components, const NodalSampler& f) {
  DktField out(mesh.n_vertices(), components);
  for (int i = 0; i < mesh.n_vertices(); ++i)
    for (int c = 0; c < components; ++c) {
      const auto v = f(mesh.vertices[i], c);
      for (int k = 0; k < 3; ++k) out(i, c, k) = v[k];
    }
  return out;
}

PointEval evaluate(const DktElement& el, const TriMesh& mesh, const DktField& f, int t, const Eigen::Vector2d& x) {
  const BasisEval b = el.eval(x);
  const int nc = f.components;
  PointEval e;
  e.value.resize(nc);
  e.grad.resize(nc, 2);
  e.theta.resize(nc, 2);
  e.dtheta.resize(nc, 4);
  for (int c = 0; c < nc; ++c) {
    const Local9 l = f.local(mesh, t, c);
    e.value[c] = (b.value * l).value();
    e.grad.row(c) = (b.grad * l).transpose();
    e.theta.row(c) = (b.theta * l).transpose();
    e.dtheta.row(c) = (b.dtheta * l).transpose();
  }
  return e;
}

QuadField quad_field_from_function(const TriMesh& mesh, int components,
                                   const std::function<void(const Eigen::Vector2d&, double*)>& f,
                                   const QuadRule& rule) {
  QuadField out;
  out.components = components;
  out.points_per_triangle = rule.size();
  out.values.resize(static_cast<std::size_t>(mesh.n_triangles()) * rule.size() * components);
  std::size_t pos = 0;
  for (const auto& T : mesh.triangles)
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[T[0]] + l[1] * mesh.vertices[T[1]] + l[2] * mesh.vertices[T[2]];
      f(x, &out.values[pos]);
      pos += components;
    }
  return out;
}

QuadField quad_field_from_nodal(const TriMesh& mesh, const std::vector<double>& nodal, const QuadRule& rule) {
  QuadField out;
  out.points_per_triangle = rule.size();
  out.values.reserve(static_cast<std::size_t>(mesh.n_triangles()) * rule.size());
  for (const auto& T : mesh.triangles)
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      out.values.push_back(l[0] * nodal[T[0]] + l[1] * nodal[T[1]] + l[2] * nodal[T[2]]);
    }
  return out;
}

double bending_energy(const TriMesh& mesh, const QuadField& B, const DktField& w, EnergyScale scale) {
  const QuadRule& rule = triangle_rule_12();
  double e = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementTable tab = tabulate(mesh, t, rule);
    double et = 0.0;
    for (int c = 0; c < w.components; ++c) {
      const Local9 l = w.local(mesh, t, c);
      for (int q = 0; q < rule.size(); ++q)
        et += rule.weights[q] * B.at(t, q) * (tab.basis[q].dtheta * l).squaredNorm();
    }
    e += tab.area * et;
  }
  return energy_factor(scale) * e;
}

double force_energy(const TriMesh& mesh, const QuadField& f, const DktField& w) {
  const QuadRule& rule = triangle_rule_12();
  double e = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const DktElement el(mesh, t);
    const auto& T = mesh.triangles[t];
    double et = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[T[0]] + l[1] * mesh.vertices[T[1]] + l[2] * mesh.vertices[T[2]];
      const Eigen::Matrix<double, 1, 9> v = cubic_row((x - el.center()) / el.scale()) * el.cubic();
      for (int c = 0; c < w.components; ++c) et += rule.weights[q] * f.at(t, q, c) * v.dot(w.local(mesh, t, c).transpose());
    }
    e += mesh.area(t) * et;
  }
  return e;
}

std::vector<Matrix9> element_stiffness(const TriMesh& mesh, const QuadField& B, EnergyScale scale) {
  const QuadRule& rule = triangle_rule_12();
  std::vector<Matrix9> K(mesh.n_triangles());
  const double f = 2.0 * energy_factor(scale);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementTable tab = tabulate(mesh, t, rule);
    Matrix9 k = Matrix9::Zero();
    for (int q = 0; q < rule.size(); ++q)
      k.noalias() += (rule.weights[q] * B.at(t, q)) * tab.basis[q].dtheta.transpose() * tab.basis[q].dtheta;
    K[t] = f * tab.area * 0.5 * (k + k.transpose());
  }
  return K;
}

std::vector<double> load_vector(const TriMesh& mesh, const QuadField& f) {
  const QuadRule& rule = triangle_rule_12();
  const int nc = f.components;
  std::vector<double> F(static_cast<std::size_t>(mesh.n_vertices()) * nc * 3, 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const DktElement el(mesh, t);
    const auto& T = mesh.triangles[t];
    const double area = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.bary[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[T[0]] + l[1] * mesh.vertices[T[1]] + l[2] * mesh.vertices[T[2]];
      const Eigen::Matrix<double, 1, 9> v = cubic_row((x - el.center()) / el.scale()) * el.cubic();
      for (int c = 0; c < nc; ++c) {
        const double fw = area * rule.weights[q] * f.at(t, q, c);
        if (fw == 0.0) continue;
        for (int i = 0; i < 3; ++i)
          for (int k = 0; k < 3; ++k) F[DktField::index(T[i], c, k, nc)] += fw * v[3 * i + k];
      }
    }
  }
  return F;
}

void apply_stiffness(const TriMesh& mesh, const std::vector<Matrix9>& K, int components, const std::vector<double>& x,
                     std::vector<double>& y) {
  y.assign(x.size(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    for (int c = 0; c < components; ++c) {
      Local9 l;
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) l[3 * i + k] = x[DktField::index(T[i], c, k, components)];
      const Local9 r = K[t] * l;
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) y[DktField::index(T[i], c, k, components)] += r[3 * i + k];
    }
  }
}

IsometryResidual isometry_residual_at(const DktField& w, int node) {
  Eigen::Vector3d a(1.0, 0.0, 0.0), b(0.0, 1.0, 0.0);
  for (int c = 0; c < 3; ++c) {
    a[c] += w(node, c, 1);
    b[c] += w(node, c, 2);
  }
  return {a.squaredNorm() - 1.0, a.dot(b), b.squaredNorm() - 1.0};
}

std::vector<IsometryResidual> isometry_residual(const DktField& w) {
  std::vector<IsometryResidual> out(w.n_nodes());
  for (int i = 0; i < w.n_nodes(); ++i) out[i] = isometry_residual_at(w, i);
  return out;
}

DktField prolong_dkt(const TriMesh& coarse, const Refinement& r, const DktField& f) {
  const int nc = f.components;
  DktField out(r.mesh.n_vertices(), nc);
  std::copy(f.dofs.begin(), f.dofs.end(), out.dofs.begin());
  const EdgeTopology topo = build_topology(coarse);
  for (int v = r.old_vertex_count; v < r.mesh.n_vertices(); ++v) {
    const auto [a, b] = r.vertex_parents[v];
    const Eigen::Vector2d x = 0.5 * (coarse.vertices[a] + coarse.vertices[b]);
    std::vector<int> tris;
    for (int t : topo.vertex_triangles[a]) {
      const auto& T = coarse.triangles[t];
      if (T[0] == b || T[1] == b || T[2] == b) tris.push_back(t);
    }
    for (int t : tris) {
      const PointEval e = evaluate(DktElement(coarse, t), coarse, f, t, x);
      for (int c = 0; c < nc; ++c) {
        // The value along an edge depends only on the edge data.
        out(v, c, 0) = e.value[c];
        out(v, c, 1) += e.grad(c, 0) / tris.size();
        out(v, c, 2) += e.grad(c, 1) / tris.size();
      }
    }
    // Dirichlet midpoints inherit clamped data.
    if (r.mesh.dirichlet[v] && coarse.dirichlet[a] && coarse.dirichlet[b]) {
      bool zero = true;
      for (int c = 0; c < nc; ++c)
        for (int k = 0; k < 3; ++k) zero = zero && f(a, c, k) == 0.0 && f(b, c, k) == 0.0;
      if (zero)
        for (int c = 0; c < nc; ++c)
          for (int k = 0; k < 3; ++k) out(v, c, k) = 0.0;
    }
  }
  return out;
}

}  // namespace plateopt
