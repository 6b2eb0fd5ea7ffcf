#include "plateopt/shell.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unsupported/Eigen/AutoDiff>

#include "plateopt/errors.hpp"
#include "plateopt/sparse_solver.hpp"

namespace plateopt {

const char* chart_name(ChartKind kind) {
  switch (kind) {
    case ChartKind::Flat:
      return "flat";
    case ChartKind::Hemisphere:
      return "hemisphere";
    case ChartKind::HalfCylinder:
      return "half_cylinder";
  }
  return "?";
}

namespace {

using AD1 = Eigen::AutoDiffScalar<Eigen::Vector2d>;
using AD2 = Eigen::AutoDiffScalar<Eigen::Matrix<AD1, 2, 1>>;

template <class T>
std::array<T, 3> chart_map(ChartKind kind, const T& x1, const T& x2) {
  using std::cos;
  using std::sin;
  switch (kind) {
    case ChartKind::Hemisphere: {
      const T s = x1 * x1 + x2 * x2 + 1.0;
      return {2.0 * x1 / s, 2.0 * x2 / s, (2.0 - s) / s};
    }
    case ChartKind::HalfCylinder: {
      const double pi = std::numbers::pi;
      return {(1.0 - cos(pi * x1)) / (2.0 * pi), x2, sin(pi * x1) / (2.0 * pi)};
    }
    case ChartKind::Flat:
      break;
  }
  return {x1, x2, T(0.0) * x1};
}

AD2 seed(double v, int i) {
  AD2 x;
  x.value() = AD1(v, Eigen::Vector2d::Unit(i));
  x.derivatives().resize(2);
  for (int k = 0; k < 2; ++k) x.derivatives()(k) = AD1(k == i ? 1.0 : 0.0, Eigen::Vector2d::Zero());
  return x;
}

}  // namespace

ChartPoint chart_eval(ChartKind kind, const Eigen::Vector2d& xi) {
  const auto y = chart_map(kind, seed(xi.x(), 0), seed(xi.y(), 1));
  ChartPoint p;
  for (int c = 0; c < 3; ++c) {
    p.x[c] = y[c].value().value();
    // Components without any dependence (the flat chart's zero) may carry
    // empty derivative vectors.
    const bool has_first = y[c].value().derivatives().size() == 2;
    const bool has_second = y[c].derivatives().size() == 2;
    for (int a = 0; a < 2; ++a) p.D(c, a) = has_first ? y[c].value().derivatives()(a) : 0.0;
    auto second = [&](int a, int b) {
      if (!has_second) return 0.0;
      const AD1& d = y[c].derivatives()(a);
      return d.derivatives().size() == 2 ? d.derivatives()(b) : 0.0;
    };
    p.d11[c] = second(0, 0);
    p.d12[c] = second(0, 1);
    p.d22[c] = second(1, 1);
  }
  return p;
}

FundamentalForms fundamental_forms(const ChartPoint& p) {
  FundamentalForms f;
  f.g = p.D.transpose() * p.D;
  if (!(f.g.determinant() > 0.0)) throw DegenerateMetric("chart metric is degenerate");
  const Eigen::Vector3d n = p.D.col(0).cross(p.D.col(1)).normalized();
  f.A << n.dot(p.d11), n.dot(p.d12), n.dot(p.d12), n.dot(p.d22);
  return f;
}

void tag_chart_dirichlet(TriMesh& mesh, ChartKind kind) {
  constexpr double tol = 1e-12;
  switch (kind) {
    case ChartKind::Flat:
      tag_dirichlet(mesh, [](const Eigen::Vector2d& x) {
        return x.x() < tol || x.x() > 1.0 - tol || x.y() < tol || x.y() > 1.0 - tol;
      });
      break;
    case ChartKind::Hemisphere:
      // p3 = 0 exactly on the unit circle, where p1 = x1.
      tag_dirichlet(mesh, [](const Eigen::Vector2d& x) {
        return x.norm() > 1.0 - tol && std::abs(x.x()) >= 0.9 - tol;
      });
      break;
    case ChartKind::HalfCylinder:
      tag_dirichlet(mesh, [](const Eigen::Vector2d& x) { return x.y() < tol || x.y() > 1.0 - tol; });
      break;
  }
}

double chart_area(ChartKind kind) {
  switch (kind) {
    case ChartKind::Flat: return 1.0;
    case ChartKind::Hemisphere: return 2.0 * std::numbers::pi;
    case ChartKind::HalfCylinder: return 0.5;
  }
  return 0.0;
}

TriMesh chart_mesh(ChartKind kind, int n) {
  TriMesh m = kind == ChartKind::Hemisphere ? disc_mesh(n) : structured_rect(n, n, 1.0, 1.0, ClampSide::None, 0.0);
  tag_chart_dirichlet(m, kind);
  return m;
}

DktField chart_interpolant(const TriMesh& mesh, ChartKind kind) {
  DktField f(mesh.n_vertices(), 3);
  for (int p = 0; p < mesh.n_vertices(); ++p) {
    const ChartPoint cp = chart_eval(kind, mesh.vertices[p]);
    for (int c = 0; c < 3; ++c) {
      f(p, c, 0) = cp.x[c];
      f(p, c, 1) = cp.D(c, 0);
      f(p, c, 2) = cp.D(c, 1);
    }
  }
  return f;
}

namespace {

// Intermediates per component c: z[5c + j] for j = th1, th2, d1 th1,
// sym(d2 th1, d1 th2), d2 th2, all linear in the local DOFs.
using Rows5 = Eigen::Matrix<double, 5, 9>;

Rows5 intermediate_rows(const BasisEval& b) {
  Rows5 R;
  R.row(0) = b.theta.row(0);
  R.row(1) = b.theta.row(1);
  R.row(2) = b.dtheta.row(0);
  R.row(3) = 0.5 * (b.dtheta.row(1) + b.dtheta.row(2));
  R.row(4) = b.dtheta.row(3);
  return R;
}

using Z15 = Eigen::Matrix<double, 15, 1>;

Z15 intermediates(const Rows5& R, const std::array<Local9, 3>& l) {
  Z15 z;
  for (int c = 0; c < 3; ++c) z.segment<5>(5 * c) = R * l[c];
  return z;
}

std::array<Local9, 3> local_dofs(const TriMesh& mesh, const DktField& psi, int t) {
  return {psi.local(mesh, t, 0), psi.local(mesh, t, 1), psi.local(mesh, t, 2)};
}

inline double val(double x) { return x; }
template <class D>
double val(const Eigen::AutoDiffScalar<D>& x) {
  return val(x.value());
}

struct Parts {
  double membrane = 0.0;
  double bending = 0.0;
  bool valid = true;
};

// Membrane and bending densities per unit hardness (mu = lambda = 2/5).
template <class T>
void densities(const T* z, const ShellGeometry::Point& P, BendingNorm norm, T& mem, T& bend, bool& valid) {
  using std::log;
  using std::sqrt;
  auto vec = [&](int j) { return std::array<T, 3>{z[j], z[5 + j], z[10 + j]}; };
  auto dot = [](const std::array<T, 3>& a, const std::array<T, 3>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
  const auto t1 = vec(0), t2 = vec(1), s11 = vec(2), s12 = vec(3), s22 = vec(4);
  const T g11 = dot(t1, t1), g12 = dot(t1, t2), g22 = dot(t2, t2);
  const Eigen::Matrix2d& Gi = P.Gi;
  const T trF = Gi(0, 0) * g11 + 2.0 * Gi(0, 1) * g12 + Gi(1, 1) * g22;
  const T detF = (g11 * g22 - g12 * g12) / (P.sqrt_det * P.sqrt_det);
  const std::array<T, 3> c = {t1[1] * t2[2] - t1[2] * t2[1], t1[2] * t2[0] - t1[0] * t2[2],
                              t1[0] * t2[1] - t1[1] * t2[0]};
  const T cc = dot(c, c);
  valid = val(detF) > 0.0 && val(cc) > 0.0;
  if (!valid) return;
  const double mu = 0.4, lam = 0.4;
  mem = 0.5 * mu * (trF - 2.0) + 0.25 * lam * (detF - 1.0) - (0.5 * mu + 0.25 * lam) * log(detF);
  const T inv = 1.0 / sqrt(cc);
  const T D00 = dot(c, s11) * inv - P.A(0, 0);
  const T D01 = dot(c, s12) * inv - P.A(0, 1);
  const T D11 = dot(c, s22) * inv - P.A(1, 1);
  const T M00 = Gi(0, 0) * D00 + Gi(0, 1) * D01;
  const T M01 = Gi(0, 0) * D01 + Gi(0, 1) * D11;
  const T M10 = Gi(1, 0) * D00 + Gi(1, 1) * D01;
  const T M11 = Gi(1, 0) * D01 + Gi(1, 1) * D11;
  bend = M00 * M00 + M01 * M01 + M10 * M10 + M11 * M11;
  if (norm == BendingNorm::Unsquared) bend = sqrt(bend);
}

Parts parts_at(const Z15& z, const ShellGeometry::Point& P, BendingNorm norm) {
  Parts p;
  densities<double>(z.data(), P, norm, p.membrane, p.bending, p.valid);
  return p;
}

using G15 = Eigen::AutoDiffScalar<Z15>;
using H15 = Eigen::AutoDiffScalar<Eigen::Matrix<G15, 15, 1>>;

// Unit-hardness density delta mem + delta^3 bend with its gradient.
bool density_gradient(const Z15& z, const ShellGeometry::Point& P, double delta, double& value, Z15& grad) {
  std::array<G15, 15> x;
  for (int i = 0; i < 15; ++i) x[i] = G15(z[i], 15, i);
  G15 mem, bend;
  bool valid = true;
  densities<G15>(x.data(), P, BendingNorm::Squared, mem, bend, valid);
  if (!valid) return false;
  const G15 w = delta * mem + delta * delta * delta * bend;
  value = w.value();
  grad = w.derivatives();
  return true;
}

bool density_hessian(const Z15& z, const ShellGeometry::Point& P, double delta, Z15& grad,
                     Eigen::Matrix<double, 15, 15>& hess) {
  std::array<H15, 15> x;
  for (int i = 0; i < 15; ++i) {
    x[i].value() = G15(z[i], 15, i);
    for (int k = 0; k < 15; ++k) x[i].derivatives()(k) = G15(k == i ? 1.0 : 0.0, Z15::Zero());
  }
  H15 mem, bend;
  bool valid = true;
  densities<H15>(x.data(), P, BendingNorm::Squared, mem, bend, valid);
  if (!valid) return false;
  const H15 w = delta * mem + delta * delta * delta * bend;
  grad = w.value().derivatives();
  for (int i = 0; i < 15; ++i) hess.row(i) = w.derivatives()(i).derivatives().transpose();
  return true;
}

// Scatter of a local gradient in z to the three Local9 blocks.
void add_local_gradient(const Rows5& R, const Z15& gz, double weight, std::array<Local9, 3>& out) {
  for (int c = 0; c < 3; ++c) out[c] += weight * R.transpose() * gz.segment<5>(5 * c);
}

}  // namespace

ShellGeometry::ShellGeometry(TriMesh mesh, ChartKind chart) : mesh_(std::move(mesh)), chart_(chart) {
  reference_ = chart_interpolant(mesh_, chart_);
  const QuadRule& rule = triangle_rule_12();
  tables_.reserve(mesh_.n_triangles());
  points_.resize(static_cast<std::size_t>(mesh_.n_triangles()) * 12);
  mass_.assign(mesh_.n_vertices(), 0.0);
  for (int t = 0; t < mesh_.n_triangles(); ++t) {
    tables_.push_back(tabulate(mesh_, t, rule));
    const auto l = local_dofs(mesh_, reference_, t);
    for (int q = 0; q < rule.size(); ++q) {
      const Z15 z = intermediates(intermediate_rows(tables_[t].basis[q]), l);
      Eigen::Matrix<double, 3, 2> Th;
      std::array<Eigen::Vector3d, 3> S;
      for (int c = 0; c < 3; ++c) {
        Th(c, 0) = z[5 * c];
        Th(c, 1) = z[5 * c + 1];
        for (int k = 0; k < 3; ++k) S[k][c] = z[5 * c + 2 + k];
      }
      Point& P = points_[static_cast<std::size_t>(t) * 12 + q];
      P.G = Th.transpose() * Th;
      const double det = P.G.determinant();
      if (!(det > 0.0)) throw DegenerateMetric("discrete reference metric is degenerate on triangle " + std::to_string(t));
      P.Gi = P.G.inverse();
      P.sqrt_det = std::sqrt(det);
      const Eigen::Vector3d n = Th.col(0).cross(Th.col(1)).normalized();
      P.A << n.dot(S[0]), n.dot(S[1]), n.dot(S[1]), n.dot(S[2]);
      const double wq = tables_[t].area * rule.weights[q] * P.sqrt_det;
      for (int i = 0; i < 3; ++i) mass_[mesh_.triangles[t][i]] += wq * rule.bary[q][i];
    }
  }
}

double ShellGeometry::surface_area() const {
  double s = 0.0;
  for (double m : mass_) s += m;
  return s;
}

double membrane_density(double mu, double lambda, const Eigen::Matrix2d& F) {
  const double det = F.determinant();
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  // Grouped so that F = I evaluates to exactly zero.
  return 0.5 * mu * (F.trace() - 2.0) + 0.25 * lambda * (det - 1.0) - (0.5 * mu + 0.25 * lambda) * std::log(det);
}

namespace {

template <class F>
void for_points(const ShellGeometry& geom, const DktField& psi, F&& f) {
  const QuadRule& rule = triangle_rule_12();
  const TriMesh& mesh = geom.mesh();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto l = local_dofs(mesh, psi, t);
    const ElementTable& tab = geom.table(t);
    for (int q = 0; q < rule.size(); ++q) {
      const Rows5 R = intermediate_rows(tab.basis[q]);
      const ShellGeometry::Point& P = geom.point(t, q);
      f(t, q, tab.area * rule.weights[q] * P.sqrt_det, R, intermediates(R, l), P);
    }
  }
}

}  // namespace

double membrane_energy(const ShellGeometry& geom, const QuadField& B, const DktField& psi) {
  double e = 0.0;
  for_points(geom, psi, [&](int t, int q, double wt, const Rows5&, const Z15& z, const ShellGeometry::Point& P) {
    const Parts p = parts_at(z, P, BendingNorm::Squared);
    if (!p.valid) throw InvertedElement("det F <= 0 at a quadrature point", t);
    e += wt * B.at(t, q) * p.membrane;
  });
  return e;
}

double shell_bending_energy(const ShellGeometry& geom, const QuadField& B, const DktField& psi, BendingNorm norm) {
  double e = 0.0;
  for_points(geom, psi, [&](int t, int q, double wt, const Rows5&, const Z15& z, const ShellGeometry::Point& P) {
    const Parts p = parts_at(z, P, norm);
    if (!p.valid) throw InvertedElement("degenerate tangent plane at a quadrature point", t);
    e += wt * B.at(t, q) * p.bending;
  });
  return e;
}

namespace {

// Total stored energy; +inf for inverted configurations.
double energy_or_inf(const ShellGeometry& geom, const ShellProblem& pr, const DktField& psi) {
  const double d3 = pr.delta * pr.delta * pr.delta;
  double e = 0.0;
  bool ok = true;
  for_points(geom, psi, [&](int t, int q, double wt, const Rows5&, const Z15& z, const ShellGeometry::Point& P) {
    if (!ok) return;
    const Parts p = parts_at(z, P, BendingNorm::Squared);
    if (!p.valid) {
      ok = false;
      return;
    }
    e += wt * pr.B.at(t, q) * (pr.delta * p.membrane + d3 * p.bending);
  });
  return ok ? e : std::numeric_limits<double>::infinity();
}

// Gradient of the stored energy; false for inverted configurations.
bool energy_gradient(const ShellGeometry& geom, const ShellProblem& pr, const DktField& psi, std::vector<double>& g) {
  const TriMesh& mesh = geom.mesh();
  g.assign(psi.dofs.size(), 0.0);
  bool ok = true;
  int current = -1;
  std::array<Local9, 3> acc;
  auto flush = [&]() {
    if (current < 0) return;
    const auto& T = mesh.triangles[current];
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) g[DktField::index(T[i], c, k, 3)] += acc[c][3 * i + k];
  };
  for_points(geom, psi, [&](int t, int q, double wt, const Rows5& R, const Z15& z, const ShellGeometry::Point& P) {
    if (!ok) return;
    if (t != current) {
      flush();
      current = t;
      for (auto& a : acc) a.setZero();
    }
    double w = 0.0;
    Z15 gz;
    if (!density_gradient(z, P, pr.delta, w, gz)) {
      ok = false;
      return;
    }
    add_local_gradient(R, gz, wt * pr.B.at(t, q), acc);
  });
  if (ok) flush();
  return ok;
}

}  // namespace

double shell_energy(const ShellGeometry& geom, const ShellProblem& problem, const DktField& psi) {
  const double e = energy_or_inf(geom, problem, psi);
  if (!std::isfinite(e)) throw InvertedElement("inverted configuration", -1);
  return e;
}

std::vector<double> shell_energy_gradient(const ShellGeometry& geom, const ShellProblem& problem,
                                          const DktField& psi) {
  std::vector<double> g;
  if (!energy_gradient(geom, problem, psi, g)) throw InvertedElement("inverted configuration", -1);
  return g;
}

std::vector<double> shell_load_vector(const ShellGeometry& geom, const QuadField& f) {
  QuadField weighted = f;
  const QuadRule& rule = triangle_rule_12();
  for (int t = 0; t < geom.mesh().n_triangles(); ++t)
    for (int q = 0; q < rule.size(); ++q)
      for (int c = 0; c < f.components; ++c)
        weighted.values[(static_cast<std::size_t>(t) * f.points_per_triangle + q) * f.components + c] *=
            geom.point(t, q).sqrt_det;
  return load_vector(geom.mesh(), weighted);
}

ShellState ShellState::reference(const ShellGeometry& geom) {
  ShellState s;
  s.psi = geom.reference();
  s.converged = true;
  return s;
}

namespace {

std::vector<char> free_nodes(const TriMesh& mesh) {
  std::vector<char> f(mesh.n_vertices());
  for (int p = 0; p < mesh.n_vertices(); ++p) f[p] = !mesh.dirichlet[p];
  return f;
}

// Hessian of the stored energy on the free nodes (9 DOFs each).
void assemble_hessian(const ShellGeometry& geom, const ShellProblem& pr, const DktField& psi,
                      const std::vector<char>& free, BlockSymmetricMatrix& H) {
  const TriMesh& mesh = geom.mesh();
  const QuadRule& rule = triangle_rule_12();
  H.set_zero();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    if (!free[T[0]] && !free[T[1]] && !free[T[2]]) continue;
    const auto l = local_dofs(mesh, psi, t);
    const ElementTable& tab = geom.table(t);
    Eigen::Matrix<double, 27, 27> K = Eigen::Matrix<double, 27, 27>::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const Rows5 R = intermediate_rows(tab.basis[q]);
      const ShellGeometry::Point& P = geom.point(t, q);
      Z15 gz;
      Eigen::Matrix<double, 15, 15> hz;
      if (!density_hessian(intermediates(R, l), P, pr.delta, gz, hz))
        throw InvertedElement("inverted configuration in the Hessian", t);
      const double wt = tab.area * rule.weights[q] * P.sqrt_det * pr.B.at(t, q);
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const Eigen::Matrix<double, 9, 9> L = R.transpose() * hz.block<5, 5>(5 * c, 5 * d) * R;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              K.block<3, 3>(9 * i + 3 * c, 9 * j + 3 * d) += wt * L.block<3, 3>(3 * i, 3 * j);
        }
    }
    for (int i = 0; i < 3; ++i) {
      if (!free[T[i]]) continue;
      for (int j = i; j < 3; ++j) {
        if (!free[T[j]]) continue;
        H.add_block(T[i], T[j], K.block<9, 9>(9 * i, 9 * j));
      }
    }
  }
}

// Factorizes H, adding a growing multiple of the identity until the
// Cholesky factorization succeeds. Returns the shift used.
double factorize_shifted(BlockSymmetricMatrix& H, SymmetricSolver& solver) {
  if (solver.factorize(H.upper(), true)) return 0.0;
  const double base = std::max(H.mean_abs_diagonal(), 1e-300) * 1e-8;
  double shift = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double next = base * std::pow(8.0, k);
    H.add_diagonal(next - shift);
    shift = next;
    if (solver.factorize(H.upper(), true)) return shift;
  }
  throw NonConvergence("shifted shell Hessian could not be factorized");
}

double inf_norm_free(const std::vector<double>& r, const TriMesh& mesh) {
  double m = 0.0;
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (!mesh.dirichlet[p])
      for (int j = 0; j < 9; ++j) m = std::max(m, std::abs(r[9 * p + j]));
  return m;
}

struct NewtonContext {
  const ShellGeometry& geom;
  const ShellProblem& pr;
  const std::vector<double>& F;
  std::vector<char> free;
  BlockSymmetricMatrix H;
  SymmetricSolver solver;
  double floor = 0.0;  // absolute residual floor
};

double potential(NewtonContext& ctx, const DktField& psi, double s) {
  const double e = energy_or_inf(ctx.geom, ctx.pr, psi);
  if (!std::isfinite(e)) return e;
  double w = 0.0;
  const auto& ref = ctx.geom.reference().dofs;
  for (std::size_t i = 0; i < ctx.F.size(); ++i) w += ctx.F[i] * (psi.dofs[i] - ref[i]);
  return e - s * w;
}

bool residual(NewtonContext& ctx, const DktField& psi, double s, std::vector<double>& r) {
  if (!energy_gradient(ctx.geom, ctx.pr, psi, r)) return false;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s * ctx.F[i];
  return true;
}

bool newton_at_load(NewtonContext& ctx, double s, const ShellOptions& opt, ShellState& st) {
  const TriMesh& mesh = ctx.geom.mesh();
  double fmax = 0.0;
  for (double x : ctx.F) fmax = std::max(fmax, std::abs(s * x));
  const double target = std::max(opt.tol * fmax, ctx.floor);
  st.history.clear();
  std::vector<double> r;
  if (!residual(ctx, st.psi, s, r)) return false;
  double res = inf_norm_free(r, mesh);
  for (int it = 0; it < opt.max_iters; ++it) {
    st.history.push_back(res);
    if (res <= target) return true;
    assemble_hessian(ctx.geom, ctx.pr, st.psi, ctx.free, ctx.H);
    const double shift = factorize_shifted(ctx.H, ctx.solver);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ctx.H.size());
    for (int p = 0; p < mesh.n_vertices(); ++p)
      if (ctx.free[p])
        for (int j = 0; j < 9; ++j) rhs[ctx.H.offset(p) + j] = -r[9 * p + j];
    const Eigen::VectorXd dx = ctx.solver.solve(rhs);
    if (!dx.allFinite()) return false;
    double slope = 0.0;
    std::vector<double> step(st.psi.dofs.size(), 0.0);
    for (int p = 0; p < mesh.n_vertices(); ++p)
      if (ctx.free[p])
        for (int j = 0; j < 9; ++j) {
          step[9 * p + j] = dx[ctx.H.offset(p) + j];
          slope += r[9 * p + j] * step[9 * p + j];
        }
    const double p0 = potential(ctx, st.psi, s);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      ShellState trial = st;
      for (std::size_t i = 0; i < step.size(); ++i) trial.psi.dofs[i] += alpha * step[i];
      const double p1 = potential(ctx, trial.psi, s);
      std::vector<double> rn;
      const bool finite = std::isfinite(p1) && residual(ctx, trial.psi, s, rn);
      if (finite) {
        const double rn_norm = inf_norm_free(rn, mesh);
        // Near the solution the potential stalls at rounding level; the
        // unshifted full step is then judged by the residual.
        const bool armijo = p1 <= p0 + 1e-4 * alpha * slope;
        const bool roundoff = shift == 0.0 && alpha == 1.0 && rn_norm < 0.5 * res &&
                              std::abs(p1 - p0) <= 1e-10 * std::max(std::abs(p0), 1e-300);
        if (armijo || roundoff) {
          st.psi = std::move(trial.psi);
          r = std::move(rn);
          res = rn_norm;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    ++st.iterations;
    if (!accepted) return false;
  }
  st.history.push_back(res);
  return res <= target;
}

}  // namespace

ShellState newton_solve_shell(const ShellGeometry& geom, const ShellProblem& problem, const ShellState& init,
                              const ShellOptions& opt) {
  if (!(problem.delta > 0.0)) throw ConfigError("delta must be positive", 0);
  const TriMesh& mesh = geom.mesh();
  const std::vector<double> F = shell_load_vector(geom, problem.f);
  EdgeTopology topo = build_topology(mesh);
  NewtonContext ctx{geom, problem, F, free_nodes(mesh), BlockSymmetricMatrix(free_nodes(mesh), topo.vertex_neighbors, 9),
                    SymmetricSolver(), 0.0};
  double bmax = 0.0;
  for (double b : problem.B.values) bmax = std::max(bmax, std::abs(b));
  // Rounding level of the stored-energy gradient.
  ctx.floor = 1e-13 * problem.delta * bmax * geom.surface_area();

  ShellState st = init;
  st.iterations = 0;
  st.converged = false;
  // Dirichlet nodes follow the reference chart.
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (mesh.dirichlet[p])
      for (int j = 0; j < 9; ++j) st.psi.dofs[9 * p + j] = geom.reference().dofs[9 * p + j];

  if (opt.warm_start) {
    ShellState trial = st;
    if (newton_at_load(ctx, 1.0, opt, trial)) {
      trial.converged = true;
      return trial;
    }
    st.iterations = trial.iterations;
  }

  ShellState cur = ShellState::reference(geom);
  cur.converged = false;
  cur.iterations = st.iterations;
  double s_done = 0.0;
  const int N = std::max(1, opt.continuation_steps);
  for (int k = 1; k <= N; ++k) {
    const double target = std::pow(2.0, k - N);
    int depth = 0;
    while (s_done < target) {
      const double s = depth == 0 ? target : s_done + (target - s_done) / std::pow(2.0, depth);
      ShellState trial = cur;
      if (newton_at_load(ctx, s, opt, trial)) {
        cur = std::move(trial);
        s_done = s;
        depth = 0;
      } else {
        cur.iterations = trial.iterations;
        if (++depth > opt.max_bisections) {
          cur.converged = false;
          cur.history = trial.history;
          return cur;
        }
      }
    }
  }
  cur.converged = true;
  return cur;
}

double shell_compliance(const ShellGeometry& geom, const ShellProblem& problem, const ShellState& state) {
  const std::vector<double> F = shell_load_vector(geom, problem.f);
  const auto& ref = geom.reference().dofs;
  double s = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) s += F[i] * (state.psi.dofs[i] - ref[i]);
  return s;
}

double max_displacement(const ShellGeometry& geom, const ShellState& state) {
  double m = 0.0;
  for (int p = 0; p < geom.mesh().n_vertices(); ++p) {
    Eigen::Vector3d d;
    for (int c = 0; c < 3; ++c) d[c] = state.psi(p, c, 0) - geom.reference()(p, c, 0);
    m = std::max(m, d.norm());
  }
  return m;
}

void ShellDesignProblem::validate(const ShellGeometry& geom) const {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive", 0);
  if (!(eta >= 0.0)) throw ConfigError("eta must be nonnegative", 0);
  if (!(delta > 0.0)) throw ConfigError("delta must be positive", 0);
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("hardness values must be positive", 0);
  if (!(volume > 0.0) || volume > geom.surface_area() * (1.0 + 1e-12))
    throw ConfigError("target area must lie in (0, surface area]", 0);
  if (!force) throw ConfigError("missing force", 0);
}

ShellProblem shell_problem_for(const ShellGeometry& geom, const ShellDesignProblem& design,
                               const std::vector<double>& v) {
  ShellProblem p;
  p.B = material_at_quadrature(geom.mesh(), v, design.a, design.b);
  p.f = quad_field_from_function(geom.mesh(), 3, design.force);
  p.delta = design.delta;
  return p;
}

double surface_hard_area(const ShellGeometry& geom, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += geom.surface_mass()[j] * hard_fraction(v[j]);
  return s;
}

std::vector<double> shell_design_gradient(const ShellGeometry& geom, const ShellDesignProblem& design,
                                          const std::vector<double>& v, const ShellState& state) {
  const TriMesh& mesh = geom.mesh();
  const ShellProblem pr = shell_problem_for(geom, design, v);
  const std::vector<double> F = shell_load_vector(geom, pr.f);

  // Adjoint: H p = -dJ/dpsi = -F on the free DOFs.
  EdgeTopology topo = build_topology(mesh);
  const std::vector<char> free = free_nodes(mesh);
  BlockSymmetricMatrix H(free, topo.vertex_neighbors, 9);
  assemble_hessian(geom, pr, state.psi, free, H);
  SymmetricSolver solver;
  if (!solver.factorize(H.upper())) throw SingularSystem("shell adjoint system is singular");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(H.size());
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (free[p])
      for (int j = 0; j < 9; ++j) rhs[H.offset(p) + j] = -F[9 * p + j];
  const Eigen::VectorXd x = solver.solve(rhs);
  DktField adj(mesh.n_vertices(), 3);
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (free[p])
      for (int j = 0; j < 9; ++j) adj.dofs[9 * p + j] = x[H.offset(p) + j];

  std::vector<double> g(v.size(), 0.0);
  if (design.eta != 0.0) {
    g = modica_mortola_gradient(mesh, v, design.eps);
    for (double& y : g) y *= design.eta;
  }
  const QuadRule& rule = triangle_rule_12();
  const double dB = 0.5 * (design.b - design.a);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto l = local_dofs(mesh, state.psi, t);
    const auto lp = local_dofs(mesh, adj, t);
    const ElementTable& tab = geom.table(t);
    const auto& T = mesh.triangles[t];
    for (int q = 0; q < rule.size(); ++q) {
      const Rows5 R = intermediate_rows(tab.basis[q]);
      const ShellGeometry::Point& P = geom.point(t, q);
      double w = 0.0;
      Z15 gz;
      if (!density_gradient(intermediates(R, l), P, pr.delta, w, gz))
        throw InvertedElement("inverted configuration in the design gradient", t);
      const double s = gz.dot(intermediates(R, lp));
      const double coef = tab.area * rule.weights[q] * P.sqrt_det * dB * s;
      for (int i = 0; i < 3; ++i) g[T[i]] += coef * rule.bary[q][i];
    }
  }
  return g;
}

ShellDesignResult optimize_shell_design(const ShellGeometry& geom, const ShellDesignProblem& design,
                                        const std::vector<double>& v0, const ShellDesignOptions& options,
                                        const ShellState* warm) {
  design.validate(geom);
  const TriMesh& mesh = geom.mesh();
  auto evaluate = [&](const std::vector<double>& v, const ShellState& init) {
    const ShellProblem pr = shell_problem_for(geom, design, v);
    DesignSample<ShellState> s;
    s.state = newton_solve_shell(geom, pr, init, options.shell);
    s.ok = s.state.converged;
    if (s.ok) {
      s.compliance = shell_compliance(geom, pr, s.state);
      s.objective = s.compliance + design.eta * modica_mortola(mesh, v, design.eps);
    }
    return s;
  };
  auto gradient = [&](const std::vector<double>& v, const ShellState& state) {
    return shell_design_gradient(geom, design, v, state);
  };
  bool ok = false;
  ShellDesignResult res = projected_descent(geom.surface_mass(), design.volume, v0, options,
                                            warm ? *warm : ShellState::reference(geom), evaluate, gradient, &ok);
  if (!ok) throw NonConvergence("shell state solve failed at the initial design");
  return res;
}

ShellAdaptiveResult adaptive_optimize_shell(const TriMesh& mesh0, ChartKind chart, const ShellDesignProblem& design,
                                            const std::vector<double>& v0, int levels,
                                            const ShellDesignOptions& options, bool update_eps) {
  if (levels < 1) throw ConfigError("levels must be at least 1", 0);
  ShellAdaptiveResult out;
  out.mesh = mesh0;
  out.problem = design;
  std::vector<double> v = v0;
  std::unique_ptr<ShellState> warm;
  for (int level = 0; level < levels; ++level) {
    if (update_eps) out.problem.eps = interface_width(out.mesh, v);
    const ShellGeometry geom(out.mesh, chart);
    out.result = optimize_shell_design(geom, out.problem, v, options, warm.get());
    out.n_triangles.push_back(out.mesh.n_triangles());
    if (level + 1 == levels) break;
    const MarkingReport marks = mark_phase_gradient(out.mesh, out.result.v);
    Refinement r = bisect(out.mesh, marks.marked);
    tag_chart_dirichlet(r.mesh, chart);
    v = prolong_p1(r, out.result.v);
    warm = std::make_unique<ShellState>();
    warm->psi = prolong_dkt(out.mesh, r, out.result.state.psi);
    out.mesh = std::move(r.mesh);
  }
  return out;
}

}  // namespace plateopt
