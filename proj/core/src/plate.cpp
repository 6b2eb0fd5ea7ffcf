#include "plateopt/plate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

#include "plateopt/errors.hpp"

namespace plateopt {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Eigen::Matrix<double, 6, 1> grad_part(const std::vector<double>& x, int node) {
  Eigen::Matrix<double, 6, 1> g;
  for (int c = 0; c < 3; ++c) {
    g[c] = x[DktField::index(node, c, 1, 3)];
    g[3 + c] = x[DktField::index(node, c, 2, 3)];
  }
  return g;
}

void add_grad_part(std::vector<double>& x, int node, const Eigen::Matrix<double, 6, 1>& g) {
  for (int c = 0; c < 3; ++c) {
    x[DktField::index(node, c, 1, 3)] += g[c];
    x[DktField::index(node, c, 2, 3)] += g[3 + c];
  }
}

Eigen::Matrix<double, 3, 6> constraint_jacobian(const DktField& w, int node) {
  Eigen::Vector3d a(1.0, 0.0, 0.0), b(0.0, 1.0, 0.0);
  for (int c = 0; c < 3; ++c) {
    a[c] += w(node, c, 1);
    b[c] += w(node, c, 2);
  }
  Eigen::Matrix<double, 3, 6> C = Eigen::Matrix<double, 3, 6>::Zero();
  C.block<1, 3>(0, 0) = 2.0 * a.transpose();
  C.block<1, 3>(1, 3) = 2.0 * b.transpose();
  C.block<1, 3>(2, 0) = b.transpose();
  C.block<1, 3>(2, 3) = a.transpose();
  return C;
}

Eigen::Matrix<double, 6, 6> lambda_hessian(const Eigen::Vector3d& l) {
  Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
  H.block<3, 3>(0, 0).diagonal().setConstant(2.0 * l[0]);
  H.block<3, 3>(3, 3).diagonal().setConstant(2.0 * l[1]);
  H.block<3, 3>(0, 3).diagonal().setConstant(l[2]);
  H.block<3, 3>(3, 0).diagonal().setConstant(l[2]);
  return H;
}

}  // namespace

QuadField constant_field(const TriMesh& mesh, const std::vector<double>& value) {
  const int nc = static_cast<int>(value.size());
  return quad_field_from_function(mesh, nc, [&](const Eigen::Vector2d&, double* o) {
    for (int c = 0; c < nc; ++c) o[c] = value[c];
  });
}

QuadField indicator_hardness(const TriMesh& mesh, double a, double b,
                             const std::function<bool(const Eigen::Vector2d&)>& hard) {
  return quad_field_from_function(mesh, 1, [&](const Eigen::Vector2d& x, double* o) { o[0] = hard(x) ? b : a; });
}

PlateState PlateState::zero(const TriMesh& mesh) {
  PlateState s;
  s.w = DktField(mesh.n_vertices(), 3);
  s.lambda.assign(mesh.n_vertices(), Eigen::Vector3d::Zero());
  return s;
}

Eigen::Vector3d nodal_constraints(const DktField& w, int node) {
  const IsometryResidual r = isometry_residual_at(w, node);
  return {r.g11, r.g22, r.g12};
}

double max_constraint_violation(const TriMesh& mesh, const DktField& w) {
  double m = 0.0;
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (!mesh.dirichlet[p]) m = std::max(m, nodal_constraints(w, p).cwiseAbs().maxCoeff());
  return m;
}

std::vector<Matrix9> plate_stiffness(const TriMesh& mesh, const PlateProblem& problem) {
  std::vector<Matrix9> K = element_stiffness(mesh, problem.B, problem.scale);
  if (problem.affine_right_penalty <= 0.0) return K;
  double xmax = -std::numeric_limits<double>::infinity();
  for (const auto& v : mesh.vertices) xmax = std::max(xmax, v.x());
  const EdgeTopology topo = build_topology(mesh);
  const double kappa = problem.affine_right_penalty;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    if (!topo.is_boundary_edge(static_cast<int>(e))) continue;
    const int a = topo.edges[e][0], b = topo.edges[e][1];
    if (std::abs(mesh.vertices[a].x() - xmax) > 1e-12 || std::abs(mesh.vertices[b].x() - xmax) > 1e-12) continue;
    const int t = topo.edge_triangles[e][0];
    const auto& T = mesh.triangles[t];
    int la = 0, lb = 0;
    for (int i = 0; i < 3; ++i) {
      if (T[i] == a) la = i;
      if (T[i] == b) lb = i;
    }
    const double dy = mesh.vertices[b].y() - mesh.vertices[a].y();
    std::array<Local9, 3> rows;
    for (auto& r : rows) r.setZero();
    // Constant gradient along the edge.
    rows[0][3 * lb + 1] = 1.0;
    rows[0][3 * la + 1] = -1.0;
    rows[1][3 * lb + 2] = 1.0;
    rows[1][3 * la + 2] = -1.0;
    // Value consistent with the constant tangential derivative.
    rows[2][3 * lb] = 1.0 / dy;
    rows[2][3 * la] = -1.0 / dy;
    rows[2][3 * la + 2] = -0.5;
    rows[2][3 * lb + 2] = -0.5;
    for (const auto& r : rows) K[t] += 2.0 * kappa * r * r.transpose();
  }
  return K;
}

std::vector<double> plate_residual(const TriMesh& mesh, const std::vector<Matrix9>& K, const std::vector<double>& F,
                                   const PlateState& state, double load_fraction) {
  std::vector<double> r;
  apply_stiffness(mesh, K, 3, state.w.dofs, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= load_fraction * F[i];
  for (int p = 0; p < mesh.n_vertices(); ++p) {
    if (mesh.dirichlet[p]) {
      for (int j = 0; j < 9; ++j) r[9 * p + j] = 0.0;
      continue;
    }
    add_grad_part(r, p, constraint_jacobian(state.w, p).transpose() * state.lambda[p]);
  }
  return r;
}

PlateKkt::PlateKkt(const TriMesh& mesh, const std::vector<Matrix9>& K, const PlateState& state, bool convexify)
    : mesh_(mesh), K_(K), lambda_(state.lambda) {
  const int n = mesh.n_vertices();
  free_.resize(n);
  C_.resize(n);
  Z_.resize(n);
  CCt_inv_.resize(n);
  std::vector<int> rank_deficient;
  for (int p = 0; p < n; ++p) {
    free_[p] = !mesh.dirichlet[p];
    if (!free_[p]) continue;
    C_[p] = constraint_jacobian(state.w, p);
    // The last columns of Q in C^T = Q R span the kernel of C.
    const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 3>> qr(C_[p].transpose());
    const auto R = qr.matrixQR().diagonal().cwiseAbs();
    if (!(R[2] > 1e-10 * R[0])) rank_deficient.push_back(p);
    Z_[p] = Eigen::Matrix<double, 6, 6>(qr.householderQ()).rightCols<3>();
    CCt_inv_[p] = (C_[p] * C_[p].transpose()).inverse();
  }
  if (!rank_deficient.empty()) throw SingularKKT("constraint Jacobian lost rank", rank_deficient);

  const EdgeTopology topo = build_topology(mesh);
  reduced_ = std::make_unique<BlockSymmetricMatrix>(free_, topo.vertex_neighbors, 6);
  // Map from reduced to full node DOFs: values stay, gradients via Z.
  auto Tmat = [&](int p) {
    Eigen::Matrix<double, 9, 6> T = Eigen::Matrix<double, 9, 6>::Zero();
    for (int c = 0; c < 3; ++c) {
      T(3 * c, c) = 1.0;
      T.block<1, 3>(3 * c + 1, 3) = Z_[p].row(c);
      T.block<1, 3>(3 * c + 2, 3) = Z_[p].row(3 + c);
    }
    return T;
  };
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& Tr = mesh.triangles[t];
    std::array<Eigen::Matrix<double, 9, 6>, 3> Ts;
    for (int i = 0; i < 3; ++i)
      if (free_[Tr[i]]) Ts[i] = Tmat(Tr[i]);
    for (int i = 0; i < 3; ++i) {
      if (!free_[Tr[i]]) continue;
      for (int j = i; j < 3; ++j) {
        if (!free_[Tr[j]]) continue;
        Eigen::Matrix<double, 9, 9> H = Eigen::Matrix<double, 9, 9>::Zero();
        for (int c = 0; c < 3; ++c) H.block<3, 3>(3 * c, 3 * c) = K[t].block<3, 3>(3 * i, 3 * j);
        const Eigen::Matrix<double, 6, 6> R = Ts[i].transpose() * H * Ts[j];
        reduced_->add_block(Tr[i], Tr[j], R);
      }
    }
  }
  for (int p = 0; p < n; ++p) {
    if (!free_[p]) continue;
    Eigen::Matrix<double, 6, 6> R = Eigen::Matrix<double, 6, 6>::Zero();
    R.block<3, 3>(3, 3) = Z_[p].transpose() * lambda_hessian(lambda_[p]) * Z_[p];
    reduced_->add_block(p, p, R);
  }
  reduced_->scale_diagonal(1.0 + 1e-12);
  if (convexify) {
    const double base = std::max(reduced_->mean_abs_diagonal(), 1e-300);
    double delta = 0.0;
    for (int k = 0; k < 30; ++k) {
      if (solver_.factorize(reduced_->upper(), true)) {
        shift_ = delta;
        return;
      }
      const double next = delta == 0.0 ? 1e-6 * base : 8.0 * delta;
      reduced_->add_diagonal(next - delta);
      delta = next;
    }
    throw SingularKKT("reduced Hessian could not be convexified", {});
  }
  if (!solver_.factorize(reduced_->upper())) throw SingularKKT("reduced Hessian factorization failed", {});
}

void PlateKkt::apply_hessian(const std::vector<double>& x, std::vector<double>& y) const {
  apply_stiffness(mesh_, K_, 3, x, y);
  for (int p = 0; p < mesh_.n_vertices(); ++p)
    if (free_[p]) add_grad_part(y, p, lambda_hessian(lambda_[p]) * grad_part(x, p));
}

void PlateKkt::solve_once(const std::vector<double>& r, const std::vector<Eigen::Vector3d>& g, std::vector<double>& x,
                     std::vector<Eigen::Vector3d>& l) const {
  const int n = mesh_.n_vertices();
  std::vector<double> xp(r.size(), 0.0);
  for (int p = 0; p < n; ++p)
    if (free_[p]) add_grad_part(xp, p, C_[p].transpose() * (CCt_inv_[p] * g[p]));
  std::vector<double> Hx;
  apply_hessian(xp, Hx);
  Eigen::VectorXd rhs(reduced_->size());
  for (int p = 0; p < n; ++p) {
    if (!free_[p]) continue;
    const int o = reduced_->offset(p);
    for (int c = 0; c < 3; ++c) rhs[o + c] = r[9 * p + 3 * c] - Hx[9 * p + 3 * c];
    Eigen::Matrix<double, 6, 1> gr = grad_part(r, p) - grad_part(Hx, p);
    rhs.segment<3>(o + 3) = Z_[p].transpose() * gr;
  }
  const Eigen::VectorXd z = solver_.solve(rhs);
  x = xp;
  for (int p = 0; p < n; ++p) {
    if (!free_[p]) {
      for (int j = 0; j < 9; ++j) x[9 * p + j] = 0.0;
      continue;
    }
    const int o = reduced_->offset(p);
    for (int c = 0; c < 3; ++c) x[9 * p + 3 * c] += z[o + c];
    add_grad_part(x, p, Z_[p] * z.segment<3>(o + 3));
  }
  apply_hessian(x, Hx);
  l.assign(n, Eigen::Vector3d::Zero());
  for (int p = 0; p < n; ++p)
    if (free_[p]) l[p] = CCt_inv_[p] * (C_[p] * (grad_part(r, p) - grad_part(Hx, p)));
}

void PlateKkt::solve(const std::vector<double>& r, const std::vector<Eigen::Vector3d>& g, std::vector<double>& x,
                     std::vector<Eigen::Vector3d>& l) const {
  solve_once(r, g, x, l);
  // Iterative refinement on the full saddle point system.
  const int n = mesh_.n_vertices();
  std::vector<double> Hx, dr(r.size()), dx;
  std::vector<Eigen::Vector3d> dg(n, Eigen::Vector3d::Zero()), dl;
  for (int sweep = 0; sweep < 2; ++sweep) {
    apply_hessian(x, Hx);
    for (std::size_t i = 0; i < r.size(); ++i) dr[i] = r[i] - Hx[i];
    for (int p = 0; p < n; ++p) {
      if (!free_[p]) {
        for (int j = 0; j < 9; ++j) dr[9 * p + j] = 0.0;
        continue;
      }
      const Eigen::Matrix<double, 6, 1> gx = grad_part(x, p);
      add_grad_part(dr, p, -(C_[p].transpose() * l[p]));
      dg[p] = g[p] - C_[p] * gx;
    }
    solve_once(dr, dg, dx, dl);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    for (int p = 0; p < n; ++p) l[p] += dl[p];
  }
}

namespace {

struct Merit {
  double res = 0.0;    // |grad_w L|
  double gmax = 0.0;   // max |G|
  double gnorm = 0.0;  // |G|
  double scale = 0.0;
  double value() const { return res * res + gnorm * gnorm; }
};

Merit evaluate_merit(const TriMesh& mesh, const std::vector<Matrix9>& K, const std::vector<double>& F,
                     const PlateState& st, double s, std::vector<double>* residual) {
  Merit m;
  std::vector<double> r = plate_residual(mesh, K, F, st, s);
  m.res = norm2(r);
  double g2 = 0.0;
  for (int p = 0; p < mesh.n_vertices(); ++p) {
    if (mesh.dirichlet[p]) continue;
    const Eigen::Vector3d G = nodal_constraints(st.w, p);
    g2 += G.squaredNorm();
    m.gmax = std::max(m.gmax, G.cwiseAbs().maxCoeff());
  }
  m.gnorm = std::sqrt(g2);
  std::vector<double> Kw;
  apply_stiffness(mesh, K, 3, st.w.dofs, Kw);
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (mesh.dirichlet[p])
      for (int j = 0; j < 9; ++j) Kw[9 * p + j] = 0.0;
  m.scale = std::max({norm2(Kw), s * norm2(F), 1e-300});
  if (residual) *residual = std::move(r);
  return m;
}

// Exact-penalty merit E - sF + rho |G|_1 and the slope of the smooth part.
struct Penalty {
  double smooth = 0.0;
  double g1 = 0.0;
  double value(double rho) const { return smooth + rho * g1; }
};

Penalty evaluate_penalty(const TriMesh& mesh, const std::vector<Matrix9>& K, const std::vector<double>& F,
                         const DktField& w, double s, std::vector<double>* gradient) {
  Penalty p;
  std::vector<double> Kw;
  apply_stiffness(mesh, K, 3, w.dofs, Kw);
  for (std::size_t i = 0; i < Kw.size(); ++i) p.smooth += w.dofs[i] * (0.5 * Kw[i] - s * F[i]);
  for (int n = 0; n < mesh.n_vertices(); ++n)
    if (!mesh.dirichlet[n]) p.g1 += nodal_constraints(w, n).lpNorm<1>();
  if (gradient) {
    for (std::size_t i = 0; i < Kw.size(); ++i) Kw[i] -= s * F[i];
    for (int n = 0; n < mesh.n_vertices(); ++n)
      if (mesh.dirichlet[n])
        for (int j = 0; j < 9; ++j) Kw[9 * n + j] = 0.0;
    *gradient = std::move(Kw);
  }
  return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<Eigen::Vector3d> negative_constraints(const TriMesh& mesh, const DktField& w) {
  std::vector<Eigen::Vector3d> g(mesh.n_vertices(), Eigen::Vector3d::Zero());
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (!mesh.dirichlet[p]) g[p] = -nodal_constraints(w, p);
  return g;
}

// Newton steps on the saddle point system. Where the reduced Hessian is
// indefinite it is shifted, and steps are globalized with the exact-penalty
// merit so that iterates move away from saddles of the energy; plain Newton
// steps that reduce the KKT residual are accepted directly otherwise.
bool newton_at_load(const TriMesh& mesh, const std::vector<Matrix9>& K, const std::vector<double>& F, double s,
                    const PlateOptions& opt, PlateState& st) {
  st.history.clear();
  std::vector<double> r;
  Merit m = evaluate_merit(mesh, K, F, st, s, &r);
  double rho = 0.0;
  for (int it = 0; it <= opt.max_iters; ++it) {
    st.history.push_back(m.res);
    if (m.res <= opt.newton_tol * m.scale && m.gmax <= opt.constraint_tol) return true;
    if (it == opt.max_iters) break;
    const PlateKkt kkt(mesh, K, st, opt.convexify);
    for (double& v : r) v = -v;
    std::vector<double> dx;
    std::vector<Eigen::Vector3d> dl;
    kkt.solve(r, negative_constraints(mesh, st.w), dx, dl);
    ++st.iterations;

    PlateState trial = st;
    auto set_trial = [&](double alpha, const std::vector<double>* corr) {
      for (std::size_t i = 0; i < dx.size(); ++i)
        trial.w.dofs[i] = st.w.dofs[i] + alpha * dx[i] + (corr ? (*corr)[i] : 0.0);
      for (std::size_t p = 0; p < dl.size(); ++p) trial.lambda[p] = st.lambda[p] + alpha * dl[p];
    };
    bool accepted = false;
    std::vector<double> rt;
    Merit mt;
    if (!opt.convexify) {
      double alpha = 1.0;
      for (int k = 0; k < 12 && !accepted; ++k, alpha *= 0.5) {
        set_trial(alpha, nullptr);
        mt = evaluate_merit(mesh, K, F, trial, s, &rt);
        accepted = std::isfinite(mt.value()) && mt.value() <= (1.0 - 1e-4 * alpha) * m.value();
      }
    } else if (kkt.shift() == 0.0) {
      set_trial(1.0, nullptr);
      mt = evaluate_merit(mesh, K, F, trial, s, &rt);
      accepted = std::isfinite(mt.value()) && mt.value() <= (1.0 - 1e-4) * m.value();
    }
    // Roundoff floor: a full step no longer halves a residual that is already
    // within reach of the tolerance.
    const bool near = m.res <= 1e3 * opt.newton_tol * m.scale && m.gmax <= opt.constraint_tol;
    if (near && kkt.shift() == 0.0 && !(accepted && mt.res <= 0.5 * m.res)) {
      if (accepted && mt.res < m.res && mt.gmax <= opt.constraint_tol) {
        st.w = trial.w;
        st.lambda = trial.lambda;
        st.history.push_back(mt.res);
      }
      return true;
    }
    if (!accepted && opt.convexify) {
      double lmax = 0.0;
      for (std::size_t p = 0; p < dl.size(); ++p) lmax = std::max(lmax, (st.lambda[p] + dl[p]).cwiseAbs().maxCoeff());
      rho = std::max(rho, 2.0 * lmax);
      std::vector<double> grad;
      const Penalty p0 = evaluate_penalty(mesh, K, F, st.w, s, &grad);
      const double phi0 = p0.value(rho);
      const double slope = std::min(dot(grad, dx) - rho * p0.g1, 0.0);
      double alpha = 1.0;
      for (int k = 0; k < 30 && !accepted; ++k, alpha *= 0.5) {
        set_trial(alpha, nullptr);
        const double phi = evaluate_penalty(mesh, K, F, trial.w, s, nullptr).value(rho);
        if (std::isfinite(phi) && phi <= phi0 + 1e-4 * alpha * slope) {
          accepted = true;
        } else if (k == 0) {
          // Second-order correction for the curvature of the constraints.
          std::vector<double> zero(dx.size(), 0.0), corr;
          std::vector<Eigen::Vector3d> lc;
          kkt.solve(zero, negative_constraints(mesh, trial.w), corr, lc);
          set_trial(1.0, &corr);
          const double phic = evaluate_penalty(mesh, K, F, trial.w, s, nullptr).value(rho);
          accepted = std::isfinite(phic) && phic <= phi0 + 1e-4 * slope;
        }
        if (accepted) mt = evaluate_merit(mesh, K, F, trial, s, &rt);
      }
    }
    if (!accepted) {
      // Roundoff floor: the residual cannot be reduced further.
      if (m.res <= 1e3 * opt.newton_tol * m.scale && m.gmax <= opt.constraint_tol) return true;
      return false;
    }
    st.w = trial.w;
    st.lambda = trial.lambda;
    r = std::move(rt);
    m = mt;
  }
  return false;
}

}  // namespace

PlateState newton_solve_plate(const TriMesh& mesh, const PlateProblem& problem, const PlateState& init,
                              const PlateOptions& opt) {
  const std::vector<Matrix9> K = plate_stiffness(mesh, problem);
  const std::vector<double> F = load_vector(mesh, problem.f);
  PlateState st = init;
  if (st.lambda.size() != static_cast<std::size_t>(mesh.n_vertices()))
    st.lambda.assign(mesh.n_vertices(), Eigen::Vector3d::Zero());
  st.iterations = 0;
  st.converged = false;

  if (opt.warm_start) {
    PlateState trial = st;
    if (newton_at_load(mesh, K, F, 1.0, opt, trial)) {
      trial.converged = true;
      return trial;
    }
    st.iterations = trial.iterations;
  }

  // Geometric continuation, bisecting a load step when Newton fails.
  PlateState cur = init;
  if (cur.lambda.size() != static_cast<std::size_t>(mesh.n_vertices()))
    cur.lambda.assign(mesh.n_vertices(), Eigen::Vector3d::Zero());
  cur.iterations = st.iterations;
  double s_done = 0.0;
  const int N = std::max(1, opt.continuation_steps);
  for (int k = 1; k <= N; ++k) {
    const double target = std::pow(2.0, k - N);
    int depth = 0;
    while (s_done < target) {
      const double s = depth == 0 ? target : s_done + (target - s_done) / std::pow(2.0, depth);
      PlateState trial = cur;
      if (newton_at_load(mesh, K, F, s, opt, trial)) {
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

double plate_compliance(const TriMesh& mesh, const PlateProblem& problem, const PlateState& state) {
  return force_energy(mesh, problem.f, state.w);
}

}  // namespace plateopt
