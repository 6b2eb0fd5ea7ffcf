#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "plateopt/diagnostics.hpp"
#include "plateopt/errors.hpp"
#include "plateopt/plate.hpp"

using namespace plateopt;

namespace {

QuadField corner_force(const TriMesh& mesh, double ylo, double yhi) {
  return quad_field_from_function(mesh, 3, [=](const Eigen::Vector2d& x, double* o) {
    o[0] = o[1] = o[2] = 0.0;
    if (x.x() >= 0.9 && x.y() <= ylo + 0.1) {
      o[1] = 50.0;
      o[2] = 1.0;
    }
    if (x.x() >= 0.9 && x.y() >= yhi - 0.1) {
      o[1] = -50.0;
      o[2] = 1.0;
    }
  });
}

// Small random deformation with random multipliers; Dirichlet nodes stay zero.
PlateState random_state(const TriMesh& mesh, std::mt19937_64& rng, double amp) {
  std::normal_distribution<double> N(0.0, 1.0);
  PlateState s = PlateState::zero(mesh);
  for (int p = 0; p < mesh.n_vertices(); ++p) {
    if (mesh.dirichlet[p]) continue;
    for (int j = 0; j < 9; ++j) s.w.dofs[9 * p + j] = amp * N(rng);
    s.lambda[p] = Eigen::Vector3d(N(rng), N(rng), N(rng));
  }
  return s;
}

std::vector<double> random_free(const TriMesh& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> v(9 * mesh.n_vertices(), 0.0);
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (!mesh.dirichlet[p])
      for (int j = 0; j < 9; ++j) v[9 * p + j] = N(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double lagrangian(const TriMesh& mesh, const PlateProblem& pr, const PlateState& s) {
  double L = bending_energy(mesh, pr.B, s.w, pr.scale) - force_energy(mesh, pr.f, s.w);
  for (int p = 0; p < mesh.n_vertices(); ++p)
    if (!mesh.dirichlet[p]) L += s.lambda[p].dot(nodal_constraints(s.w, p));
  return L;
}

DktField axpy(const DktField& w, double a, const std::vector<double>& x) {
  DktField r = w;
  for (std::size_t i = 0; i < x.size(); ++i) r.dofs[i] += a * x[i];
  return r;
}

DktField cylinder(const TriMesh& mesh) {
  return interpolate(mesh, 3, [](const Eigen::Vector2d& x, int c) -> std::array<double, 3> {
    const double s = std::sin(x.x()), co = std::cos(x.x());
    if (c == 0) return {s - x.x(), co - 1.0, 0.0};
    if (c == 1) return {0.0, 0.0, 0.0};
    return {1.0 - co, s, 0.0};
  });
}

}  // namespace

TEST_CASE("zero load gives the zero state at once") {
  const TriMesh m = structured_rect(6, 6, 1.0, 1.0, ClampSide::Left, 0.0);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = constant_field(m, {0.0, 0.0, 0.0});
  const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
  CHECK(s.converged);
  CHECK(s.iterations <= 1);
  for (double v : s.w.dofs) CHECK(v == 0.0);
  for (const auto& l : s.lambda) CHECK(l.norm() == 0.0);
}

TEST_CASE("residual is the gradient of the Lagrangian") {
  const TriMesh m = structured_rect(4, 3, 1.0, 1.0, ClampSide::Left, 0.0);
  std::mt19937_64 rng(3);
  PlateProblem pr;
  pr.B = quad_field_from_function(m, 1, [](const Eigen::Vector2d& x, double* o) { o[0] = 1.0 + x.x() * x.y(); });
  pr.f = quad_field_from_function(m, 3, [](const Eigen::Vector2d& x, double* o) {
    o[0] = x.y();
    o[1] = -1.0;
    o[2] = 2.0 + x.x();
  });
  for (EnergyScale sc : {EnergyScale::AsPrinted, EnergyScale::Half}) {
    pr.scale = sc;
    const auto K = plate_stiffness(m, pr);
    const auto F = load_vector(m, pr.f);
    for (int trial = 0; trial < 5; ++trial) {
      const PlateState s = random_state(m, rng, 0.1);
      const auto r = plate_residual(m, K, F, s, 1.0);
      const auto d = random_free(m, rng);
      const double h = 1e-6;
      PlateState sp = s, sm = s;
      sp.w = axpy(s.w, h, d);
      sm.w = axpy(s.w, -h, d);
      const double fd = (lagrangian(m, pr, sp) - lagrangian(m, pr, sm)) / (2 * h);
      CHECK(std::abs(fd - dot(r, d)) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("Hessian is symmetric and matches the residual derivative") {
  const TriMesh m = structured_rect(5, 4, 1.0, 1.0, ClampSide::Left, 0.0);
  std::mt19937_64 rng(5);
  PlateProblem pr;
  pr.B = constant_field(m, {2.0});
  pr.f = constant_field(m, {0.0, 0.0, 1.0});
  const auto K = plate_stiffness(m, pr);
  const auto F = load_vector(m, pr.f);
  const PlateState s = random_state(m, rng, 0.05);
  const PlateKkt kkt(m, K, s);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_free(m, rng), y = random_free(m, rng);
    std::vector<double> Hx, Hy;
    kkt.apply_hessian(x, Hx);
    kkt.apply_hessian(y, Hy);
    for (int p = 0; p < m.n_vertices(); ++p)
      if (m.dirichlet[p])
        for (int j = 0; j < 9; ++j) Hx[9 * p + j] = Hy[9 * p + j] = 0.0;
    CHECK(std::abs(dot(y, Hx) - dot(x, Hy)) <= 1e-12 * norm(Hx) * norm(y));
    // The residual is quadratic in w, so central differences are exact.
    const double h = 1e-3;
    PlateState sp = s, sm = s;
    sp.w = axpy(s.w, h, x);
    sm.w = axpy(s.w, -h, x);
    const auto rp = plate_residual(m, K, F, sp, 1.0), rm = plate_residual(m, K, F, sm, 1.0);
    std::vector<double> diff(rp.size());
    for (std::size_t i = 0; i < rp.size(); ++i) diff[i] = (rp[i] - rm[i]) / (2 * h) - Hx[i];
    CHECK(norm(diff) <= 1e-9 * norm(Hx));
  }
}

TEST_CASE("KKT solve satisfies both block rows") {
  const TriMesh m = structured_rect(6, 5, 1.0, 1.0, ClampSide::Left, 0.0);
  std::mt19937_64 rng(9);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = constant_field(m, {0.0, 0.0, 0.0});
  const auto K = plate_stiffness(m, pr);
  const std::vector<double> zeroF(9 * m.n_vertices(), 0.0);
  for (double amp : {0.0, 0.05}) {
    PlateState s = random_state(m, rng, amp);
    if (amp == 0.0)
      for (auto& l : s.lambda) l.setZero();
    const PlateKkt kkt(m, K, s);
    const auto r = random_free(m, rng);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<Eigen::Vector3d> g(m.n_vertices(), Eigen::Vector3d::Zero());
    for (int p = 0; p < m.n_vertices(); ++p)
      if (!m.dirichlet[p]) g[p] = Eigen::Vector3d(N(rng), N(rng), N(rng));
    std::vector<double> x;
    std::vector<Eigen::Vector3d> l;
    kkt.solve(r, g, x, l);

    // C x = g via exact central differences of the quadratic constraints.
    const double h = 1e-3;
    const DktField wp = axpy(s.w, h, x), wm = axpy(s.w, -h, x);
    double cerr = 0.0;
    for (int p = 0; p < m.n_vertices(); ++p)
      if (!m.dirichlet[p])
        cerr = std::max(cerr, ((nodal_constraints(wp, p) - nodal_constraints(wm, p)) / (2 * h) - g[p]).norm());
    CHECK(cerr <= 1e-9);

    // H x + C^T l = r, with C^T l taken from the residual's multiplier term.
    std::vector<double> Hx;
    kkt.apply_hessian(x, Hx);
    PlateState with_l = s, without = s;
    with_l.lambda = l;
    for (auto& v : without.lambda) v.setZero();
    const auto a = plate_residual(m, K, zeroF, with_l, 1.0), b = plate_residual(m, K, zeroF, without, 1.0);
    std::vector<double> e(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) e[i] = Hx[i] + (a[i] - b[i]) - r[i];
    for (int p = 0; p < m.n_vertices(); ++p)
      if (m.dirichlet[p])
        for (int j = 0; j < 9; ++j) e[9 * p + j] = 0.0;
    CHECK(norm(e) <= 1e-12 * norm(r));
  }
}

TEST_CASE("rank loss of the constraint Jacobian is reported") {
  const TriMesh m = structured_rect(3, 3, 1.0, 1.0, ClampSide::Left, 0.0);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = constant_field(m, {0.0, 0.0, 0.0});
  const auto K = plate_stiffness(m, pr);
  PlateState s = PlateState::zero(m);
  int bad = -1;
  for (int p = 0; p < m.n_vertices(); ++p)
    if (!m.dirichlet[p]) bad = p;
  // d1 u = 0 at this node.
  s.w(bad, 0, 1) = -1.0;
  try {
    PlateKkt kkt(m, K, s);
    FAIL("expected SingularKKT");
  } catch (const SingularKKT& e) {
    REQUIRE(e.offending_nodes.size() == 1);
    CHECK(e.offending_nodes[0] == bad);
  }
}

TEST_CASE("bending energy is frame indifferent") {
  const TriMesh m = structured_rect(6, 6, 1.0, 1.0, ClampSide::None, 0.0);
  std::mt19937_64 rng(21);
  const QuadField B = constant_field(m, {1.0});
  const PlateState s = random_state(m, rng, 0.2);
  const double E = bending_energy(m, B, s.w);
  std::uniform_real_distribution<double> U(-M_PI, M_PI);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::Matrix3d Q =
        (Eigen::AngleAxisd(U(rng), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(U(rng), Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(U(rng), Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    DktField r = s.w;
    for (int p = 0; p < m.n_vertices(); ++p) {
      Eigen::Vector3d u(m.vertices[p].x(), m.vertices[p].y(), 0.0);
      Eigen::Matrix<double, 3, 2> Du;
      for (int c = 0; c < 3; ++c) {
        u[c] += s.w(p, c, 0);
        Du(c, 0) = (c == 0) + s.w(p, c, 1);
        Du(c, 1) = (c == 1) + s.w(p, c, 2);
      }
      const Eigen::Vector3d v = Q * u;
      const Eigen::Matrix<double, 3, 2> Dv = Q * Du;
      for (int c = 0; c < 3; ++c) {
        r(p, c, 0) = v[c] - (c < 2 ? m.vertices[p][c] : 0.0);
        r(p, c, 1) = Dv(c, 0) - (c == 0);
        r(p, c, 2) = Dv(c, 1) - (c == 1);
      }
    }
    CHECK(std::abs(bending_energy(m, B, r) - E) <= 1e-10 * std::max(1.0, E));
  }
}

TEST_CASE("corner benchmark converges on the flat branch with a quadratic tail") {
  const TriMesh m = structured_rect(32, 32, 1.0, 1.0, ClampSide::Left, 0.0);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = corner_force(m, 0.0, 1.0);
  const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
  REQUIRE(s.converged);
  CHECK(max_constraint_violation(m, s.w) <= 1e-9);
  const auto& r = s.history;
  REQUIRE(r.size() >= 3);
  int checked = 0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k + 1] < 1e-11) continue;  // roundoff floor
    CHECK(r[k + 1] <= 10.0 * r[k] * r[k]);
    ++checked;
  }
  CHECK(checked >= 2);

  // Plain Newton reaches the same state.
  PlateOptions plain;
  plain.convexify = false;
  const PlateState t = newton_solve_plate(m, pr, PlateState::zero(m), plain);
  REQUIRE(t.converged);
  double d = 0.0;
  for (std::size_t i = 0; i < s.w.dofs.size(); ++i) d = std::max(d, std::abs(s.w.dofs[i] - t.w.dofs[i]));
  CHECK(d <= 1e-9);
}

TEST_CASE("symmetric data gives a reflection symmetric deformation") {
  const TriMesh m = structured_rect(16, 16, 1.0, 1.0, ClampSide::Left);
  PlateProblem pr;
  pr.B = quad_field_from_function(m, 1, [](const Eigen::Vector2d& x, double* o) { o[0] = std::abs(x.y()) < 0.2 ? 10.0 : 1.0; });
  pr.f = corner_force(m, -0.5, 0.5);
  const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
  REQUIRE(s.converged);
  const double sign[3] = {1.0, -1.0, 1.0};
  double mismatch = 0.0;
  for (int p = 0; p < m.n_vertices(); ++p) {
    const Eigen::Vector2d q(m.vertices[p].x(), -m.vertices[p].y());
    int mp = -1;
    for (int k = 0; k < m.n_vertices(); ++k)
      if ((m.vertices[k] - q).norm() < 1e-12) mp = k;
    REQUIRE(mp >= 0);
    for (int c = 0; c < 3; ++c) {
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 0) - sign[c] * s.w(p, c, 0)));
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 1) - sign[c] * s.w(p, c, 1)));
      mismatch = std::max(mismatch, std::abs(s.w(mp, c, 2) + sign[c] * s.w(p, c, 2)));
    }
  }
  CHECK(mismatch <= 1e-8);
}

TEST_CASE("compliance is the force energy of the state") {
  const TriMesh m = structured_rect(8, 8, 1.0, 1.0, ClampSide::Left, 0.0);
  PlateProblem pr;
  pr.B = constant_field(m, {1.0});
  pr.f = constant_field(m, {0.0, 0.0, 0.5});
  const PlateState s = newton_solve_plate(m, pr, PlateState::zero(m));
  REQUIRE(s.converged);
  CHECK(plate_compliance(m, pr, s) == doctest::Approx(force_energy(m, pr.f, s.w)).epsilon(1e-14));
  CHECK(plate_compliance(m, pr, s) > 0.0);
}

TEST_CASE("diagnostics on the identity and the cylinder") {
  SUBCASE("identity") {
    const TriMesh m = structured_rect(6, 6, 1.0, 1.0, ClampSide::Left, 0.0);
    const DktField w(m.n_vertices(), 3);
    CHECK(isometry_error_l1(m, w) == 0.0);
    CHECK(gauss_curvature_l1(m, w) == 0.0);
    CHECK(detect_affine_region(m, w).size() == static_cast<std::size_t>(m.n_triangles()));
    for (const auto& n : gauss_map_samples(m, w)) CHECK((n - Eigen::Vector3d::UnitZ()).norm() == 0.0);
  }
  SUBCASE("rotation has no isometry error") {
    const TriMesh m = structured_rect(5, 5, 1.0, 1.0, ClampSide::None, 0.0);
    const Eigen::Matrix3d Q = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    const DktField w = interpolate(m, 3, [&](const Eigen::Vector2d& x, int c) -> std::array<double, 3> {
      const Eigen::Vector3d v = Q * Eigen::Vector3d(x.x(), x.y(), 0.0);
      return {v[c] - (c < 2 ? x[c] : 0.0), Q(c, 0) - (c == 0), Q(c, 1) - (c == 1)};
    });
    CHECK(isometry_error_l1(m, w) <= 1e-13);
    CHECK(gauss_curvature_l1(m, w) <= 1e-12);
  }
  SUBCASE("cylinder") {
    std::vector<double> kappa;
    for (int n : {8, 16, 32}) {
      const TriMesh m = structured_rect(n, n, 1.0, 1.0, ClampSide::Left, 0.0);
      const DktField w = cylinder(m);
      kappa.push_back(gauss_curvature_l1(m, w));
      const auto normals = gauss_map_samples(m, w);
      for (int p = 0; p < m.n_vertices(); ++p) {
        const double x = m.vertices[p].x();
        CHECK((normals[p] - Eigen::Vector3d(-std::sin(x), 0.0, std::cos(x))).norm() <= 1e-12);
      }
      if (n >= 16) CHECK(detect_affine_region(m, w).empty());
    }
    CHECK(kappa[1] < kappa[0]);
    CHECK(kappa[2] < kappa[1]);
    CHECK(kappa[2] < 0.5 * kappa[0]);
  }
}

TEST_CASE("EOC table") {
  const auto a = eoc({4.0, 2.0, 1.0});
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(1.0));
  const auto b = eoc({4.0, 1.0});
  REQUIRE(b.size() == 1);
  CHECK(b[0] == doctest::Approx(2.0));

  EocTable t;
  t.h = {0.5, 0.25, 0.125};
  t.names = {"iso"};
  t.errors = {{4.0, 2.0, 1.0}};
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str() == "h,iso,eoc_iso\n0.5,4,\n0.25,2,1\n0.125,1,1\n");
}

TEST_CASE("second derivative difference vanishes for reproduced quadratics") {
  const TriMesh coarse = structured_rect(4, 4, 1.0, 1.0, ClampSide::Left, 0.0);
  const TriMesh fine = refine_uniform(coarse).mesh;
  auto q = [](const Eigen::Vector2d& x, int c) -> std::array<double, 3> {
    const double a = 0.3 * (c + 1), b = -0.2 * c, d = 0.1;
    return {a * x.x() * x.x() + b * x.x() * x.y() + d * x.y() * x.y(), 2 * a * x.x() + b * x.y(), b * x.x() + 2 * d * x.y()};
  };
  CHECK(h2_difference(coarse, interpolate(coarse, 3, q), fine, interpolate(fine, 3, q)) <= 1e-10);
  auto cub = [](const Eigen::Vector2d& x, int) -> std::array<double, 3> {
    return {x.x() * x.x() * x.x(), 3 * x.x() * x.x(), 0.0};
  };
  CHECK(h2_difference(coarse, interpolate(coarse, 3, cub), fine, interpolate(fine, 3, cub)) > 1e-3);
}
