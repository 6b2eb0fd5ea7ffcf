#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "plateopt/errors.hpp"
#include "plateopt/mesh2d.hpp"

using namespace plateopt;

namespace {

// Conforming iff every edge seen by only one triangle lies on the outer boundary.
bool conforming_rect(const TriMesh& m, double x0, double x1, double y0, double y1) {
  const EdgeTopology topo = build_topology(m);
  std::map<std::pair<int, int>, int> count;
  for (const auto& T : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = T[(k + 1) % 3], b = T[(k + 2) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [e, c] : count) {
    if (c > 2) return false;
    if (c == 1) {
      const auto& p = m.vertices[e.first];
      const auto& q = m.vertices[e.second];
      const bool on = (p.x() == x0 && q.x() == x0) || (p.x() == x1 && q.x() == x1) || (p.y() == y0 && q.y() == y0) ||
                      (p.y() == y1 && q.y() == y1);
      if (!on) return false;
    }
  }
  return true;
}

bool all_positive(const TriMesh& m) {
  for (int t = 0; t < m.n_triangles(); ++t)
    if (!(m.area(t) > 0.0)) return false;
  return true;
}

using Key = std::pair<double, double>;

bool reflection_symmetric(const TriMesh& m, double mid) {
  std::set<Key> pts;
  for (const auto& v : m.vertices) pts.insert({v.x(), v.y()});
  for (const auto& v : m.vertices)
    if (!pts.count({v.x(), 2.0 * mid - v.y()})) return false;
  std::set<std::vector<Key>> tris;
  for (const auto& T : m.triangles) {
    std::vector<Key> k;
    for (int i : T) k.push_back({m.vertices[i].x(), m.vertices[i].y()});
    std::sort(k.begin(), k.end());
    tris.insert(k);
  }
  for (const auto& T : m.triangles) {
    std::vector<Key> k;
    for (int i : T) k.push_back({m.vertices[i].x(), 2.0 * mid - m.vertices[i].y()});
    std::sort(k.begin(), k.end());
    if (!tris.count(k)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("structured rectangle") {
  SUBCASE("single cell") {
    const TriMesh m = structured_rect(1, 1, 1.0, 1.0, ClampSide::Left);
    CHECK(m.n_triangles() == 2);
    CHECK(m.n_vertices() == 4);
    CHECK(m.dirichlet_nodes().size() == 2);
    for (int i : m.dirichlet_nodes()) CHECK(m.vertices[i].x() == 0.0);
    CHECK_NOTHROW(m.validate());
  }
  SUBCASE("two by two is reflection symmetric") {
    const TriMesh m = structured_rect(2, 2, 1.0, 1.0, ClampSide::Left);
    CHECK(m.n_triangles() == 8);
    CHECK(reflection_symmetric(m, 0.0));
    CHECK(m.total_area() == doctest::Approx(1.0));
  }
  SUBCASE("unit square variant") {
    const TriMesh m = structured_rect(8, 8, 1.0, 1.0, ClampSide::Left, 0.0);
    CHECK(reflection_symmetric(m, 0.5));
    CHECK(conforming_rect(m, 0, 1, 0, 1));
  }
}

TEST_CASE("uniform refinement reproduces the mesh-size ladder") {
  TriMesh m = structured_rect(32, 32, 1.0, 1.0, ClampSide::Left, 0.0);
  const double expected[] = {0.0441942, 0.0220971, 0.0110485};
  for (double h : expected) {
    CHECK(m.max_diameter() == doctest::Approx(h).epsilon(1e-5));
    if (h > 0.02) m = refine_uniform(m).mesh;
  }
  CHECK(m.n_triangles() == 2 * 128 * 128);
  CHECK(conforming_rect(m, 0, 1, 0, 1));
  CHECK(reflection_symmetric(m, 0.5));
  int left = 0;
  for (int i = 0; i < m.n_vertices(); ++i) {
    if (m.vertices[i].x() == 0.0) {
      ++left;
      CHECK(m.dirichlet[i]);
    } else {
      CHECK_FALSE(m.dirichlet[i]);
    }
  }
  CHECK(left == 129);
}

TEST_CASE("bisection") {
  const TriMesh sq = structured_rect(1, 1, 1.0, 1.0, ClampSide::Left, 0.0);
  SUBCASE("empty marking") {
    const Refinement r = bisect(sq, {});
    CHECK(r.mesh.triangles == sq.triangles);
    CHECK(r.mesh.vertices == sq.vertices);
  }
  SUBCASE("full marking") {
    const Refinement r = bisect(sq, {0, 1});
    CHECK(r.mesh.n_triangles() == 4);
    CHECK(conforming_rect(r.mesh, 0, 1, 0, 1));
    CHECK(all_positive(r.mesh));
  }
  SUBCASE("repeated full marking doubles the count") {
    TriMesh m = structured_rect(3, 2, 2.0, 1.0, ClampSide::Left);
    const int n0 = m.n_triangles();
    for (int k = 1; k <= 5; ++k) {
      std::vector<int> all(m.n_triangles());
      for (int t = 0; t < m.n_triangles(); ++t) all[t] = t;
      m = bisect(m, all).mesh;
      CHECK(m.n_triangles() == n0 << k);
      CHECK(conforming_rect(m, 0, 2, -0.5, 0.5));
    }
  }
  SUBCASE("a single marked triangle triggers closure only") {
    const TriMesh m = structured_rect(4, 4, 1.0, 1.0, ClampSide::Left, 0.0);
    const Refinement r = bisect(m, {5});
    CHECK(r.mesh.n_triangles() > m.n_triangles());
    CHECK(r.mesh.n_triangles() < 2 * m.n_triangles());
    CHECK(conforming_rect(r.mesh, 0, 1, 0, 1));
    CHECK(r.mesh.total_area() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("random adaptive refinement stays conforming and shape regular") {
  std::mt19937_64 rng(4);
  TriMesh m = structured_rect(4, 3, 1.0, 1.0, ClampSide::Left, 0.0);
  const double coarse_angle = m.min_angle();
  for (int round = 0; round < 8; ++round) {
    std::vector<int> marked;
    std::bernoulli_distribution pick(0.2);
    for (int t = 0; t < m.n_triangles(); ++t)
      if (pick(rng)) marked.push_back(t);
    const Refinement r = bisect(m, marked);
    REQUIRE(conforming_rect(r.mesh, 0, 1, 0, 1));
    REQUIRE(all_positive(r.mesh));
    CHECK(r.mesh.min_angle() >= coarse_angle / 2 - 1e-9);
    CHECK(r.mesh.total_area() == doctest::Approx(1.0).epsilon(1e-13));
    for (int t : marked) CHECK(std::count(r.triangle_parent.begin(), r.triangle_parent.end(), t) >= 2);
    // Prolongation followed by restriction is the identity.
    std::vector<double> v(m.n_vertices());
    for (auto& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto p = prolong_p1(r, v);
    CHECK(std::equal(v.begin(), v.end(), p.begin()));
    // Prolongation of an affine field is exact.
    std::vector<double> a(m.n_vertices());
    for (int i = 0; i < m.n_vertices(); ++i) a[i] = 2.0 * m.vertices[i].x() - m.vertices[i].y();
    const auto pa = prolong_p1(r, a);
    for (int i = 0; i < r.mesh.n_vertices(); ++i)
      CHECK(pa[i] == doctest::Approx(2.0 * r.mesh.vertices[i].x() - r.mesh.vertices[i].y()).epsilon(1e-13));
    m = r.mesh;
  }
}

TEST_CASE("phase-gradient marking") {
  const TriMesh m = structured_rect(4, 4, 1.0, 1.0, ClampSide::Left, 0.0);
  std::vector<double> v(m.n_vertices(), 0.3);
  CHECK(mark_phase_gradient(m, v).marked.empty());
  for (int i = 0; i < m.n_vertices(); ++i) v[i] = m.vertices[i].x();
  CHECK(static_cast<int>(mark_phase_gradient(m, v).marked.size()) == m.n_triangles());
  for (int i = 0; i < m.n_vertices(); ++i) v[i] = 0.5 * m.vertices[i].x();
  CHECK(mark_phase_gradient(m, v).marked.empty());
}

TEST_CASE("top-fraction marking") {
  std::vector<double> zero(10, 0.0);
  const auto r = mark_top_fraction(zero, 0.25, MarkCriterion::IsometryError);
  CHECK(r.marked == std::vector<int>{0, 1, 2});
  CHECK(mark_top_fraction(zero, 1.0, MarkCriterion::IsometryError).marked.size() == 10);
  std::vector<double> vals = {0.1, 5.0, 0.2, 5.0, 3.0, 0.0, 0.0, 0.0};
  CHECK(mark_top_fraction(vals, 0.25, MarkCriterion::IsometryError).marked == std::vector<int>{1, 3});
  const auto u = mark_union({{1, 4}, MarkCriterion::PhaseGradient}, {{2, 4, 7}, MarkCriterion::IsometryError});
  CHECK(u.marked == std::vector<int>{1, 2, 4, 7});
  CHECK(u.criterion == MarkCriterion::Union);
}

TEST_CASE("disc mesh") {
  const TriMesh d = disc_mesh(8);
  CHECK_NOTHROW(d.validate());
  const EdgeTopology topo = build_topology(d);
  const auto bnd = topo.boundary_vertices(d.n_vertices());
  for (int i = 0; i < d.n_vertices(); ++i)
    if (bnd[i]) CHECK(d.vertices[i].norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.total_area() == doctest::Approx(3.14159).epsilon(0.05));
  TriMesh r = refine_uniform(d).mesh;
  CHECK_NOTHROW(r.validate());
  const auto bnd2 = build_topology(r).boundary_vertices(r.n_vertices());
  for (int i = 0; i < r.n_vertices(); ++i)
    if (bnd2[i]) CHECK(r.vertices[i].norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(r.total_area() - M_PI) < std::abs(d.total_area() - M_PI));
}

TEST_CASE("point location") {
  const TriMesh m = refine_uniform(structured_rect(5, 3, 2.0, 1.0, ClampSide::Left)).mesh;
  const PointLocator loc(m);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d x(std::uniform_real_distribution<double>(0, 2)(rng),
                            std::uniform_real_distribution<double>(-0.5, 0.5)(rng));
    Eigen::Vector3d l;
    const int t = loc.locate(x, &l);
    REQUIRE(t >= 0);
    CHECK(l.minCoeff() >= -1e-12);
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) y += l[i] * m.vertices[m.triangles[t][i]];
    CHECK((y - x).norm() < 1e-12);
  }
  CHECK(loc.locate({5.0, 0.0}) == -1);
}

TEST_CASE("degenerate triangles are rejected") {
  TriMesh m = structured_rect(1, 1, 1.0, 1.0, ClampSide::Left);
  std::swap(m.triangles[0][1], m.triangles[0][2]);
  CHECK_THROWS_AS(m.validate(), DegenerateTriangle);
}

TEST_CASE("exports") {
  const TriMesh m = structured_rect(2, 1, 1.0, 1.0, ClampSide::Left);
  std::ostringstream os;
  PointField f{"phase", 1, std::vector<double>(m.n_vertices(), 0.25)};
  write_vtk(os, m, {f}, {{"area", std::vector<double>(m.n_triangles(), 0.25)}});
  const std::string s = os.str();
  CHECK(s.find("POINTS 6 double") != std::string::npos);
  CHECK(s.find("CELLS 4 16") != std::string::npos);
  CHECK(s.find("SCALARS phase double 1") != std::string::npos);
  CHECK(s.find("CELL_DATA 4") != std::string::npos);
  std::ostringstream adj;
  write_adjacency(adj, m);
  CHECK(adj.str().find("edges 9") != std::string::npos);
}
