#include "plateopt/mesh2d.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "plateopt/errors.hpp"

namespace plateopt {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

}  // namespace

double TriMesh::area(int t) const {
  const auto& T = triangles[t];
  return signed_area(vertices[T[0]], vertices[T[1]], vertices[T[2]]);
}

double TriMesh::diameter(int t) const {
  const auto& T = triangles[t];
  double d = 0.0;
  for (int k = 0; k < 3; ++k) d = std::max(d, (vertices[T[(k + 1) % 3]] - vertices[T[(k + 2) % 3]]).norm());
  return d;
}

double TriMesh::max_diameter() const {
  double d = 0.0;
  for (int t = 0; t < n_triangles(); ++t) d = std::max(d, diameter(t));
  return d;
}

double TriMesh::min_angle() const {
  double m = std::numbers::pi;
  for (const auto& T : triangles) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d u = vertices[T[(k + 1) % 3]] - vertices[T[k]];
      const Eigen::Vector2d v = vertices[T[(k + 2) % 3]] - vertices[T[k]];
      m = std::min(m, std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)));
    }
  }
  return m;
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < n_triangles(); ++t) s += area(t);
  return s;
}

Eigen::Vector2d TriMesh::centroid(int t) const {
  const auto& T = triangles[t];
  return (vertices[T[0]] + vertices[T[1]] + vertices[T[2]]) / 3.0;
}

int TriMesh::refinement_edge(int t) const {
  const auto& T = triangles[t];
  int best = 0;
  double best_len = -1.0;
  std::array<int, 2> best_pair{};
  for (int k = 0; k < 3; ++k) {
    const int a = T[(k + 1) % 3], b = T[(k + 2) % 3];
    const double len = (vertices[a] - vertices[b]).squaredNorm();
    const std::array<int, 2> pair = {std::min(a, b), std::max(a, b)};
    const double tol = 1e-12 * std::max(len, best_len);
    if (len > best_len + tol || (std::abs(len - best_len) <= tol && pair < best_pair)) {
      best = k;
      best_len = len;
      best_pair = pair;
    }
  }
  return best;
}

std::vector<int> TriMesh::dirichlet_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < n_vertices(); ++i)
    if (dirichlet[i]) out.push_back(i);
  return out;
}

void TriMesh::validate() const {
  if (static_cast<int>(dirichlet.size()) != n_vertices()) throw DegenerateTriangle("dirichlet tags do not match vertices", -1);
  for (int t = 0; t < n_triangles(); ++t) {
    for (int k = 0; k < 3; ++k)
      if (triangles[t][k] < 0 || triangles[t][k] >= n_vertices()) throw DegenerateTriangle("vertex index out of range", t);
    const double d = diameter(t);
    if (!(area(t) > 1e-14 * d * d)) throw DegenerateTriangle("degenerate or clockwise triangle " + std::to_string(t), t);
  }
}

std::vector<char> EdgeTopology::boundary_vertices(int n_vertices) const {
  std::vector<char> b(n_vertices, 0);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edge_triangles[e][1] < 0) b[edges[e][0]] = b[edges[e][1]] = 1;
  return b;
}

EdgeTopology build_topology(const TriMesh& mesh) {
  EdgeTopology topo;
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(3 * mesh.n_triangles());
  topo.triangle_edges.resize(mesh.n_triangles());
  topo.vertex_triangles.resize(mesh.n_vertices());
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      topo.vertex_triangles[T[k]].push_back(t);
      const int a = T[(k + 1) % 3], b = T[(k + 2) % 3];
      auto [it, inserted] = index.try_emplace(edge_key(a, b), static_cast<int>(topo.edges.size()));
      if (inserted) {
        topo.edges.push_back({std::min(a, b), std::max(a, b)});
        topo.edge_triangles.push_back({t, -1});
      } else {
        topo.edge_triangles[it->second][1] = t;
      }
      topo.triangle_edges[t][k] = it->second;
    }
  }
  topo.vertex_neighbors.resize(mesh.n_vertices());
  for (const auto& e : topo.edges) {
    topo.vertex_neighbors[e[0]].push_back(e[1]);
    topo.vertex_neighbors[e[1]].push_back(e[0]);
  }
  for (auto& n : topo.vertex_neighbors) std::sort(n.begin(), n.end());
  return topo;
}

void tag_dirichlet(TriMesh& mesh, const std::function<bool(const Eigen::Vector2d&)>& predicate) {
  mesh.dirichlet.assign(mesh.n_vertices(), 0);
  for (int i = 0; i < mesh.n_vertices(); ++i) mesh.dirichlet[i] = predicate(mesh.vertices[i]) ? 1 : 0;
}

TriMesh structured_rect(int nx, int ny, double length, double width, ClampSide clamp, double y0) {
  if (nx < 1 || ny < 1) throw DegenerateTriangle("structured mesh needs nx, ny >= 1", -1);
  TriMesh m;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  m.vertices.resize((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Mirror-exact coordinates: row j and row ny - j are reflections.
      const double y = j * 2 <= ny ? y0 + width * j / ny : y0 + width - width * (ny - j) / ny;
      m.vertices[id(i, j)] = {length * i / nx, y};
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if (2 * j < ny - 1) {
        m.triangles.push_back({v00, v10, v11});
        m.triangles.push_back({v00, v11, v01});
      } else {
        m.triangles.push_back({v00, v10, v01});
        m.triangles.push_back({v10, v11, v01});
      }
    }
  }
  m.dirichlet.assign(m.n_vertices(), 0);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const bool left = i == 0, right = i == nx, bottom = j == 0, top = j == ny;
      bool d = false;
      switch (clamp) {
        case ClampSide::None: break;
        case ClampSide::Left: d = left; break;
        case ClampSide::Right: d = right; break;
        case ClampSide::Bottom: d = bottom; break;
        case ClampSide::Top: d = top; break;
        case ClampSide::LeftRight: d = left || right; break;
        case ClampSide::BottomTop: d = bottom || top; break;
        case ClampSide::All: d = left || right || bottom || top; break;
      }
      m.dirichlet[id(i, j)] = d ? 1 : 0;
    }
  }
  return m;
}

TriMesh disc_mesh(int n) {
  if (n < 2 || n % 2 != 0) throw DegenerateTriangle("disc mesh needs an even n >= 2", -1);
  TriMesh m;
  m.boundary_shape = BoundaryShape::UnitCircle;
  auto id = [&](int i, int j) { return j * (n + 1) + i; };
  m.vertices.resize((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const double x = -1.0 + 2.0 * i / n, y = -1.0 + 2.0 * j / n;
      m.vertices[id(i, j)] = {x * std::sqrt(1.0 - 0.5 * y * y), y * std::sqrt(1.0 - 0.5 * x * x)};
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      const bool main_diag = (2 * i + 1 - n) * (2 * j + 1 - n) > 0;
      if (main_diag) {
        m.triangles.push_back({v00, v10, v11});
        m.triangles.push_back({v00, v11, v01});
      } else {
        m.triangles.push_back({v00, v10, v01});
        m.triangles.push_back({v10, v11, v01});
      }
    }
  }
  m.dirichlet.assign(m.n_vertices(), 0);
  return m;
}

namespace {

// Splits (v0, v1, v2) at local edge k; returns the two counterclockwise children.
std::array<std::array<int, 3>, 2> split_at(const std::array<int, 3>& T, int k, int mid) {
  const int apex = T[k], p = T[(k + 1) % 3], q = T[(k + 2) % 3];
  return {{{apex, p, mid}, {apex, mid, q}}};
}

}  // namespace

Refinement bisect(const TriMesh& mesh, const std::vector<int>& marked) {
  Refinement r;
  r.old_vertex_count = mesh.n_vertices();
  const EdgeTopology topo = build_topology(mesh);
  const int ne = static_cast<int>(topo.edges.size());
  std::vector<int> ref_edge(mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t) ref_edge[t] = mesh.refinement_edge(t);

  std::vector<char> edge_marked(ne, 0);
  for (int t : marked) edge_marked[topo.triangle_edges[t][ref_edge[t]]] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const auto& E = topo.triangle_edges[t];
      if ((edge_marked[E[0]] || edge_marked[E[1]] || edge_marked[E[2]]) && !edge_marked[E[ref_edge[t]]]) {
        edge_marked[E[ref_edge[t]]] = 1;
        changed = true;
      }
    }
  }

  TriMesh& out = r.mesh;
  out.vertices = mesh.vertices;
  out.dirichlet = mesh.dirichlet;
  out.boundary_shape = mesh.boundary_shape;
  r.vertex_parents.assign(mesh.n_vertices(), {-1, -1});
  std::vector<int> midpoint(ne, -1);
  for (int e = 0; e < ne; ++e) {
    if (!edge_marked[e]) continue;
    const auto [a, b] = topo.edges[e];
    Eigen::Vector2d x = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    const bool boundary = topo.is_boundary_edge(e);
    if (boundary && mesh.boundary_shape == BoundaryShape::UnitCircle) x.normalize();
    midpoint[e] = out.n_vertices();
    out.vertices.push_back(x);
    out.dirichlet.push_back(boundary && mesh.dirichlet[a] && mesh.dirichlet[b] ? 1 : 0);
    r.vertex_parents.push_back({a, b});
  }

  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    const auto& E = topo.triangle_edges[t];
    const int k = ref_edge[t];
    if (!edge_marked[E[k]]) {
      out.triangles.push_back(T);
      r.triangle_parent.push_back(t);
      continue;
    }
    const auto children = split_at(T, k, midpoint[E[k]]);
    // Child 0 keeps parent edge k+2 opposite its local vertex 2; child 1 keeps
    // parent edge k+1 opposite its local vertex 1.
    const int kept_edge[2] = {E[(k + 2) % 3], E[(k + 1) % 3]};
    const int local[2] = {2, 1};
    for (int c = 0; c < 2; ++c) {
      if (edge_marked[kept_edge[c]]) {
        for (const auto& g : split_at(children[c], local[c], midpoint[kept_edge[c]])) {
          out.triangles.push_back(g);
          r.triangle_parent.push_back(t);
        }
      } else {
        out.triangles.push_back(children[c]);
        r.triangle_parent.push_back(t);
      }
    }
  }
  return r;
}

Refinement refine_uniform(const TriMesh& mesh) {
  std::vector<int> all(mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t) all[t] = t;
  Refinement first = bisect(mesh, all);
  std::vector<int> all2(first.mesh.n_triangles());
  for (int t = 0; t < first.mesh.n_triangles(); ++t) all2[t] = t;
  Refinement second = bisect(first.mesh, all2);
  Refinement r;
  r.mesh = std::move(second.mesh);
  r.old_vertex_count = mesh.n_vertices();
  r.vertex_parents = first.vertex_parents;
  r.vertex_parents.insert(r.vertex_parents.end(), second.vertex_parents.begin() + first.mesh.n_vertices(),
                          second.vertex_parents.end());
  r.triangle_parent.resize(second.triangle_parent.size());
  for (std::size_t t = 0; t < second.triangle_parent.size(); ++t)
    r.triangle_parent[t] = first.triangle_parent[second.triangle_parent[t]];
  return r;
}

std::vector<double> prolong_p1(const Refinement& r, const std::vector<double>& v) {
  std::vector<double> out(r.mesh.n_vertices());
  std::copy(v.begin(), v.begin() + r.old_vertex_count, out.begin());
  for (int i = r.old_vertex_count; i < r.mesh.n_vertices(); ++i)
    out[i] = 0.5 * (out[r.vertex_parents[i][0]] + out[r.vertex_parents[i][1]]);
  return out;
}

Eigen::Vector2d p1_gradient(const TriMesh& mesh, int t, const std::vector<double>& v) {
  const auto& T = mesh.triangles[t];
  const Eigen::Vector2d e1 = mesh.vertices[T[1]] - mesh.vertices[T[0]];
  const Eigen::Vector2d e2 = mesh.vertices[T[2]] - mesh.vertices[T[0]];
  Eigen::Matrix2d J;
  J << e1.x(), e2.x(), e1.y(), e2.y();
  const Eigen::Vector2d d(v[T[1]] - v[T[0]], v[T[2]] - v[T[0]]);
  return J.transpose().inverse() * d;
}

MarkingReport mark_phase_gradient(const TriMesh& mesh, const std::vector<double>& v) {
  MarkingReport r;
  r.criterion = MarkCriterion::PhaseGradient;
  for (int t = 0; t < mesh.n_triangles(); ++t)
    if (p1_gradient(mesh, t, v).squaredNorm() > 0.5) r.marked.push_back(t);
  return r;
}

MarkingReport mark_top_fraction(const std::vector<double>& values, double fraction, MarkCriterion criterion) {
  MarkingReport r;
  r.criterion = criterion;
  const int n = static_cast<int>(values.size());
  const int k = std::min(n, static_cast<int>(std::ceil(fraction * n - 1e-12)));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return values[x] > values[y]; });
  r.marked.assign(order.begin(), order.begin() + k);
  std::sort(r.marked.begin(), r.marked.end());
  return r;
}

MarkingReport mark_union(const MarkingReport& x, const MarkingReport& y) {
  MarkingReport r;
  r.criterion = MarkCriterion::Union;
  std::set_union(x.marked.begin(), x.marked.end(), y.marked.begin(), y.marked.end(), std::back_inserter(r.marked));
  return r;
}

Eigen::Vector3d barycentric(const TriMesh& mesh, int t, const Eigen::Vector2d& x) {
  const auto& T = mesh.triangles[t];
  const double A = mesh.area(t);
  Eigen::Vector3d l;
  for (int k = 0; k < 3; ++k)
    l[k] = signed_area(x, mesh.vertices[T[(k + 1) % 3]], mesh.vertices[T[(k + 2) % 3]]) / A;
  return l;
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  lo_ = hi_ = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  nb_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.n_triangles()) / 2.0)));
  buckets_.resize(nb_ * nb_);
  const Eigen::Vector2d span = (hi_ - lo_).cwiseMax(Eigen::Vector2d::Constant(1e-300));
  auto cell = [&](double x, double lo, double s) {
    return std::clamp(static_cast<int>((x - lo) / s * nb_), 0, nb_ - 1);
  };
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    Eigen::Vector2d a = mesh.vertices[mesh.triangles[t][0]], b = a;
    for (int k = 1; k < 3; ++k) {
      a = a.cwiseMin(mesh.vertices[mesh.triangles[t][k]]);
      b = b.cwiseMax(mesh.vertices[mesh.triangles[t][k]]);
    }
    for (int j = cell(a.y(), lo_.y(), span.y()); j <= cell(b.y(), lo_.y(), span.y()); ++j)
      for (int i = cell(a.x(), lo_.x(), span.x()); i <= cell(b.x(), lo_.x(), span.x()); ++i)
        buckets_[j * nb_ + i].push_back(t);
  }
}

int PointLocator::locate(const Eigen::Vector2d& x, Eigen::Vector3d* bary) const {
  const Eigen::Vector2d span = (hi_ - lo_).cwiseMax(Eigen::Vector2d::Constant(1e-300));
  const int i = std::clamp(static_cast<int>((x.x() - lo_.x()) / span.x() * nb_), 0, nb_ - 1);
  const int j = std::clamp(static_cast<int>((x.y() - lo_.y()) / span.y() * nb_), 0, nb_ - 1);
  int best = -1;
  double best_min = -1e-9;
  Eigen::Vector3d best_l;
  for (int t : buckets_[j * nb_ + i]) {
    const Eigen::Vector3d l = barycentric(*mesh_, t, x);
    if (l.minCoeff() > best_min) {
      best_min = l.minCoeff();
      best = t;
      best_l = l;
      if (best_min >= 0.0) break;
    }
  }
  if (best >= 0 && bary) *bary = best_l;
  return best;
}

void write_vtk(std::ostream& os, const TriMesh& mesh, const std::vector<PointField>& point_fields,
               const std::vector<CellField>& cell_fields, const std::vector<double>& positions3d) {
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\nplateopt\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_vertices() << " double\n";
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    if (!positions3d.empty())
      os << positions3d[3 * i] << ' ' << positions3d[3 * i + 1] << ' ' << positions3d[3 * i + 2] << '\n';
    else
      os << mesh.vertices[i].x() << ' ' << mesh.vertices[i].y() << " 0\n";
  }
  os << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles() << '\n';
  for (const auto& T : mesh.triangles) os << "3 " << T[0] << ' ' << T[1] << ' ' << T[2] << '\n';
  os << "CELL_TYPES " << mesh.n_triangles() << '\n';
  for (int t = 0; t < mesh.n_triangles(); ++t) os << "5\n";
  os << "POINT_DATA " << mesh.n_vertices() << '\n';
  os << "SCALARS dirichlet int 1\nLOOKUP_TABLE default\n";
  for (char d : mesh.dirichlet) os << static_cast<int>(d) << '\n';
  for (const auto& f : point_fields) {
    if (f.components == 3) {
      os << "VECTORS " << f.name << " double\n";
    } else {
      os << "SCALARS " << f.name << " double " << f.components << "\nLOOKUP_TABLE default\n";
    }
    for (int i = 0; i < mesh.n_vertices(); ++i) {
      for (int c = 0; c < f.components; ++c) os << (c ? " " : "") << f.values[f.components * i + c];
      os << '\n';
    }
  }
  if (!cell_fields.empty()) {
    os << "CELL_DATA " << mesh.n_triangles() << '\n';
    for (const auto& f : cell_fields) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) os << v << '\n';
    }
  }
}

void write_vtk_file(const std::string& path, const TriMesh& mesh, const std::vector<PointField>& point_fields,
                    const std::vector<CellField>& cell_fields, const std::vector<double>& positions3d) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path, 0);
  write_vtk(os, mesh, point_fields, cell_fields, positions3d);
}

void write_adjacency(std::ostream& os, const TriMesh& mesh) {
  const EdgeTopology topo = build_topology(mesh);
  os << std::setprecision(17);
  os << "vertices " << mesh.n_vertices() << '\n';
  for (int i = 0; i < mesh.n_vertices(); ++i)
    os << i << ' ' << mesh.vertices[i].x() << ' ' << mesh.vertices[i].y() << ' ' << static_cast<int>(mesh.dirichlet[i])
       << '\n';
  os << "triangles " << mesh.n_triangles() << '\n';
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& T = mesh.triangles[t];
    os << t << ' ' << T[0] << ' ' << T[1] << ' ' << T[2] << '\n';
  }
  os << "edges " << topo.edges.size() << '\n';
  for (std::size_t e = 0; e < topo.edges.size(); ++e)
    os << e << ' ' << topo.edges[e][0] << ' ' << topo.edges[e][1] << ' ' << topo.edge_triangles[e][0] << ' '
       << topo.edge_triangles[e][1] << '\n';
}

}  // namespace plateopt
