#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace plateopt {

enum class BoundaryShape { Polygon, UnitCircle };

struct TriMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<char> dirichlet;                // per vertex
  BoundaryShape boundary_shape = BoundaryShape::Polygon;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double area(int t) const;
  double diameter(int t) const;
  double max_diameter() const;
  double min_angle() const;  // radians
  double total_area() const;
  Eigen::Vector2d centroid(int t) const;
  // Local index k of the edge opposite vertex k that is longest (ties by
  // smaller sorted vertex pair).
  int refinement_edge(int t) const;

  std::vector<int> dirichlet_nodes() const;
  // Throws DegenerateTriangle if a triangle has area <= 1e-14 * diameter^2
  // or is clockwise.
  void validate() const;
};

// Edge k of a triangle joins vertices (k+1)%3 and (k+2)%3.
struct EdgeTopology {
  std::vector<std::array<int, 2>> edges;           // sorted vertex pairs
  std::vector<std::array<int, 3>> triangle_edges;  // per triangle, per local edge
  std::vector<std::array<int, 2>> edge_triangles;  // -1 on the boundary
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::vector<int>> vertex_neighbors;  // sorted

  bool is_boundary_edge(int e) const { return edge_triangles[e][1] < 0; }
  std::vector<char> boundary_vertices(int n_vertices) const;
};

EdgeTopology build_topology(const TriMesh& mesh);

enum class ClampSide { None, Left, Right, Bottom, Top, LeftRight, BottomTop, All };

// (0, length) x (y0, y0 + width) split into nx x ny cells, two triangles each.
// Diagonals are mirrored across the horizontal midline (for even ny) so that
// the vertex set and the triangle set are both reflection symmetric.
TriMesh structured_rect(int nx, int ny, double length, double width, ClampSide clamp, double y0);
inline TriMesh structured_rect(int nx, int ny, double length, double width, ClampSide clamp) {
  return structured_rect(nx, ny, length, width, clamp, -0.5 * width);
}

// Unit disc from an n x n grid on [-1,1]^2 under the elliptical squircle map.
TriMesh disc_mesh(int n);

// Tags vertices (replacing existing tags) by a predicate on coordinates.
void tag_dirichlet(TriMesh& mesh, const std::function<bool(const Eigen::Vector2d&)>& predicate);

struct Refinement {
  TriMesh mesh;
  // For vertices created by the refinement (index >= old vertex count): the two
  // endpoints of the bisected edge in the old mesh, else {-1, -1}.
  std::vector<std::array<int, 2>> vertex_parents;
  std::vector<int> triangle_parent;  // index in the old mesh
  int old_vertex_count = 0;
};

// Longest-edge bisection of the marked triangles plus the closure needed for
// conformity. Midpoints of boundary edges between Dirichlet vertices are
// Dirichlet; on a UnitCircle mesh boundary midpoints are projected radially.
Refinement bisect(const TriMesh& mesh, const std::vector<int>& marked);

// Two rounds of full bisection: halves h on structured meshes.
Refinement refine_uniform(const TriMesh& mesh);

// Prolongation of a nodal P1 field to a refinement (midpoint averaging).
std::vector<double> prolong_p1(const Refinement& r, const std::vector<double>& v);

enum class MarkCriterion { PhaseGradient, IsometryError, Union };

struct MarkingReport {
  std::vector<int> marked;  // sorted, unique
  MarkCriterion criterion = MarkCriterion::PhaseGradient;
};

// Marks triangles whose mean |grad v|^2 exceeds 1/2 (v piecewise affine).
MarkingReport mark_phase_gradient(const TriMesh& mesh, const std::vector<double>& v);

// Marks the ceil(fraction * #T) triangles with the largest values; ties are
// broken by lower index.
MarkingReport mark_top_fraction(const std::vector<double>& values, double fraction, MarkCriterion criterion);

MarkingReport mark_union(const MarkingReport& x, const MarkingReport& y);

// Gradient of a nodal P1 field on triangle t.
Eigen::Vector2d p1_gradient(const TriMesh& mesh, int t, const std::vector<double>& v);

// Locates the triangle containing a point (with tolerance); -1 if outside.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);
  int locate(const Eigen::Vector2d& x, Eigen::Vector3d* bary = nullptr) const;

 private:
  const TriMesh* mesh_;
  Eigen::Vector2d lo_, hi_;
  int nb_ = 1;
  std::vector<std::vector<int>> buckets_;
};

Eigen::Vector3d barycentric(const TriMesh& mesh, int t, const Eigen::Vector2d& x);

struct PointField {
  std::string name;
  int components = 1;
  std::vector<double> values;  // components * n_vertices, node-major
};

struct CellField {
  std::string name;
  std::vector<double> values;
};

// Legacy ASCII VTK unstructured grid. If positions3d is non-empty it replaces
// the planar coordinates (3 per vertex).
void write_vtk(std::ostream& os, const TriMesh& mesh, const std::vector<PointField>& point_fields = {},
               const std::vector<CellField>& cell_fields = {}, const std::vector<double>& positions3d = {});
void write_vtk_file(const std::string& path, const TriMesh& mesh, const std::vector<PointField>& point_fields = {},
                    const std::vector<CellField>& cell_fields = {}, const std::vector<double>& positions3d = {});

// Plain-text dump: vertices, triangles, edge-to-triangle adjacency.
void write_adjacency(std::ostream& os, const TriMesh& mesh);

}  // namespace plateopt
