#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jdfem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Sides of the unit square.
enum class Side : std::uint8_t { Bottom = 0, Right = 1, Top = 2, Left = 3 };

struct BoundaryEdge {
  std::array<std::uint32_t, 2> vertices;
  Side side;
};

using Triangle = std::array<std::uint32_t, 3>;

/// Conforming triangulation of the unit square. Triangles are stored with
/// positive (counter-clockwise) orientation. Tensor-product meshes also keep
/// their grid lines.
class TriMesh {
 public:
  TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
          std::vector<BoundaryEdge> boundary, std::vector<double> grid_x = {},
          std::vector<double> grid_y = {});

  std::span<const Point> vertices() const noexcept { return vertices_; }
  std::span<const Triangle> triangles() const noexcept { return triangles_; }
  std::span<const BoundaryEdge> boundary_edges() const noexcept { return boundary_; }
  std::span<const double> grid_x() const noexcept { return grid_x_; }
  std::span<const double> grid_y() const noexcept { return grid_y_; }

  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t triangle_count() const noexcept { return triangles_.size(); }

  /// Maximum triangle diameter.
  double h() const noexcept { return h_; }
  /// Minimum interior angle in radians.
  double theta_min() const noexcept { return theta_min_; }

  /// Bit s of the mask is set when the vertex lies on side s.
  std::uint8_t vertex_sides(std::size_t v) const { return vertex_sides_[v]; }

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<double> grid_x_;
  std::vector<double> grid_y_;
  std::vector<std::uint8_t> vertex_sides_;
  double h_ = 0.0;
  double theta_min_ = 0.0;
};

struct EdgeStatistics {
  std::size_t edges = 0;
  std::size_t interior_edges = 0;
  std::size_t boundary_edges = 0;
  /// Largest number of triangles sharing one edge (2 for a conforming mesh).
  std::size_t max_edge_valence = 0;
  /// Every edge has valence 1 (on the boundary) or 2 (interior).
  bool conforming = false;
};

EdgeStatistics edge_statistics(const TriMesh& mesh);

/// Tensor grid on the given ascending coordinates (must start at 0 and end
/// at 1); every cell is split along its (0,0)-(1,1) diagonal.
TriMesh mesh_tensor(std::vector<double> xs, std::vector<double> ys);

/// n x n squares with n = ceil(sqrt(2) / h_target).
TriMesh mesh_uniform(double h_target);

/// Collapses interface lines closer than `merge_tol`, keeping 0 and 1 fixed.
/// Returns the ascending partition lines including 0 and 1. Consecutive
/// returned lines are at least merge_tol apart and every input line is
/// within merge_tol of a returned one.
std::vector<double> merge_lines(std::span<const double> lines, double merge_tol);

/// Triangulation whose edges contain the (merged) jump lines. Each partition
/// rectangle is split into near-square subcells of side at most
/// min(h_target / sqrt(2), 2 * narrowest gap), so diameters stay <= h_target
/// and cell aspect ratios <= 2.
TriMesh mesh_adapted(std::span<const double> xs, std::span<const double> ys, double h_target,
                     double merge_tol);

/// Uniform bucket index over the unit square for point location.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);

  /// Lowest-index triangle containing (x, y); throws for points outside.
  std::size_t locate(double x, double y) const;

 private:
  struct Affine {
    double x0, y0;
    double inv[4];
  };

  std::size_t buckets_ = 1;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> entries_;
  std::vector<Affine> affine_;
};

}  // namespace jdfem
