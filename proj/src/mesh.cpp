#include "jdfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include "jdfem/error.hpp"

namespace jdfem {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

// Interior angle at `a`.
double angle_at(const Point& a, const Point& b, const Point& c) {
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double vx = c.x - a.x, vy = c.y - a.y;
  return std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
}

std::size_t ceil_ratio(double length, double step) {
  const double ratio = length / step;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-10 * std::max(1.0, nearest)) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(nearest));
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

}  // namespace

TriMesh::TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
                 std::vector<BoundaryEdge> boundary, std::vector<double> grid_x,
                 std::vector<double> grid_y)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)),
      grid_x_(std::move(grid_x)),
      grid_y_(std::move(grid_y)),
      vertex_sides_(vertices_.size(), 0) {
  if (triangles_.empty()) throw InvalidArgument("mesh has no triangles");
  theta_min_ = std::numbers::pi;
  for (const Triangle& t : triangles_) {
    for (const auto v : t) {
      if (v >= vertices_.size()) throw InvalidArgument("triangle references missing vertex");
    }
    const Point& a = vertices_[t[0]];
    const Point& b = vertices_[t[1]];
    const Point& c = vertices_[t[2]];
    if (!(signed_area(a, b, c) > 0.0)) {
      throw InvalidArgument("triangle is degenerate or clockwise");
    }
    h_ = std::max({h_, distance(a, b), distance(b, c), distance(c, a)});
    theta_min_ = std::min({theta_min_, angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
  }
  for (const BoundaryEdge& e : boundary_) {
    for (const auto v : e.vertices) {
      if (v >= vertices_.size()) throw InvalidArgument("boundary edge references missing vertex");
      vertex_sides_[v] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(e.side));
    }
  }
}

EdgeStatistics edge_statistics(const TriMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> valence;
  for (const Triangle& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k];
      const auto b = t[(k + 1) % 3];
      ++valence[{std::min(a, b), std::max(a, b)}];
    }
  }
  EdgeStatistics stats;
  stats.edges = valence.size();
  stats.conforming = true;
  for (const auto& [edge, count] : valence) {
    stats.max_edge_valence = std::max(stats.max_edge_valence, count);
    if (count == 1) {
      ++stats.boundary_edges;
    } else if (count == 2) {
      ++stats.interior_edges;
    } else {
      stats.conforming = false;
    }
  }
  // Valence-1 edges must lie on the square boundary, otherwise there is a
  // hanging node or a hole.
  for (const auto& [edge, count] : valence) {
    if (count != 1) continue;
    const Point& a = mesh.vertices()[edge.first];
    const Point& b = mesh.vertices()[edge.second];
    const bool on_boundary = (a.x == b.x && (a.x == 0.0 || a.x == 1.0)) ||
                             (a.y == b.y && (a.y == 0.0 || a.y == 1.0));
    if (!on_boundary) stats.conforming = false;
  }
  return stats;
}

TriMesh mesh_tensor(std::vector<double> xs, std::vector<double> ys) {
  for (const auto* axis : {&xs, &ys}) {
    if (axis->size() < 2 || axis->front() != 0.0 || axis->back() != 1.0) {
      throw InvalidArgument("tensor mesh lines must run from 0 to 1");
    }
    for (std::size_t k = 1; k < axis->size(); ++k) {
      if (!((*axis)[k] > (*axis)[k - 1])) {
        throw InvalidArgument("tensor mesh lines must be strictly ascending");
      }
    }
  }
  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  std::vector<Point> vertices;
  vertices.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) vertices.push_back({xs[i], ys[j]});
  }
  const auto id = [nx](std::size_t i, std::size_t j) {
    return static_cast<std::uint32_t>(j * nx + i);
  };
  std::vector<Triangle> triangles;
  triangles.reserve(2 * (nx - 1) * (ny - 1));
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<BoundaryEdge> boundary;
  for (std::size_t i = 0; i + 1 < nx; ++i) {
    boundary.push_back({{id(i, 0), id(i + 1, 0)}, Side::Bottom});
    boundary.push_back({{id(i + 1, ny - 1), id(i, ny - 1)}, Side::Top});
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    boundary.push_back({{id(nx - 1, j), id(nx - 1, j + 1)}, Side::Right});
    boundary.push_back({{id(0, j + 1), id(0, j)}, Side::Left});
  }
  return TriMesh(std::move(vertices), std::move(triangles), std::move(boundary), std::move(xs),
                 std::move(ys));
}

namespace {

std::vector<double> equispaced(std::size_t n) {
  std::vector<double> c(n + 1);
  for (std::size_t i = 0; i <= n; ++i) c[i] = static_cast<double>(i) / static_cast<double>(n);
  c[n] = 1.0;
  return c;
}

}  // namespace

TriMesh mesh_uniform(double h_target) {
  if (!(h_target > 0.0) || !(h_target <= std::sqrt(2.0))) {
    throw InvalidArgument("mesh_uniform: need 0 < h_target <= sqrt(2)");
  }
  const std::size_t n = ceil_ratio(std::sqrt(2.0), h_target);
  return mesh_tensor(equispaced(n), equispaced(n));
}

std::vector<double> merge_lines(std::span<const double> lines, double merge_tol) {
  if (!(merge_tol > 0.0)) throw InvalidArgument("merge_lines: merge_tol must be > 0");
  std::vector<double> all{0.0, 1.0};
  for (const double t : lines) {
    if (!std::isfinite(t)) throw InvalidArgument("merge_lines: non-finite line");
    all.push_back(std::clamp(t, 0.0, 1.0));
  }
  std::sort(all.begin(), all.end());

  std::vector<double> merged;
  std::size_t start = 0;
  while (start < all.size()) {
    std::size_t end = start;
    while (end + 1 < all.size() && all[end + 1] - all[end] < merge_tol) ++end;
    const double first = all[start];
    const double last = all[end];
    const double span = last - first;
    const bool has_lo = first == 0.0;
    const bool has_hi = last == 1.0;
    if (span < merge_tol) {
      merged.push_back(has_lo ? 0.0 : has_hi ? 1.0 : 0.5 * (first + last));
    } else {
      // A long chain keeps evenly spaced representatives, at least merge_tol
      // apart and within merge_tol of every line of the chain.
      const auto m = static_cast<std::size_t>(std::floor(span / merge_tol));
      for (std::size_t k = 0; k <= m; ++k) {
        merged.push_back(k == m ? last : first + span * static_cast<double>(k) /
                                                     static_cast<double>(m));
      }
    }
    start = end + 1;
  }
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  if (merged.front() != 0.0) merged.insert(merged.begin(), 0.0);
  if (merged.back() != 1.0) merged.push_back(1.0);
  return merged;
}

TriMesh mesh_adapted(std::span<const double> xs, std::span<const double> ys, double h_target,
                     double merge_tol) {
  if (!(h_target > 0.0)) throw InvalidArgument("mesh_adapted: h_target must be > 0");
  const std::vector<double> lines_x = merge_lines(xs, merge_tol);
  const std::vector<double> lines_y = merge_lines(ys, merge_tol);

  double side = h_target / std::sqrt(2.0);
  for (const auto* lines : {&lines_x, &lines_y}) {
    for (std::size_t k = 1; k < lines->size(); ++k) {
      side = std::min(side, 2.0 * ((*lines)[k] - (*lines)[k - 1]));
    }
  }

  const auto subdivide = [side](const std::vector<double>& lines) {
    std::vector<double> coords{0.0};
    for (std::size_t k = 1; k < lines.size(); ++k) {
      const double a = lines[k - 1];
      const double b = lines[k];
      const std::size_t n = ceil_ratio(b - a, side);
      for (std::size_t i = 1; i < n; ++i) {
        coords.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
      }
      coords.push_back(b);
    }
    return coords;
  };
  return mesh_tensor(subdivide(lines_x), subdivide(lines_y));
}

// ---------------------------------------------------------------------------
// point location

TriangleLocator::TriangleLocator(const TriMesh& mesh) {
  const std::size_t n_tri = mesh.triangle_count();
  buckets_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_tri) / 2.0)));
  const double b = static_cast<double>(buckets_);
  const auto bucket_of = [&](double v) {
    return static_cast<std::size_t>(
        std::clamp(std::floor(v * b), 0.0, static_cast<double>(buckets_ - 1)));
  };

  std::vector<std::vector<std::uint32_t>> lists(buckets_ * buckets_);
  affine_.reserve(n_tri);
  const auto vertices = mesh.vertices();
  const auto triangles = mesh.triangles();
  constexpr double kMargin = 1e-12;
  for (std::size_t t = 0; t < n_tri; ++t) {
    const Point& p0 = vertices[triangles[t][0]];
    const Point& p1 = vertices[triangles[t][1]];
    const Point& p2 = vertices[triangles[t][2]];
    const double a = p1.x - p0.x, c = p2.x - p0.x;
    const double bb = p1.y - p0.y, d = p2.y - p0.y;
    const double det = a * d - c * bb;
    affine_.push_back({p0.x, p0.y, {d / det, -c / det, -bb / det, a / det}});

    const double xmin = std::min({p0.x, p1.x, p2.x}) - kMargin;
    const double xmax = std::max({p0.x, p1.x, p2.x}) + kMargin;
    const double ymin = std::min({p0.y, p1.y, p2.y}) - kMargin;
    const double ymax = std::max({p0.y, p1.y, p2.y}) + kMargin;
    for (std::size_t j = bucket_of(ymin); j <= bucket_of(ymax); ++j) {
      for (std::size_t i = bucket_of(xmin); i <= bucket_of(xmax); ++i) {
        lists[j * buckets_ + i].push_back(static_cast<std::uint32_t>(t));
      }
    }
  }
  offsets_.reserve(lists.size() + 1);
  offsets_.push_back(0);
  for (const auto& list : lists) {
    entries_.insert(entries_.end(), list.begin(), list.end());
    offsets_.push_back(static_cast<std::uint32_t>(entries_.size()));
  }
}

std::size_t TriangleLocator::locate(double x, double y) const {
  const double b = static_cast<double>(buckets_);
  const auto i = static_cast<std::size_t>(
      std::clamp(std::floor(x * b), 0.0, static_cast<double>(buckets_ - 1)));
  const auto j = static_cast<std::size_t>(
      std::clamp(std::floor(y * b), 0.0, static_cast<double>(buckets_ - 1)));
  constexpr double kTol = -1e-12;
  const std::size_t bucket = j * buckets_ + i;
  for (std::uint32_t k = offsets_[bucket]; k < offsets_[bucket + 1]; ++k) {
    const Affine& m = affine_[entries_[k]];
    const double dx = x - m.x0;
    const double dy = y - m.y0;
    const double l1 = m.inv[0] * dx + m.inv[1] * dy;
    const double l2 = m.inv[2] * dx + m.inv[3] * dy;
    if (l1 >= kTol && l2 >= kTol && 1.0 - l1 - l2 >= kTol) return entries_[k];
  }
  throw InvalidArgument("point location: point outside the mesh");
}

}  // namespace jdfem
