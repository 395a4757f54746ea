#include "jdfem/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <cmath>
#include <ostream>
#include <sstream>

#include "jdfem/error.hpp"

namespace jdfem {

BoundarySpec BoundarySpec::mixed() {
  BoundarySpec bc;
  bc.mode = Mode::Mixed;
  bc.dirichlet[static_cast<int>(Side::Left)] = 0.1;
  bc.dirichlet[static_cast<int>(Side::Right)] = 0.3;
  return bc;
}

BoundarySpec BoundarySpec::homogeneous_dirichlet() {
  BoundarySpec bc;
  bc.mode = Mode::HomogeneousDirichlet;
  bc.dirichlet.fill(0.0);
  return bc;
}

BoundarySpec BoundarySpec::custom(std::array<std::optional<double>, 4> dirichlet,
                                  std::array<double, 4> neumann_flux) {
  BoundarySpec bc;
  bc.mode = Mode::Custom;
  bc.dirichlet = dirichlet;
  bc.neumann_flux = neumann_flux;
  return bc;
}

const char* to_string(BoundarySpec::Mode mode) {
  switch (mode) {
    case BoundarySpec::Mode::Mixed:
      return "mixed";
    case BoundarySpec::Mode::HomogeneousDirichlet:
      return "dirichlet";
    case BoundarySpec::Mode::Custom:
      return "custom";
  }
  return "custom";
}

namespace {

struct Geometry {
  double area;
  std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
};

Geometry triangle_geometry(const Point& p0, const Point& p1, const Point& p2) {
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  Geometry g;
  g.area = 0.5 * det;
  g.grad[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
  g.grad[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
  g.grad[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
  return g;
}

std::optional<double> dirichlet_value(const TriMesh& mesh, const BoundarySpec& bc,
                                      std::size_t v) {
  const std::uint8_t sides = mesh.vertex_sides(v);
  for (int s = 0; s < 4; ++s) {
    if ((sides & (1u << s)) && bc.dirichlet[s].has_value()) return bc.dirichlet[s];
  }
  return std::nullopt;
}

}  // namespace

std::array<std::array<double, 3>, 3> element_stiffness(const Point& p0, const Point& p1,
                                                       const Point& p2, double a) {
  const Geometry g = triangle_geometry(p0, p1, p2);
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      k[i][j] = a * g.area * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1]);
    }
  }
  return k;
}

LinearSystem assemble(std::shared_ptr<const TriMesh> mesh, const ScalarField& coefficient,
                      const ScalarField& source, const BoundarySpec& bc) {
  if (!mesh) throw InvalidArgument("assemble: null mesh");
  const std::size_t nv = mesh->vertex_count();
  LinearSystem sys;
  sys.free_index.assign(nv, -1);
  sys.dirichlet_values.assign(nv, 0.0);
  std::int64_t n_free = 0;
  for (std::size_t v = 0; v < nv; ++v) {
    if (const auto value = dirichlet_value(*mesh, bc, v)) {
      sys.dirichlet_values[v] = *value;
    } else {
      sys.free_index[v] = n_free++;
    }
  }

  sys.rhs = Eigen::VectorXd::Zero(n_free);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh->triangle_count() * 9);
  const auto vertices = mesh->vertices();
  const auto triangles = mesh->triangles();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Triangle& tri = triangles[t];
    const Point& p0 = vertices[tri[0]];
    const Point& p1 = vertices[tri[1]];
    const Point& p2 = vertices[tri[2]];
    const double cx = (p0.x + p1.x + p2.x) / 3.0;
    const double cy = (p0.y + p1.y + p2.y) / 3.0;
    const double a = coefficient(cx, cy);
    const double f = source(cx, cy);
    if (!std::isfinite(a) || !std::isfinite(f)) {
      std::ostringstream msg;
      msg << "assemble: non-finite data at triangle " << t << " centroid (" << cx << ", " << cy
          << "): a = " << a << ", f = " << f;
      throw NumericalError(msg.str());
    }
    const auto k = element_stiffness(p0, p1, p2, a);
    const double load = f * triangle_geometry(p0, p1, p2).area / 3.0;
    for (int i = 0; i < 3; ++i) {
      const std::int64_t row = sys.free_index[tri[i]];
      if (row < 0) continue;
      sys.rhs[row] += load;
      for (int j = 0; j < 3; ++j) {
        const std::int64_t col = sys.free_index[tri[j]];
        if (col >= 0) {
          triplets.emplace_back(row, col, k[i][j]);
        } else {
          sys.rhs[row] -= k[i][j] * sys.dirichlet_values[tri[j]];
        }
      }
    }
  }
  for (const BoundaryEdge& e : mesh->boundary_edges()) {
    const int s = static_cast<int>(e.side);
    if (bc.dirichlet[s].has_value() || bc.neumann_flux[s] == 0.0) continue;
    const Point& a = vertices[e.vertices[0]];
    const Point& b = vertices[e.vertices[1]];
    const double share = 0.5 * bc.neumann_flux[s] * std::hypot(b.x - a.x, b.y - a.y);
    for (const auto v : e.vertices) {
      if (sys.free_index[v] >= 0) sys.rhs[sys.free_index[v]] += share;
    }
  }
  sys.matrix.resize(n_free, n_free);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.mesh = std::move(mesh);
  return sys;
}

Eigen::VectorXd solve_cg(const Eigen::SparseMatrix<double>& matrix, const Eigen::VectorXd& rhs,
                         SolveInfo* info, double tolerance) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) {
    throw InvalidArgument("solve_cg: dimension mismatch");
  }
  if (rhs.size() == 0) {
    if (info) *info = SolveInfo{};
    return Eigen::VectorXd();
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(10 * matrix.rows());
  cg.compute(matrix);
  Eigen::VectorXd x = cg.solve(rhs);
  const double rhs_norm = rhs.norm();
  const double residual = rhs_norm > 0.0 ? (rhs - matrix * x).norm() / rhs_norm : 0.0;
  if (info) *info = SolveInfo{static_cast<std::size_t>(cg.iterations()), residual};
  if (cg.info() != Eigen::Success || !(residual <= 10.0 * tolerance)) {
    std::ostringstream msg;
    msg << "conjugate gradient did not converge: relative residual " << residual << " after "
        << cg.iterations() << " iterations";
    throw NumericalError(msg.str());
  }
  return x;
}

FemSolution solve(const LinearSystem& system, SolveInfo* info) {
  const Eigen::VectorXd x = solve_cg(system.matrix, system.rhs, info);
  std::vector<double> nodal(system.free_index.size());
  for (std::size_t v = 0; v < nodal.size(); ++v) {
    const std::int64_t row = system.free_index[v];
    nodal[v] = row >= 0 ? x[row] : system.dirichlet_values[v];
  }
  return FemSolution(system.mesh, std::move(nodal));
}

// ---------------------------------------------------------------------------
// solutions

FemSolution::FemSolution(std::shared_ptr<const TriMesh> mesh, std::vector<double> nodal)
    : mesh_(std::move(mesh)), nodal_(std::move(nodal)) {
  if (!mesh_) throw InvalidArgument("solution: null mesh");
  if (nodal_.size() != mesh_->vertex_count()) {
    throw InvalidArgument("solution: nodal vector length must equal the vertex count");
  }
  const auto vertices = mesh_->vertices();
  gradients_.reserve(mesh_->triangle_count());
  for (const Triangle& t : mesh_->triangles()) {
    const Geometry g = triangle_geometry(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    std::array<double, 2> grad{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      grad[0] += nodal_[t[i]] * g.grad[i][0];
      grad[1] += nodal_[t[i]] * g.grad[i][1];
    }
    gradients_.push_back(grad);
  }
  locator_ = std::make_shared<TriangleLocator>(*mesh_);
}

FemSolution::Evaluation FemSolution::eval(double x, double y) const {
  const std::size_t t = locator_->locate(x, y);
  const Triangle& tri = mesh_->triangles()[t];
  const Point& p0 = mesh_->vertices()[tri[0]];
  const auto& g = gradients_[t];
  const double value = nodal_[tri[0]] + g[0] * (x - p0.x) + g[1] * (y - p0.y);
  return Evaluation{value, g, t};
}

FemSolution::Evaluation eval_solution(const FemSolution& solution, double x, double y) {
  return solution.eval(x, y);
}

FemSolution interpolate(std::shared_ptr<const TriMesh> mesh, const ScalarField& fn) {
  if (!mesh) throw InvalidArgument("interpolate: null mesh");
  std::vector<double> nodal;
  nodal.reserve(mesh->vertex_count());
  for (const Point& p : mesh->vertices()) nodal.push_back(fn(p.x, p.y));
  return FemSolution(std::move(mesh), std::move(nodal));
}

namespace {

LatticeField2D cell_centre_field(std::size_t n, std::vector<double> values) {
  const double h = 1.0 / static_cast<double>(n);
  return LatticeField2D(
      GridSpec2D::with_intervals({0.5 * h, 0.5 * h}, {1.0 - h, 1.0 - h}, {n - 1, n - 1}),
      std::move(values));
}

}  // namespace

LatticeField2D SolutionRaster::value_field() const { return cell_centre_field(n, value); }
LatticeField2D SolutionRaster::grad_x_field() const { return cell_centre_field(n, grad_x); }
LatticeField2D SolutionRaster::grad_y_field() const { return cell_centre_field(n, grad_y); }

SolutionRaster rasterize(const FemSolution& solution, std::size_t n) {
  if (n < 2) throw InvalidArgument("rasterize: need n >= 2");
  SolutionRaster r;
  r.n = n;
  r.value.resize(n * n);
  r.grad_x.resize(n * n);
  r.grad_y.resize(n * n);
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * h;
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = solution.eval((static_cast<double>(i) + 0.5) * h, y);
      r.value[j * n + i] = e.value;
      r.grad_x[j * n + i] = e.gradient[0];
      r.grad_y[j * n + i] = e.gradient[1];
    }
  }
  return r;
}

double v_norm_distance(const SolutionRaster& a, const FemSolution& b) {
  const std::size_t n = a.n;
  const double h = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * h;
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = b.eval((static_cast<double>(i) + 0.5) * h, y);
      const std::size_t k = j * n + i;
      const double dv = a.value[k] - e.value;
      const double dgx = a.grad_x[k] - e.gradient[0];
      const double dgy = a.grad_y[k] - e.gradient[1];
      sum += dv * dv + dgx * dgx + dgy * dgy;
    }
  }
  return std::sqrt(sum * h * h);
}

double v_norm_distance(const FemSolution& a, const FemSolution& b, std::size_t n) {
  return v_norm_distance(rasterize(a, n), b);
}

double v_norm_error(const FemSolution& solution, const ScalarField& exact_value,
                    const std::function<std::array<double, 2>(double, double)>& exact_gradient,
                    std::size_t n) {
  if (n < 1) throw InvalidArgument("v_norm_error: need n >= 1");
  const double h = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * h;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * h;
      const auto e = solution.eval(x, y);
      const auto g = exact_gradient(x, y);
      const double dv = exact_value(x, y) - e.value;
      const double dgx = g[0] - e.gradient[0];
      const double dgy = g[1] - e.gradient[1];
      sum += dv * dv + dgx * dgx + dgy * dgy;
    }
  }
  return std::sqrt(sum * h * h);
}

void write_mesh_text(const TriMesh& mesh, const BoundarySpec& bc, std::ostream& out) {
  static constexpr const char* kSideNames[] = {"bottom", "right", "top", "left"};
  const auto old_precision = out.precision(17);
  out << "# jdfem triangle mesh\n";
  out << "vertices " << mesh.vertex_count() << '\n';
  for (const Point& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangle_count() << '\n';
  for (const Triangle& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "boundary_edges " << mesh.boundary_edges().size() << '\n';
  for (const BoundaryEdge& e : mesh.boundary_edges()) {
    out << e.vertices[0] << ' ' << e.vertices[1] << ' '
        << (bc.is_dirichlet(e.side) ? "dirichlet" : "neumann") << ' '
        << kSideNames[static_cast<int>(e.side)] << '\n';
  }
  out.precision(old_precision);
  if (!out) throw IoError("mesh text: write failed");
}

}  // namespace jdfem
