#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "jdfem/mesh.hpp"
#include "jdfem/randomfield.hpp"

namespace jdfem {

using ScalarField = std::function<double(double, double)>;

/// Dirichlet traces (constant per side) and Neumann fluxes on the unit square.
struct BoundarySpec {
  enum class Mode { Mixed, HomogeneousDirichlet, Custom };

  Mode mode = Mode::Mixed;
  /// Indexed by Side; a value marks the side as Dirichlet (Γ1).
  std::array<std::optional<double>, 4> dirichlet{};
  /// Flux g on Neumann sides (Γ2), indexed by Side.
  std::array<double, 4> neumann_flux{0.0, 0.0, 0.0, 0.0};

  /// u = 0.1 on x = 0, u = 0.3 on x = 1, zero flux on y = 0 and y = 1.
  static BoundarySpec mixed();
  static BoundarySpec homogeneous_dirichlet();
  static BoundarySpec custom(std::array<std::optional<double>, 4> dirichlet,
                             std::array<double, 4> neumann_flux);

  bool is_dirichlet(Side side) const { return dirichlet[static_cast<int>(side)].has_value(); }
};

const char* to_string(BoundarySpec::Mode mode);

/// P1 system on the free (non-Dirichlet) vertices.
struct LinearSystem {
  std::shared_ptr<const TriMesh> mesh;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  /// Vertex -> row of the free system, or -1 for Dirichlet vertices.
  std::vector<std::int64_t> free_index;
  /// Prescribed value for Dirichlet vertices (unused entries are 0).
  std::vector<double> dirichlet_values;

  std::size_t dofs() const { return static_cast<std::size_t>(rhs.size()); }
};

/// a * area * grad(phi_i) . grad(phi_j) for the triangle p0, p1, p2.
std::array<std::array<double, 3>, 3> element_stiffness(const Point& p0, const Point& p1,
                                                       const Point& p2, double a);

/// Centroid quadrature for a and f, edge-midpoint quadrature for Neumann
/// data, Dirichlet rows eliminated. Throws NumericalError on non-finite
/// coefficient or source values.
LinearSystem assemble(std::shared_ptr<const TriMesh> mesh, const ScalarField& coefficient,
                      const ScalarField& source, const BoundarySpec& bc);

struct SolveInfo {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

inline constexpr double kCgTolerance = 1e-10;

/// Diagonally preconditioned CG to relative residual `tolerance`, capped at
/// 10 * n iterations. Throws NumericalError with the achieved residual.
Eigen::VectorXd solve_cg(const Eigen::SparseMatrix<double>& matrix, const Eigen::VectorXd& rhs,
                         SolveInfo* info = nullptr, double tolerance = kCgTolerance);

class FemSolution;

FemSolution solve(const LinearSystem& system, SolveInfo* info = nullptr);

/// Nodal P1 function on a mesh with cached per-triangle gradients.
class FemSolution {
 public:
  FemSolution(std::shared_ptr<const TriMesh> mesh, std::vector<double> nodal);

  struct Evaluation {
    double value;
    std::array<double, 2> gradient;
    std::size_t triangle;
  };

  const TriMesh& mesh() const noexcept { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const noexcept { return mesh_; }
  std::span<const double> nodal() const noexcept { return nodal_; }
  std::array<double, 2> gradient(std::size_t triangle) const { return gradients_[triangle]; }

  /// Barycentric interpolant and its gradient at a point of the closed square.
  /// On shared edges the lowest-index containing triangle is used.
  Evaluation eval(double x, double y) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  std::vector<double> nodal_;
  std::vector<std::array<double, 2>> gradients_;
  std::shared_ptr<const TriangleLocator> locator_;
};

FemSolution::Evaluation eval_solution(const FemSolution& solution, double x, double y);

/// Nodal interpolant of `fn`.
FemSolution interpolate(std::shared_ptr<const TriMesh> mesh, const ScalarField& fn);

/// Values and gradients of a solution at the centres of an n x n reference
/// lattice of cells on the unit square.
struct SolutionRaster {
  std::size_t n = 0;
  std::vector<double> value;
  std::vector<double> grad_x;
  std::vector<double> grad_y;

  LatticeField2D value_field() const;
  LatticeField2D grad_x_field() const;
  LatticeField2D grad_y_field() const;
};

inline constexpr std::size_t kReferenceGrid = 800;

SolutionRaster rasterize(const FemSolution& solution, std::size_t n = kReferenceGrid);

/// Discrete H1 distance: sqrt(sum over cell centres of
/// (dv^2 + |d grad v|^2) * cell area).
double v_norm_distance(const SolutionRaster& a, const FemSolution& b);
double v_norm_distance(const FemSolution& a, const FemSolution& b,
                       std::size_t n = kReferenceGrid);

/// Same discrete H1 distance against a closed-form function.
double v_norm_error(const FemSolution& solution, const ScalarField& exact_value,
                    const std::function<std::array<double, 2>(double, double)>& exact_gradient,
                    std::size_t n = kReferenceGrid);

/// Text format: vertex list, triangle list, boundary edges with their
/// Dirichlet/Neumann label and side.
void write_mesh_text(const TriMesh& mesh, const BoundarySpec& bc, std::ostream& out);

}  // namespace jdfem
