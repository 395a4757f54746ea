#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "jdfem/error.hpp"
#include "jdfem/fem.hpp"
#include "stats.hpp"

using namespace jdfem;

namespace {

std::shared_ptr<const TriMesh> uniform(double h) { return std::make_shared<const TriMesh>(mesh_uniform(h)); }

const ScalarField kOne = [](double, double) { return 1.0; };
const ScalarField kZero = [](double, double) { return 0.0; };

double quadratic(double x, double) { return 0.1 + 50.2 * x - 50.0 * x * x; }
std::array<double, 2> quadratic_grad(double x, double) { return {50.2 - 100.0 * x, 0.0}; }

}  // namespace

TEST(Element, ReferenceTriangleStiffness) {
  const auto k = element_stiffness({0, 0}, {1, 0}, {0, 1}, 1.0);
  const double expect[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(k[i][j], expect[i][j], 1e-15);
  }
  const auto k2 = element_stiffness({0.2, 0.1}, {0.7, 0.3}, {0.1, 0.9}, 2.5);
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 3; ++j) {
      row += k2[i][j];
      EXPECT_NEAR(k2[i][j], k2[j][i], 1e-15);
    }
    EXPECT_NEAR(row, 0.0, 1e-14);
  }
}

TEST(Assemble, SymmetricPositiveDefinite) {
  const auto mesh = std::make_shared<const TriMesh>(mesh_adapted(std::vector<double>{0.4}, {}, 0.25, 0.06));
  const LinearSystem sys = assemble(
      mesh, [](double x, double y) { return x < 0.4 ? 0.1 : 3.0 + y; }, kOne, BoundarySpec::mixed());
  const Eigen::MatrixXd a(sys.matrix);
  EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Assemble, RejectsNonFiniteData) {
  const auto mesh = uniform(0.5);
  EXPECT_THROW(assemble(mesh, [](double, double) { return std::nan(""); }, kOne, BoundarySpec::mixed()),
               NumericalError);
}

TEST(Solve, IdentitySystem) {
  Eigen::SparseMatrix<double> id(5, 5);
  id.setIdentity();
  Eigen::VectorXd b(5);
  b << 1, 2, 3, 4, 5;
  EXPECT_LT((solve_cg(id, b) - b).norm(), 1e-15);
}

TEST(Solve, HomogeneousDataGivesZero) {
  const FemSolution s = solve(assemble(uniform(0.2), kOne, kZero, BoundarySpec::homogeneous_dirichlet()));
  for (double v : s.nodal()) EXPECT_EQ(v, 0.0);
}

TEST(Solve, LinearExactness) {
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    const auto mesh = uniform(h);
    SolveInfo info;
    const FemSolution s = solve(assemble(mesh, [](double, double) { return 0.7; }, kZero, BoundarySpec::mixed()), &info);
    EXPECT_LE(info.relative_residual, 1e-10);
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
      // Exact up to the CG stopping tolerance.
      EXPECT_NEAR(s.nodal()[v], 0.1 + 0.2 * mesh->vertices()[v].x, 1e-10);
    }
    const auto e = s.eval(0.33, 0.71);
    EXPECT_NEAR(e.gradient[0], 0.2, 1e-10);
    EXPECT_NEAR(e.gradient[1], 0.0, 1e-10);
    const double err = v_norm_error(s, [](double x, double) { return 0.1 + 0.2 * x; },
                                    [](double, double) { return std::array<double, 2>{0.2, 0.0}; }, 200);
    EXPECT_LE(err, 1e-10);
  }
}

TEST(Solve, QuadraticBenchmarkRate) {
  std::vector<double> lx;
  std::vector<double> ly;
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.4, 0.2, 0.1, 0.05}) {
    const auto mesh = uniform(h);
    const FemSolution s =
        solve(assemble(mesh, [](double, double) { return 0.1; }, [](double, double) { return 10.0; },
                       BoundarySpec::mixed()));
    const double err = v_norm_error(s, quadratic, quadratic_grad, 400);
    EXPECT_LT(err, prev);
    prev = err;
    lx.push_back(std::log(mesh->h()));
    ly.push_back(std::log(err));
  }
  const double slope = jdfem::testing::slope(lx, ly);
  EXPECT_GE(slope, 0.85);
  EXPECT_LE(slope, 1.15);
}

TEST(Solve, MaximumPrinciple) {
  for (double h : {0.3, 0.1}) {
    const FemSolution s = solve(assemble(
        uniform(h), [](double x, double y) { return 0.1 + x * y; }, [](double x, double) { return 5.0 * x; },
        BoundarySpec::mixed()));
    for (double v : s.nodal()) EXPECT_GE(v, 0.1 - 1e-8);
  }
}

TEST(Solve, NeumannFluxEntersLoad) {
  // u = 2y: Dirichlet bottom, flux 2 on top, zero flux on the vertical sides.
  std::array<std::optional<double>, 4> d{};
  d[static_cast<int>(Side::Bottom)] = 0.0;
  std::array<double, 4> g{0.0, 0.0, 2.0, 0.0};
  const auto mesh = uniform(0.2);
  const FemSolution s = solve(assemble(mesh, kOne, kZero, BoundarySpec::custom(d, g)));
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    EXPECT_NEAR(s.nodal()[v], 2.0 * mesh->vertices()[v].y, 1e-9);
  }
}

TEST(Evaluate, VerticesAndBarycentricTransect) {
  const auto mesh = std::make_shared<const TriMesh>(mesh_adapted(std::vector<double>{0.3}, std::vector<double>{0.6}, 0.3, 0.07));
  const FemSolution s = interpolate(mesh, [](double x, double y) { return std::sin(3 * x) + y * y; });
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    const Point p = mesh->vertices()[v];
    EXPECT_NEAR(s.eval(p.x, p.y).value, s.nodal()[v], 1e-14);
  }
  for (int k = 0; k <= 100; ++k) {
    const double x = 0.01 * k;
    const double y = 0.2 + 0.005 * k;
    const auto e = s.eval(x, y);
    const Triangle& t = mesh->triangles()[e.triangle];
    const Point a = mesh->vertices()[t[0]];
    const Point b = mesh->vertices()[t[1]];
    const Point c = mesh->vertices()[t[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((x - a.x) * (c.y - a.y) - (c.x - a.x) * (y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
    const double expect = (1 - l1 - l2) * s.nodal()[t[0]] + l1 * s.nodal()[t[1]] + l2 * s.nodal()[t[2]];
    EXPECT_NEAR(e.value, expect, 1e-13);
  }
}

TEST(VNorm, IdentityShiftAndInterpolant) {
  const auto mesh = uniform(0.2);
  const FemSolution a = interpolate(mesh, [](double x, double y) { return x * y; });
  EXPECT_EQ(v_norm_distance(a, a, 100), 0.0);
  const FemSolution b = interpolate(mesh, [](double x, double y) { return x * y + 0.3; });
  EXPECT_NEAR(v_norm_distance(a, b, 100), 0.3, 1e-12);
  const FemSolution lin = interpolate(uniform(0.13), [](double x, double) { return 0.1 + 0.2 * x; });
  EXPECT_LE(v_norm_error(lin, [](double x, double) { return 0.1 + 0.2 * x; },
                         [](double, double) { return std::array<double, 2>{0.2, 0.0}; }),
            1e-12);
  const SolutionRaster r = rasterize(b, 100);
  EXPECT_NEAR(v_norm_distance(r, a), 0.3, 1e-12);
  EXPECT_EQ(r.value_field().grid().nodes(0), 100u);
}

TEST(MeshText, Labels) {
  std::ostringstream out;
  write_mesh_text(mesh_uniform(std::sqrt(2.0)), BoundarySpec::mixed(), out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("# jdfem triangle mesh\n", 0), 0u);
  EXPECT_NE(s.find("vertices 4"), std::string::npos);
  EXPECT_NE(s.find("triangles 2"), std::string::npos);
  EXPECT_NE(s.find("boundary_edges 4"), std::string::npos);
  EXPECT_NE(s.find("dirichlet left"), std::string::npos);
  EXPECT_NE(s.find("neumann bottom"), std::string::npos);
}
