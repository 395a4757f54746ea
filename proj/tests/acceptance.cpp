// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jdfem/config.hpp"
#include "jdfem/experiment.hpp"
#include "jdfem/report.hpp"
#include "stats.hpp"

using namespace jdfem;
using namespace jdfem::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Rounded to 4 significant figures.
std::string sig4(double v) { return fmt("%.3e", v); }

Outcome tails() {
  struct Case {
    SubordinatorLaw law;
    double k;
    double expect;
  };
  const Case cases[] = {{SubordinatorLaw::poisson(1.0), 8.0, 1.1252e-06},
                        {SubordinatorLaw::poisson(5.0), 15.0, 6.9008e-05},
                        {SubordinatorLaw::gamma(4.0, 10.0), 2.0, 3.2042e-06}};
  Outcome o{true, ""};
  const auto start = std::chrono::steady_clock::now();
  for (const Case& c : cases) {
    const double p = tail_probability(c.law, c.k, 1.0);
    o.pass = o.pass && sig4(p) == sig4(c.expect);
    o.detail += sig4(p) + " ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.pass = o.pass && secs < 1.0;
  return o;
}

Outcome gamma_moments() {
  RandomStream rng(derive_seed(2, "acceptance-gamma"));
  const auto law = SubordinatorLaw::gamma(4.0, 10.0);
  const double delta = 0.25;
  std::vector<std::vector<double>> pw(4);
  for (int k = 0; k < 10000; ++k) {
    const auto p = sample_path_grid(law, delta, 1.0, rng);
    const double inc = p.values()[1] - p.values()[0];
    for (unsigned n = 1; n <= 3; ++n) pw[n].push_back(std::pow(inc, n));
  }
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 3; ++n) {
    const Moments m = moments(pw[n]);
    const double z = (m.mean - gamma_raw_moment(4.0 * delta, 10.0, n)) / m.std_error(pw[n].size());
    o.pass = o.pass && std::abs(z) <= 4.0;
    o.detail += "z" + std::to_string(n) + "=" + fmt("%.2f", z) + " ";
  }
  return o;
}

Outcome grf_covariance() {
  const auto grid = GridSpec2D::with_intervals({0.0, 0.0}, {1.0, 1.0}, {64, 64});
  const auto model = CovarianceModel::matern32(1.5 * 1.5, 0.5);
  const CirculantEmbedding ce(grid, model);
  RandomStream rng(derive_seed(3, "acceptance-grf"));
  std::vector<std::vector<double>> prod(3);
  for (int k = 0; k < 500; ++k) {
    const auto [a, b] = ce.sample_pair(rng);
    for (const LatticeField2D* f : {&a, &b}) {
      for (std::size_t lag = 0; lag < 3; ++lag) prod[lag].push_back(f->at(32, 32) * f->at(32 + lag, 32));
    }
  }
  Outcome o{true, ""};
  for (std::size_t lag = 0; lag < 3; ++lag) {
    const Moments m = moments(prod[lag]);
    const double z = (m.mean - cov_eval(model, lag * grid.step(0))) / m.std_error(prod[lag].size());
    o.pass = o.pass && std::abs(z) <= 4.0;
    o.detail += "lag" + std::to_string(lag) + " z=" + fmt("%.2f", z) + " ";
  }
  return o;
}

Outcome interpolation_rate() {
  const auto grid = GridSpec2D::with_intervals({0.0, 0.0}, {1.0, 1.0}, {256, 256});
  const CirculantEmbedding ce(grid, CovarianceModel::matern32(1.5 * 1.5, 0.5));
  RandomStream rng(derive_seed(4, "acceptance-interp"));
  const LatticeField2D fine = ce.sample(rng);
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t f : {16u, 8u, 4u, 2u}) {
    const LatticeField2D coarse = restrict_field(fine, f);
    double sup = 0.0;
    for (std::size_t j = 0; j <= 256; ++j) {
      for (std::size_t i = 0; i <= 256; ++i) {
        sup = std::max(sup, std::abs(fine.at(i, j) - coarse.eval(grid.coordinate(0, i), grid.coordinate(1, j))));
      }
    }
    lx.push_back(std::log(coarse.grid().step(0)));
    ly.push_back(std::log(sup));
  }
  const double s = slope(lx, ly);
  return {s >= 0.8, "slope=" + fmt("%.3f", s)};
}

Outcome fem_exactness() {
  double worst = 0.0;
  for (std::size_t l = 1; l <= 5; ++l) {
    const double h = 0.4 * std::pow(2.0, -static_cast<double>(l - 1));
    for (double a : {1.0, 0.1, 7.3}) {
      const auto mesh = std::make_shared<const TriMesh>(mesh_uniform(h));
      const FemSolution s = solve(assemble(mesh, [a](double, double) { return a; }, [](double, double) { return 0.0; },
                                           BoundarySpec::mixed()));
      worst = std::max(worst, v_norm_error(s, [](double x, double) { return 0.1 + 0.2 * x; },
                                           [](double, double) { return std::array<double, 2>{0.2, 0.0}; }));
    }
  }
  return {worst <= 1e-10, "max V-error=" + fmt("%.2e", worst)};
}

Outcome fem_rate() {
  std::vector<double> lx;
  std::vector<double> ly;
  std::string errs;
  for (std::size_t l = 1; l <= 4; ++l) {
    const double h = 0.4 * std::pow(2.0, -static_cast<double>(l - 1));
    const auto mesh = std::make_shared<const TriMesh>(mesh_uniform(h));
    const FemSolution s = solve(assemble(mesh, [](double, double) { return 0.1; },
                                         [](double, double) { return 10.0; }, BoundarySpec::mixed()));
    const double e = v_norm_error(
        s, [](double x, double) { return 0.1 + 50.2 * x - 50.0 * x * x; },
        [](double x, double) { return std::array<double, 2>{50.2 - 100.0 * x, 0.0}; });
    lx.push_back(std::log(mesh->h()));
    ly.push_back(std::log(e));
  }
  const double s = slope(lx, ly);
  return {s >= 0.85 && s <= 1.15, "slope=" + fmt("%.3f", s)};
}

Outcome coefficient_rate() {
  const double k = 8.0;
  const std::size_t n_ref = 128;
  const CirculantEmbedding e1(GridSpec2D::with_intervals({0.0, 0.0}, {1.0, 1.0}, {n_ref, n_ref}),
                              CovarianceModel::matern32(1.5 * 1.5, 0.5));
  const CirculantEmbedding e2(GridSpec2D::with_intervals({0.0, 0.0}, {k, k}, {8 * n_ref, 8 * n_ref}),
                              CovarianceModel::matern32(0.3 * 0.3, 1.0));
  const std::vector<std::size_t> factors{16, 8, 4, 2};
  std::vector<double> sq(factors.size(), 0.0);
  const int draws = 40;
  for (int d = 0; d < draws; ++d) {
    RandomStream rng(derive_seed(7, "acceptance-coefficient", d));
    const auto w1 = std::make_shared<const LatticeField2D>(e1.sample(rng));
    const auto w2 = std::make_shared<const LatticeField2D>(e2.sample(rng));
    const auto l1 = sample_poisson_exact(1.0, 1.0, rng);
    const auto l2 = sample_poisson_exact(1.0, 1.0, rng);
    const auto make = [&](std::shared_ptr<const LatticeField2D> a, std::shared_ptr<const LatticeField2D> b) {
      return CoefficientSample(BaseCoefficient::constant(0.1), Transform::scaled_exp(0.01),
                               Transform::scaled_abs(5.0), std::move(a), std::move(b), l1, l2, k, 50.0);
    };
    const CoefficientSample ref = make(w1, w2);
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const CoefficientSample lvl = make(std::make_shared<const LatticeField2D>(restrict_field(*w1, factors[f])),
                                         std::make_shared<const LatticeField2D>(restrict_field(*w2, factors[f])));
      const double dist = coefficient_distance(ref, lvl, 2.0, 400);
      sq[f] += dist * dist / draws;
    }
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    lx.push_back(std::log(static_cast<double>(factors[f]) / n_ref));
    ly.push_back(0.5 * std::log(sq[f]));
  }
  const double s = slope(lx, ly);
  return {s >= 0.8, "slope=" + fmt("%.3f", s)};
}

struct StudyFiles {
  std::string json;
  std::vector<std::string> csv;
};

StudyFiles run_study(const ExperimentConfig& config, ConvergenceReport* out) {
  RunOptions options;
  options.workers = std::max(1u, std::thread::hardware_concurrency());
  const ConvergenceReport r = run_experiment(config, options);
  StudyFiles files{report_to_json(r), {}};
  for (const ArmReport& arm : r.arms) {
    std::ostringstream csv;
    write_level_csv(arm, r.seed, csv);
    files.csv.push_back(std::regex_replace(csv.str(), std::regex(",[0-9.]+\n"), ",*\n"));
  }
  if (out) *out = r;
  return files;
}

Outcome strong_rates(const ExperimentConfig& config, StudyFiles* files) {
  ConvergenceReport r;
  *files = run_study(config, &r);
  const ArmReport* adapted = nullptr;
  const ArmReport* standard = nullptr;
  for (const ArmReport& a : r.arms) (a.mesh == MeshMode::Adapted ? adapted : standard) = &a;
  if (!adapted || !standard || !adapted->rate_h || !standard->rate_h) return {false, "missing rate"};
  const double ra = adapted->rate_h->slope;
  const double rs = standard->rate_h->slope;
  const double ea = adapted->levels.back().mean_sq_error;
  const double es = standard->levels.back().mean_sq_error;
  std::size_t capped = 0;
  for (const ArmReport& a : r.arms) {
    for (const LevelResult& l : a.levels) capped += l.capped;
  }
  const bool pass = ra >= 0.75 && ra <= 1.25 && rs >= 0.45 && rs <= 0.95 && ea <= es;
  return {pass, "adapted=" + fmt("%.3f", ra) + " standard=" + fmt("%.3f", rs) + " finest mse " + fmt("%.3e", ea) +
                    " <= " + fmt("%.3e", es) + ", capped levels " + std::to_string(capped)};
}

Outcome mesh_structure() {
  const double floor = 26.0 * std::numbers::pi / 180.0;
  double worst_angle = std::numbers::pi;
  double worst_gap = 0.0;
  bool on_edges = true;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RandomStream rng(derive_seed(9, "acceptance-mesh", seed));
    const auto l1 = sample_poisson_exact(1.0, 1.0, rng).jump_locations();
    const auto l2 = sample_poisson_exact(1.0, 1.0, rng).jump_locations();
    for (std::size_t l = 1; l <= 4; ++l) {
      const double h = 0.4 * std::pow(2.0, -static_cast<double>(l - 1));
      const double tol = h / 4.0;
      const TriMesh m = mesh_adapted(l1, l2, h, tol);
      worst_angle = std::min(worst_angle, m.theta_min());
      const auto gap = [](std::span<const double> lines, double t) {
        double d = std::numeric_limits<double>::infinity();
        for (double g : lines) d = std::min(d, std::abs(g - t));
        return d;
      };
      for (double t : l1) worst_gap = std::max(worst_gap, gap(m.grid_x(), t) / tol);
      for (double t : l2) worst_gap = std::max(worst_gap, gap(m.grid_y(), t) / tol);
      // Grid lines must be unions of triangle edges.
      for (const Triangle& tri : m.triangles()) {
        for (int axis = 0; axis < 2 && on_edges; ++axis) {
          double lo = 1.0;
          double hi = 0.0;
          for (auto v : tri) {
            const double p = axis == 0 ? m.vertices()[v].x : m.vertices()[v].y;
            lo = std::min(lo, p);
            hi = std::max(hi, p);
          }
          const auto lines = axis == 0 ? m.grid_x() : m.grid_y();
          for (double g : lines) on_edges = on_edges && !(g > lo + 1e-12 && g < hi - 1e-12);
        }
      }
    }
  }
  const bool pass = on_edges && worst_gap <= 1.0 + 1e-9 && worst_angle >= floor;
  return {pass, "min angle=" + fmt("%.2f", worst_angle * 180.0 / std::numbers::pi) +
                    " deg, max offset/merge_tol=" + fmt("%.3f", worst_gap) + (on_edges ? "" : ", line crosses a triangle")};
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig study;
  study.max_samples = 40;
  study.seed = 20240601;
  if (argc > 1) study = load_config(argv[1]);
  int failures = 0;
  StudyFiles first;
  const auto report = [&](int n, const char* what, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s (%s, %.1f s)\n", n, o.pass ? "PASS" : "FAIL", what, o.detail.c_str(), secs);
    std::fflush(stdout);
  };
  report(1, "tail probabilities", tails);
  report(2, "gamma raw moments", gamma_moments);
  report(3, "circulant embedding covariance", grf_covariance);
  report(4, "bilinear interpolation rate", interpolation_rate);
  report(5, "linear FEM exactness", fem_exactness);
  report(6, "quadratic benchmark FEM rate", fem_rate);
  report(7, "coefficient approximation rate", coefficient_rate);
  report(8, "strong-error rates", [&] { return strong_rates(study, &first); });
  report(9, "adapted mesh structure", mesh_structure);
  report(10, "determinism", [&]() -> Outcome {
    const StudyFiles second = run_study(study, nullptr);
    const bool same = !first.json.empty() && first.json == second.json && first.csv == second.csv;
    return {same, same ? "report JSON and CSV identical" : "outputs differ"};
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
