#include "jdfem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "jdfem/config.hpp"
#include "jdfem/error.hpp"

namespace jdfem {

const char* to_string(PathMethod method) {
  return method == PathMethod::Exact ? "exact" : "grid";
}

const char* to_string(MeshMode mode) {
  return mode == MeshMode::Adapted ? "adapted" : "standard";
}

double ExperimentConfig::level_h(std::size_t level) const {
  if (level == 0) throw InvalidArgument("levels are numbered from 1");
  return h_base * std::pow(h_ratio, -static_cast<double>(level - 1));
}

double ExperimentConfig::kappa(MeshMode mode) const {
  return mode == MeshMode::Adapted ? kappa_adapted : kappa_standard;
}

namespace {

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (law.family == SubordinatorLaw::Family::Poisson) {
    require(law.intensity > 0.0 && std::isfinite(law.intensity), "subordinator.intensity",
            "must be finite and > 0");
  } else {
    require(law.shape > 0.0 && std::isfinite(law.shape), "subordinator.shape",
            "must be finite and > 0");
    require(law.rate > 0.0 && std::isfinite(law.rate), "subordinator.rate",
            "must be finite and > 0");
    require(method == PathMethod::Grid, "subordinator.method",
            "gamma subordinators are only simulated on grids");
  }
  require(downscale > 0.0 && std::isfinite(downscale), "subordinator.downscale",
          "must be finite and > 0");
  require(sigma1 >= 0.0 && std::isfinite(sigma1), "fields.sigma1", "must be finite and >= 0");
  require(sigma2 >= 0.0 && std::isfinite(sigma2), "fields.sigma2", "must be finite and >= 0");
  require(r1 > 0.0 && std::isfinite(r1), "fields.r1", "must be finite and > 0");
  require(r2 > 0.0 && std::isfinite(r2), "fields.r2", "must be finite and > 0");
  require(abar > 0.0 && std::isfinite(abar), "coefficient.abar", "must be finite and > 0");
  require(phi1_amplitude >= 0.0 && std::isfinite(phi1_amplitude), "coefficient.phi1",
          "must be finite and >= 0");
  require(phi2_slope >= 0.0 && std::isfinite(phi2_slope), "coefficient.phi2",
          "must be finite and >= 0");
  require(cutoff_k > 0.0 && std::isfinite(cutoff_k), "coefficient.K", "must be finite and > 0");
  require(cutoff_a >= abar, "coefficient.A", "must be >= abar (use inf for no cut-off)");
  require(std::isfinite(source), "pde.source", "must be finite");
  require(h_base > 0.0 && h_base <= std::sqrt(2.0), "levels.h_base", "must lie in (0, sqrt(2)]");
  require(h_ratio > 1.0 && std::isfinite(h_ratio), "levels.ratio", "must be finite and > 1");
  require(levels >= 1, "levels.count", "must be >= 1");
  require(reference_level > levels, "levels.reference",
          "reference level must be finer than every measured level");
  require(samples >= 2, "sampling.samples", "must be >= 2");
  require(rel_std > 0.0 && std::isfinite(rel_std), "sampling.rel_std", "must be finite and > 0");
  require(max_samples == 0 || max_samples >= samples, "sampling.max_samples",
          "must be 0 (default cap) or >= samples");
  require(gamma > 0.0 && gamma <= 1.0, "equilibration.gamma", "must lie in (0, 1]");
  require(rc > 0.0 && std::isfinite(rc), "equilibration.rc", "must be finite and > 0");
  require(method != PathMethod::Grid || rc >= 2.0, "equilibration.rc",
          "grid subordinators need rc >= 2");
  require(kappa_adapted > 0.0 && std::isfinite(kappa_adapted), "equilibration.kappa_adapted",
          "must be finite and > 0");
  require(kappa_standard > 0.0 && std::isfinite(kappa_standard), "equilibration.kappa_standard",
          "must be finite and > 0");
  require(kappa_reference > 0.0 && std::isfinite(kappa_reference),
          "equilibration.kappa_reference", "must be finite and > 0");
  require(!arms.empty(), "run.arms", "needs at least one arm");
}

std::pair<double, double> equilibrate(double h, double kappa, double gamma, double rc) {
  if (!(h > 0.0) || !(kappa > 0.0) || !(gamma > 0.0) || !(rc > 0.0)) {
    throw InvalidArgument("equilibrate: all inputs must be positive");
  }
  if (gamma > 1.0) throw InvalidArgument("equilibrate: gamma must be <= 1");
  return {std::pow(h, kappa / gamma), std::pow(h, kappa * rc)};
}

// ---------------------------------------------------------------------------
// prepared experiment

namespace {

constexpr double kSnapTolerance = 1e-12;

// Smallest power of two N with extent / N <= eps.
std::size_t dyadic_intervals(double extent, double eps) {
  std::size_t n = 1;
  while (extent / static_cast<double>(n) > eps * (1.0 + kSnapTolerance)) {
    if (n > (std::size_t{1} << 24)) throw InvalidArgument("approximation step too small");
    n *= 2;
  }
  return n;
}

// Largest power of two f dividing n with f * extent / n <= eps (at least 1).
std::size_t dyadic_factor(double extent, std::size_t n, double eps) {
  std::size_t f = 1;
  while (f * 2 <= n &&
         static_cast<double>(f * 2) * extent / static_cast<double>(n) <=
             eps * (1.0 + kSnapTolerance)) {
    f *= 2;
  }
  return f;
}

BoundarySpec boundary(BoundarySpec::Mode mode) {
  return mode == BoundarySpec::Mode::HomogeneousDirichlet ? BoundarySpec::homogeneous_dirichlet()
                                                          : BoundarySpec::mixed();
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

Experiment::Experiment(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  const double h_ref = config_.level_h(config_.reference_level);
  const auto [eps_w, eps_l] =
      equilibrate(h_ref, config_.kappa_reference, config_.gamma, config_.rc);
  reference_ = Discretization{config_.reference_mesh, h_ref, eps_w, eps_l};

  const std::size_t n1 = dyadic_intervals(1.0, eps_w);
  const std::size_t n2 = dyadic_intervals(config_.cutoff_k, eps_w);
  w1_grid_ = GridSpec2D::with_intervals({0.0, 0.0}, {1.0, 1.0}, {n1, n1});
  w2_grid_ = GridSpec2D::with_intervals({0.0, 0.0}, {config_.cutoff_k, config_.cutoff_k},
                                        {n2, n2});
  w1_sampler_ = std::make_shared<const CirculantEmbedding>(
      w1_grid_, CovarianceModel::matern32(config_.sigma1 * config_.sigma1, config_.r1));
  w2_sampler_ = std::make_shared<const CirculantEmbedding>(
      w2_grid_, CovarianceModel::matern32(config_.sigma2 * config_.sigma2, config_.r2));
  if (config_.method == PathMethod::Grid) path_intervals_ = dyadic_intervals(1.0, eps_l);
}

Discretization Experiment::level(MeshMode mode, std::size_t level) const {
  if (level == 0 || level >= config_.reference_level) {
    throw InvalidArgument("level must lie in 1 .. reference level - 1");
  }
  const double h = config_.level_h(level);
  const auto [eps_w, eps_l] = equilibrate(h, config_.kappa(mode), config_.gamma, config_.rc);
  return Discretization{mode, h, eps_w, eps_l};
}

double Experiment::field_step(double eps_w) const {
  return w1_grid_.step(0) *
         static_cast<double>(dyadic_factor(1.0, w1_grid_.intervals[0], eps_w));
}

double Experiment::path_step(double eps_l) const {
  if (config_.method == PathMethod::Exact) return 0.0;
  return static_cast<double>(dyadic_factor(1.0, path_intervals_, eps_l)) /
         static_cast<double>(path_intervals_);
}

std::pair<Experiment::Inputs, Experiment::Inputs> Experiment::draw_pair(std::uint64_t k) const {
  RandomStream s1(derive_seed(config_.seed, "W1", k));
  RandomStream s2(derive_seed(config_.seed, "W2", k));
  auto [w1a, w1b] = w1_sampler_->sample_pair(s1);
  auto [w2a, w2b] = w2_sampler_->sample_pair(s2);

  const auto path = [&](const char* tag, std::uint64_t index) {
    RandomStream rng(derive_seed(config_.seed, tag, index));
    SubordinatorPath p = config_.method == PathMethod::Exact
                             ? sample_poisson_exact(config_.law.intensity, 1.0, rng)
                             : sample_path_on_grid(config_.law, 1.0, path_intervals_, rng);
    return config_.downscale == 1.0 ? p : p.scaled(config_.downscale);
  };
  const std::uint64_t even = 2 * k;
  Inputs a{std::make_shared<const LatticeField2D>(std::move(w1a)),
           std::make_shared<const LatticeField2D>(std::move(w2a)), path("l1", even),
           path("l2", even)};
  Inputs b{std::make_shared<const LatticeField2D>(std::move(w1b)),
           std::make_shared<const LatticeField2D>(std::move(w2b)), path("l1", even + 1),
           path("l2", even + 1)};
  return {std::move(a), std::move(b)};
}

Experiment::Inputs Experiment::draw(std::uint64_t index) const {
  auto pair = draw_pair(index / 2);
  return index % 2 == 0 ? std::move(pair.first) : std::move(pair.second);
}

CoefficientSample Experiment::coefficient(const Inputs& inputs,
                                          const Discretization& disc) const {
  const auto restrict_to = [](const std::shared_ptr<const LatticeField2D>& field, double eps) {
    const GridSpec2D& g = field->grid();
    const std::size_t f = dyadic_factor(g.extent[0], g.intervals[0], eps);
    if (f == 1) return field;
    return std::make_shared<const LatticeField2D>(restrict_field(*field, f));
  };
  const auto coarsen = [&](const SubordinatorPath& path) {
    if (path.representation() != PathRepresentation::GridIncrements) return path;
    const std::size_t f = dyadic_factor(1.0, path.grid_intervals(), disc.eps_l);
    return f == 1 ? path : path.coarsened(f);
  };
  return CoefficientSample(BaseCoefficient::constant(config_.abar),
                           Transform::scaled_exp(config_.phi1_amplitude),
                           Transform::scaled_abs(config_.phi2_slope),
                           restrict_to(inputs.w1, disc.eps_w), restrict_to(inputs.w2, disc.eps_w),
                           coarsen(inputs.l1), coarsen(inputs.l2), config_.cutoff_k,
                           config_.cutoff_a);
}

std::shared_ptr<const TriMesh> Experiment::mesh(const CoefficientSample& sample,
                                                const Discretization& disc) const {
  if (disc.mesh == MeshMode::Standard) {
    return std::make_shared<const TriMesh>(mesh_uniform(disc.h));
  }
  const JumpLines lines = jump_lines(sample);
  return std::make_shared<const TriMesh>(mesh_adapted(lines.xs, lines.ys, disc.h, disc.h / 4.0));
}

FemSolution Experiment::solve(const Inputs& inputs, const Discretization& disc,
                              std::size_t* dofs) const {
  const CoefficientSample a = coefficient(inputs, disc);
  const double f = config_.source;
  const LinearSystem system =
      assemble(mesh(a, disc), [&a](double x, double y) { return a(x, y); },
               [f](double, double) { return f; }, boundary(config_.bc));
  if (dofs) *dofs = system.dofs();
  return jdfem::solve(system);
}

SampleResult Experiment::run_sample(const Discretization& disc, std::uint64_t index) const {
  const Inputs inputs = draw(index);
  const std::vector<SampleOutcome> out =
      run_batch(std::span<const Discretization>(&disc, 1), inputs);
  if (!out.front().ok()) throw NumericalError(out.front().error);
  return out.front().result;
}

std::vector<SampleOutcome> Experiment::run_batch(std::span<const Discretization> discs,
                                                 const Inputs& inputs) const {
  std::vector<SampleOutcome> out(discs.size());
  std::optional<SolutionRaster> reference;
  try {
    reference = rasterize(solve(inputs, reference_));
  } catch (const std::exception& e) {
    for (auto& o : out) o.error = std::string("reference solve failed: ") + e.what();
    return out;
  }
  for (std::size_t d = 0; d < discs.size(); ++d) {
    const auto start = std::chrono::steady_clock::now();
    try {
      std::size_t dofs = 0;
      const FemSolution level = solve(inputs, discs[d], &dofs);
      const double dist = v_norm_distance(*reference, level);
      out[d].result = SampleResult{dist * dist, dofs};
    } catch (const std::exception& e) {
      out[d].error = e.what();
    }
    out[d].wall_ms = elapsed_ms(start);
  }
  return out;
}

SampleResult run_coupled_sample(const Experiment& experiment, MeshMode mode, std::size_t level,
                                std::uint64_t index) {
  return experiment.run_sample(experiment.level(mode, level), index);
}

// ---------------------------------------------------------------------------
// estimation

double LevelResult::std_error() const {
  return samples > 0 ? std / std::sqrt(static_cast<double>(samples)) : 0.0;
}

std::pair<RateFit, RateFit> fit_rate(std::span<const LevelResult> levels) {
  std::vector<double> lh;
  std::vector<double> ld;
  std::vector<double> le;
  for (const LevelResult& r : levels) {
    if (r.samples == 0 || !(r.mean_sq_error > 0.0) || !std::isfinite(r.mean_sq_error)) continue;
    lh.push_back(std::log(r.h));
    ld.push_back(std::log(r.mean_dofs));
    le.push_back(0.5 * std::log(r.mean_sq_error));
  }
  if (le.size() < 2) throw InvalidArgument("fit_rate: need at least two valid levels");
  const auto ols = [&le](const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += le[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (le[i] - my);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit_rate: abscissae must not all coincide");
    const double slope = sxy / sxx;
    return RateFit{slope, my - slope * mx};
  };
  return {ols(lh), ols(ld)};
}

namespace {

struct Job {
  MeshMode mode;
  std::size_t level;
  Discretization disc;
  bool active = true;
  std::vector<SampleOutcome> outcomes;  // indexed by sample index
};

void run_indices(const Experiment& experiment, std::vector<Job*>& jobs, std::uint64_t begin,
                 std::uint64_t end, std::size_t workers) {
  std::vector<Discretization> discs;
  for (const Job* j : jobs) discs.push_back(j->disc);
  std::vector<std::vector<SampleOutcome>> results(end - begin);

  const std::uint64_t first_pair = begin / 2;
  const std::uint64_t last_pair = (end + 1) / 2;
  std::atomic<std::uint64_t> next{first_pair};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    while (true) {
      const std::uint64_t k = next.fetch_add(1);
      if (k >= last_pair) return;
      try {
        auto [a, b] = experiment.draw_pair(k);
        for (std::uint64_t index : {2 * k, 2 * k + 1}) {
          if (index < begin || index >= end) continue;
          results[index - begin] = experiment.run_batch(discs, index % 2 == 0 ? a : b);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(workers, last_pair - first_pair));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (std::uint64_t i = begin; i < end; ++i) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      jobs[j]->outcomes.push_back(std::move(results[i - begin][j]));
    }
  }
}

LevelResult summarize(const Job& job) {
  LevelResult r;
  r.level = job.level;
  r.h = job.disc.h;
  r.eps_w = job.disc.eps_w;
  r.eps_l = job.disc.eps_l;
  double sum = 0.0;
  double dofs = 0.0;
  for (std::size_t i = 0; i < job.outcomes.size(); ++i) {
    const SampleOutcome& o = job.outcomes[i];
    r.wall_ms += o.wall_ms;
    if (!o.ok()) {
      r.voided.push_back(VoidedSample{i, o.error});
      continue;
    }
    sum += o.result.sq_error;
    dofs += static_cast<double>(o.result.dofs);
    ++r.samples;
  }
  if (r.samples == 0) return r;
  const double n = static_cast<double>(r.samples);
  r.mean_sq_error = sum / n;
  r.mean_dofs = dofs / n;
  double ss = 0.0;
  for (const SampleOutcome& o : job.outcomes) {
    if (o.ok()) ss += (o.result.sq_error - r.mean_sq_error) * (o.result.sq_error - r.mean_sq_error);
  }
  r.std = r.samples > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return r;
}

bool converged(const LevelResult& r, double rel_std) {
  return r.samples >= 2 && r.std_error() <= rel_std * r.mean_sq_error;
}

// Runs all jobs on shared sample indices, doubling the active set's target
// until each job converges or hits the cap.
void run_jobs(const Experiment& experiment, std::vector<Job>& jobs, const RunOptions& options) {
  const ExperimentConfig& cfg = experiment.config();
  const std::size_t cap = cfg.sample_cap();
  std::uint64_t cursor = 0;
  std::size_t target = std::min(cfg.samples, cap);
  while (true) {
    std::vector<Job*> active;
    for (Job& j : jobs) {
      if (j.active) active.push_back(&j);
    }
    if (active.empty()) break;
    run_indices(experiment, active, cursor, target, options.workers);
    cursor = target;
    for (Job* j : active) {
      const LevelResult r = summarize(*j);
      if (converged(r, cfg.rel_std) || (r.samples >= 2 && r.std == 0.0) || target >= cap) {
        j->active = false;
      }
      if (options.progress) {
        std::ostringstream msg;
        msg << to_string(j->mode) << " level " << j->level << ": M = " << r.samples
            << ", mean = " << r.mean_sq_error << ", std error = " << r.std_error();
        options.progress(msg.str());
      }
    }
    target = std::min(2 * target, cap);
  }
}

LevelResult finish(const Job& job, const ExperimentConfig& cfg) {
  LevelResult r = summarize(job);
  r.capped = !converged(r, cfg.rel_std) && !(r.samples >= 2 && r.std == 0.0);
  return r;
}

}  // namespace

LevelResult estimate_level(const Experiment& experiment, MeshMode mode, std::size_t level,
                           const RunOptions& options) {
  std::vector<Job> jobs;
  jobs.push_back(Job{mode, level, experiment.level(mode, level), true, {}});
  run_jobs(experiment, jobs, options);
  return finish(jobs.front(), experiment.config());
}

ConvergenceReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const Experiment experiment(config);
  std::vector<Job> jobs;
  for (MeshMode mode : config.arms) {
    for (std::size_t l = 1; l <= config.levels; ++l) {
      jobs.push_back(Job{mode, l, experiment.level(mode, l), true, {}});
    }
  }
  run_jobs(experiment, jobs, options);

  ConvergenceReport report;
  report.seed = config.seed;
  report.config_echo = echo_config(config);
  report.reference = experiment.reference();
  std::size_t next = 0;
  for (MeshMode mode : config.arms) {
    ArmReport arm;
    arm.mesh = mode;
    arm.kappa = config.kappa(mode);
    for (std::size_t l = 1; l <= config.levels; ++l) {
      LevelResult r = finish(jobs[next++], config);
      if (r.capped) {
        std::ostringstream msg;
        msg << "level " << r.level << " reached the sample cap (" << r.samples
            << " valid samples) before the relative standard error target";
        arm.flags.push_back(msg.str());
      }
      if (!r.voided.empty()) {
        std::ostringstream msg;
        msg << "level " << r.level << ": " << r.voided.size() << " voided samples";
        arm.flags.push_back(msg.str());
      }
      arm.levels.push_back(std::move(r));
    }
    try {
      auto [by_h, by_dofs] = fit_rate(arm.levels);
      arm.rate_h = by_h;
      arm.rate_dofs = by_dofs;
    } catch (const InvalidArgument& e) {
      arm.flags.push_back(std::string("no fitted rate: ") + e.what());
    }
    report.arms.push_back(std::move(arm));
  }
  if (config.levels < 2) report.flags.push_back("single-level experiment: no fitted rate");
  return report;
}

}  // namespace jdfem
