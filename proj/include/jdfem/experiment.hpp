#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jdfem/coefficient.hpp"
#include "jdfem/fem.hpp"
#include "jdfem/randomfield.hpp"
#include "jdfem/subordinator.hpp"

namespace jdfem {

inline constexpr const char* kVersion = "0.1.0";

enum class PathMethod { Exact, Grid };
enum class MeshMode { Adapted, Standard };

const char* to_string(PathMethod method);
const char* to_string(MeshMode mode);

struct ExperimentConfig {
  // [subordinator]
  SubordinatorLaw law = SubordinatorLaw::poisson(1.0);
  PathMethod method = PathMethod::Grid;
  double downscale = 1.0;

  // [fields] standard deviations and correlation lengths
  double sigma1 = 1.5;
  double r1 = 0.5;
  double sigma2 = 0.3;
  double r2 = 1.0;

  // [coefficient]
  double abar = 0.1;
  double phi1_amplitude = 0.01;
  double phi2_slope = 5.0;
  double cutoff_k = 8.0;
  double cutoff_a = 50.0;

  // [pde]
  BoundarySpec::Mode bc = BoundarySpec::Mode::Mixed;
  double source = 10.0;

  // [levels] h_l = h_base * h_ratio^-(l-1), l = 1..levels
  double h_base = 0.4;
  double h_ratio = 2.0;
  std::size_t levels = 4;
  std::size_t reference_level = 5;
  MeshMode reference_mesh = MeshMode::Adapted;

  // [sampling]
  std::size_t samples = 10;
  double rel_std = 0.1;
  /// 0 means 16 * samples.
  std::size_t max_samples = 0;

  // [equilibration]
  double gamma = 1.0;
  double rc = 2.01;
  double kappa_adapted = 1.0;
  double kappa_standard = 0.7;
  double kappa_reference = 1.0;

  // [run]
  std::uint64_t seed = 1;
  std::vector<MeshMode> arms{MeshMode::Adapted, MeshMode::Standard};

  double level_h(std::size_t level) const;
  double kappa(MeshMode mode) const;
  std::size_t sample_cap() const { return max_samples == 0 ? 16 * samples : max_samples; }
  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// (eps_W, eps_l) = (h^(kappa / gamma), h^(kappa * rc)).
std::pair<double, double> equilibrate(double h, double kappa, double gamma, double rc);

/// Discretization of one coupled solve: mesh scale and approximation steps.
struct Discretization {
  MeshMode mesh = MeshMode::Adapted;
  double h = 0.0;
  double eps_w = 0.0;
  double eps_l = 0.0;
};

struct SampleResult {
  double sq_error = 0.0;
  std::size_t dofs = 0;
};

/// Per-discretization outcome of a batch; a non-empty error voids the sample.
struct SampleOutcome {
  SampleResult result;
  std::string error;
  double wall_ms = 0.0;

  bool ok() const noexcept { return error.empty(); }
};

/// Prepared experiment: the reference-fidelity lattices and samplers are
/// built once and shared read-only by all samples.
///
/// Sample i draws W1 and W2 from the streams derive_seed(seed, "W1"/"W2", i / 2)
/// (real half for even i, imaginary half for odd i) at the reference
/// resolution, and l1, l2 from derive_seed(seed, "l1"/"l2", i). Coarser
/// discretizations restrict these draws to nested power-of-two sublattices.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const noexcept { return config_; }
  const Discretization& reference() const noexcept { return reference_; }
  Discretization level(MeshMode mode, std::size_t level) const;

  /// Realized lattice steps after snapping to the nested hierarchy.
  double field_step(double eps_w) const;
  double path_step(double eps_l) const;

  struct Inputs {
    std::shared_ptr<const LatticeField2D> w1;
    std::shared_ptr<const LatticeField2D> w2;
    SubordinatorPath l1;
    SubordinatorPath l2;
  };

  /// Reference-fidelity draws for sample indices 2k and 2k + 1.
  std::pair<Inputs, Inputs> draw_pair(std::uint64_t k) const;
  Inputs draw(std::uint64_t index) const;

  /// Coefficient sample on the given discretization from reference draws.
  CoefficientSample coefficient(const Inputs& inputs, const Discretization& disc) const;
  std::shared_ptr<const TriMesh> mesh(const CoefficientSample& sample,
                                      const Discretization& disc) const;
  FemSolution solve(const Inputs& inputs, const Discretization& disc,
                    std::size_t* dofs = nullptr) const;

  /// Squared V-distance between the reference solve and the solve on `disc`,
  /// with the DOF count of the latter.
  SampleResult run_sample(const Discretization& disc, std::uint64_t index) const;
  /// Same numbers as run_sample for each entry, sharing one reference solve.
  /// Failures are reported per entry instead of thrown.
  std::vector<SampleOutcome> run_batch(std::span<const Discretization> discs,
                                       const Inputs& inputs) const;

 private:
  ExperimentConfig config_;
  Discretization reference_;
  GridSpec2D w1_grid_;
  GridSpec2D w2_grid_;
  std::size_t path_intervals_ = 0;
  std::shared_ptr<const CirculantEmbedding> w1_sampler_;
  std::shared_ptr<const CirculantEmbedding> w2_sampler_;
};

SampleResult run_coupled_sample(const Experiment& experiment, MeshMode mode,
                                std::size_t level, std::uint64_t index);

struct VoidedSample {
  std::uint64_t index = 0;
  std::string reason;
};

struct LevelResult {
  std::size_t level = 0;
  double h = 0.0;
  double eps_w = 0.0;
  double eps_l = 0.0;
  std::size_t samples = 0;
  double mean_sq_error = 0.0;
  /// Sample standard deviation of the squared errors.
  double std = 0.0;
  double mean_dofs = 0.0;
  double wall_ms = 0.0;
  /// Sample cap reached before std / sqrt(M) <= rel_std * mean.
  bool capped = false;
  std::vector<VoidedSample> voided;

  double std_error() const;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// OLS of 0.5 * log(mean_sq_error) against log(h) and against log(mean_dofs)
/// over levels with at least one valid sample. Throws with fewer than two.
std::pair<RateFit, RateFit> fit_rate(std::span<const LevelResult> levels);

struct ArmReport {
  MeshMode mesh = MeshMode::Adapted;
  double kappa = 1.0;
  std::vector<LevelResult> levels;
  std::optional<RateFit> rate_h;
  std::optional<RateFit> rate_dofs;
  std::vector<std::string> flags;
};

struct ConvergenceReport {
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string config_echo;
  Discretization reference;
  std::vector<ArmReport> arms;
  std::vector<std::string> flags;
};

struct RunOptions {
  std::size_t workers = 1;
  /// Called after each finished batch with a human-readable line.
  std::function<void(const std::string&)> progress;
};

/// Adaptive-M estimate for one level: batches of the configured size,
/// doubling until the standard error is within rel_std of the mean or the
/// cap is reached.
LevelResult estimate_level(const Experiment& experiment, MeshMode mode, std::size_t level,
                           const RunOptions& options = {});

ConvergenceReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace jdfem
