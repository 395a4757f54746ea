#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "jdfem/random.hpp"

namespace jdfem {

/// Lévy subordinator law. Poisson(intensity) has unit jumps at rate
/// `intensity` per unit length; Gamma(shape, rate) has Gamma(shape * t, rate)
/// distributed increments over length t.
struct SubordinatorLaw {
  enum class Family { Poisson, Gamma };

  Family family = Family::Poisson;
  double intensity = 1.0;
  double shape = 0.0;
  double rate = 0.0;

  static SubordinatorLaw poisson(double intensity);
  static SubordinatorLaw gamma(double shape, double rate);

  /// Lévy triplet drift; descriptive only (both families have zero drift).
  double drift() const noexcept { return 0.0; }
  std::string describe() const;
};

enum class PathRepresentation { ExactJumps, GridIncrements };

const char* to_string(PathRepresentation representation);

/// Non-decreasing piecewise-constant path on [0, horizon].
///
/// ExactJumps paths store the jump locations as breakpoints (after a leading
/// breakpoint 0 with value 0) and evaluate càdlàg. GridIncrements paths store
/// the values at x_i = i * horizon / N, i = 0..N and use the piecewise constant
/// extension l(x) = l(x_i) for x in [x_i, x_{i+1}), with l(horizon) = l(x_{N-1}).
/// Evaluations are multiplied by `scale()`.
class SubordinatorPath {
 public:
  SubordinatorPath(double horizon, std::vector<double> breakpoints, std::vector<double> values,
                   PathRepresentation representation, double scale = 1.0);

  /// Unit jumps at the given locations (any order; coincident jumps stack).
  static SubordinatorPath exact(double horizon, std::vector<double> jump_locations);
  /// Cumulative values on the N + 1 equidistant grid points.
  static SubordinatorPath from_grid(double horizon, std::vector<double> grid_values);

  double horizon() const noexcept { return horizon_; }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> values() const noexcept { return values_; }
  PathRepresentation representation() const noexcept { return representation_; }
  double scale() const noexcept { return scale_; }
  /// Grid spacing for GridIncrements paths, 0 for exact paths.
  double grid_step() const noexcept;
  std::size_t grid_intervals() const noexcept { return breakpoints_.size() - 1; }

  double eval(double x) const;

  /// Locations where eval changes value, ascending.
  std::vector<double> jump_locations() const;

  SubordinatorPath scaled(double factor) const;
  /// Grid path on every `factor`-th grid point (values coincide there).
  SubordinatorPath coarsened(std::size_t factor) const;

 private:
  double horizon_;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  PathRepresentation representation_;
  double scale_;
};

double eval_path(const SubordinatorPath& path, double x);
SubordinatorPath scale_path(const SubordinatorPath& path, double factor);

/// Uniform Method: N ~ Poisson(intensity * horizon) jumps at sorted uniforms.
SubordinatorPath sample_poisson_exact(double intensity, double horizon, RandomStream& rng);

/// Cumulative independent increments on ceil(horizon / max_step) equal steps.
SubordinatorPath sample_path_grid(const SubordinatorLaw& law, double max_step, double horizon,
                                  RandomStream& rng);
SubordinatorPath sample_path_on_grid(const SubordinatorLaw& law, double horizon,
                                     std::size_t intervals, RandomStream& rng);

/// Cut function min(z, threshold).
double clip(double z, double threshold);

/// P(l(horizon) > threshold): the probability that the cut at `threshold`
/// alters the terminal value. Poisson uses the lattice cdf, Gamma the
/// regularized upper incomplete gamma function.
double tail_probability(const SubordinatorLaw& law, double threshold, double horizon);

/// E(Z^n) for Z ~ Gamma(shape, rate): shape (shape+1) ... (shape+n-1) / rate^n.
double gamma_raw_moment(double shape, double rate, unsigned n);

/// CSV with header `breakpoint,value,representation,scale`.
void write_path_csv(const SubordinatorPath& path, std::ostream& out);

}  // namespace jdfem
