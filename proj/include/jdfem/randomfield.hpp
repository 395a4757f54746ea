#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "jdfem/random.hpp"

namespace jdfem {

enum class CovarianceFamily { Matern32 };

/// Isotropic stationary covariance. Matérn with smoothness 3/2:
///   c(d) = variance * (1 + sqrt(3) d / r) * exp(-sqrt(3) d / r).
struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::Matern32;
  double variance = 1.0;
  double correlation_length = 1.0;

  /// Zero variance is accepted and yields identically-zero fields.
  static CovarianceModel matern32(double variance, double correlation_length);
};

double cov_eval(const CovarianceModel& model, double distance);

/// Equidistant rectangular grid. Node i along an axis sits at
/// origin + i * extent / intervals, so the last node is exactly origin + extent.
struct GridSpec2D {
  std::array<double, 2> origin{0.0, 0.0};
  std::array<double, 2> extent{1.0, 1.0};
  std::array<std::size_t, 2> intervals{1, 1};

  /// ceil(L / max_step) intervals per axis so the realized step never
  /// exceeds max_step.
  static GridSpec2D from_step(std::array<double, 2> origin, std::array<double, 2> extent,
                              double max_step);
  static GridSpec2D with_intervals(std::array<double, 2> origin,
                                   std::array<double, 2> extent,
                                   std::array<std::size_t, 2> intervals);

  double step(int axis) const { return extent[axis] / static_cast<double>(intervals[axis]); }
  std::size_t nodes(int axis) const { return intervals[axis] + 1; }
  std::size_t node_count() const { return nodes(0) * nodes(1); }
  double coordinate(int axis, std::size_t index) const {
    return origin[axis] + static_cast<double>(index) * extent[axis] /
                              static_cast<double>(intervals[axis]);
  }
  bool contains(double x, double y) const;
};

/// Node values on a GridSpec2D, row-major with x fastest: values[j * nx + i].
class LatticeField2D {
 public:
  LatticeField2D(GridSpec2D grid, std::vector<double> values);

  const GridSpec2D& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double at(std::size_t i, std::size_t j) const { return values_[j * grid_.nodes(0) + i]; }

  /// Bilinear interpolant of the four surrounding nodes.
  double eval(double x, double y) const;

 private:
  GridSpec2D grid_;
  std::vector<double> values_;
};

double bilinear_eval(const LatticeField2D& field, double x, double y);

/// Keeps every `factor`-th node in both axes. The factor must divide the
/// interval counts.
LatticeField2D restrict_field(const LatticeField2D& field, std::size_t factor);

/// Circulant embedding sampler for one (grid, covariance) pair. The spectrum
/// is computed once; sampling is const and safe to call concurrently.
class CirculantEmbedding {
 public:
  static constexpr int kMaxPadding = 8;
  static constexpr double kClampTolerance = 1e-12;

  /// Throws NumericalError when the embedding is not positive semidefinite
  /// even at kMaxPadding times the minimal torus.
  CirculantEmbedding(GridSpec2D grid, CovarianceModel model);
  ~CirculantEmbedding();
  CirculantEmbedding(CirculantEmbedding&&) noexcept;
  CirculantEmbedding& operator=(CirculantEmbedding&&) noexcept;

  const GridSpec2D& grid() const noexcept { return grid_; }
  const CovarianceModel& model() const noexcept { return model_; }
  int padding() const noexcept { return padding_; }
  std::array<std::size_t, 2> torus_size() const noexcept { return torus_; }
  /// Most negative eigenvalue found before clamping (0 when none).
  double most_negative_eigenvalue() const noexcept { return most_negative_; }

  /// One complex draw gives two independent fields (real and imaginary part).
  std::pair<LatticeField2D, LatticeField2D> sample_pair(RandomStream& rng) const;
  LatticeField2D sample(RandomStream& rng) const { return sample_pair(rng).first; }

 private:
  struct Fft;

  GridSpec2D grid_;
  CovarianceModel model_;
  std::array<std::size_t, 2> torus_{0, 0};
  int padding_ = 1;
  double most_negative_ = 0.0;
  std::vector<double> sqrt_eigenvalues_;
  std::unique_ptr<Fft> fft_;
};

LatticeField2D sample_grf(const GridSpec2D& grid, const CovarianceModel& model,
                          RandomStream& rng);

/// Flat binary container: origin, extent, step (IEEE doubles) and node counts
/// (uint64), all little-endian, followed by row-major little-endian doubles.
void write_field_binary(const LatticeField2D& field, std::ostream& out);
LatticeField2D read_field_binary(std::istream& in);
/// CSV with header `x,y,value`, one node per line.
void write_field_csv(const LatticeField2D& field, std::ostream& out);

}  // namespace jdfem
