#include "jdfem/randomfield.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "jdfem/error.hpp"

namespace jdfem {

CovarianceModel CovarianceModel::matern32(double variance, double correlation_length) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw InvalidArgument("covariance variance must be finite and >= 0");
  }
  if (!(correlation_length > 0.0) || !std::isfinite(correlation_length)) {
    throw InvalidArgument("covariance correlation length must be finite and > 0");
  }
  return CovarianceModel{CovarianceFamily::Matern32, variance, correlation_length};
}

double cov_eval(const CovarianceModel& model, double distance) {
  if (!(distance >= 0.0)) throw InvalidArgument("cov_eval: distance must be >= 0");
  if (std::isinf(distance)) return 0.0;
  const double scaled = std::sqrt(3.0) * distance / model.correlation_length;
  return model.variance * (1.0 + scaled) * std::exp(-scaled);
}

// ---------------------------------------------------------------------------
// grid

namespace {

void validate_box(const std::array<double, 2>& origin, const std::array<double, 2>& extent) {
  for (int a = 0; a < 2; ++a) {
    if (!std::isfinite(origin[a])) throw InvalidArgument("grid origin must be finite");
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) {
      throw InvalidArgument("grid extent must be finite and > 0");
    }
  }
}

std::size_t ceil_ratio(double length, double step) {
  // Guard against L/step landing a hair above an integer from round-off.
  const double ratio = length / step;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-10 * std::max(1.0, nearest)) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(nearest));
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

}  // namespace

GridSpec2D GridSpec2D::from_step(std::array<double, 2> origin, std::array<double, 2> extent,
                                 double max_step) {
  validate_box(origin, extent);
  if (!(max_step > 0.0)) throw InvalidArgument("grid step must be > 0");
  return GridSpec2D{origin, extent,
                    {ceil_ratio(extent[0], max_step), ceil_ratio(extent[1], max_step)}};
}

GridSpec2D GridSpec2D::with_intervals(std::array<double, 2> origin,
                                      std::array<double, 2> extent,
                                      std::array<std::size_t, 2> intervals) {
  validate_box(origin, extent);
  if (intervals[0] == 0 || intervals[1] == 0) {
    throw InvalidArgument("grid needs at least one interval per axis");
  }
  return GridSpec2D{origin, extent, intervals};
}

bool GridSpec2D::contains(double x, double y) const {
  const std::array<double, 2> p{x, y};
  for (int a = 0; a < 2; ++a) {
    const double tol = 1e-12 * std::max(1.0, std::abs(extent[a]) + std::abs(origin[a]));
    if (!(p[a] >= origin[a] - tol && p[a] <= origin[a] + extent[a] + tol)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// lattice field

LatticeField2D::LatticeField2D(GridSpec2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) {
    throw InvalidArgument("lattice field: value count does not match grid nodes");
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("lattice field: non-finite value");
  }
}

double LatticeField2D::eval(double x, double y) const {
  if (!grid_.contains(x, y)) throw InvalidArgument("bilinear_eval: point outside grid box");
  const std::array<double, 2> p{x, y};
  std::array<std::size_t, 2> cell{};
  std::array<double, 2> t{};
  for (int a = 0; a < 2; ++a) {
    const double s = (p[a] - grid_.origin[a]) / grid_.step(a);
    const double clamped = std::clamp(s, 0.0, static_cast<double>(grid_.intervals[a]));
    auto c = static_cast<std::size_t>(std::floor(clamped));
    if (c >= grid_.intervals[a]) c = grid_.intervals[a] - 1;
    cell[a] = c;
    t[a] = clamped - static_cast<double>(c);
  }
  const std::size_t nx = grid_.nodes(0);
  const double* base = values_.data() + cell[1] * nx + cell[0];
  const double v00 = base[0];
  const double v10 = base[1];
  const double v01 = base[nx];
  const double v11 = base[nx + 1];
  return (1.0 - t[0]) * (1.0 - t[1]) * v00 + t[0] * (1.0 - t[1]) * v10 +
         (1.0 - t[0]) * t[1] * v01 + t[0] * t[1] * v11;
}

double bilinear_eval(const LatticeField2D& field, double x, double y) {
  return field.eval(x, y);
}

LatticeField2D restrict_field(const LatticeField2D& field, std::size_t factor) {
  const GridSpec2D& fine = field.grid();
  if (factor == 0 || fine.intervals[0] % factor != 0 || fine.intervals[1] % factor != 0) {
    throw InvalidArgument("restrict_field: factor must divide the interval counts");
  }
  const GridSpec2D coarse = GridSpec2D::with_intervals(
      fine.origin, fine.extent, {fine.intervals[0] / factor, fine.intervals[1] / factor});
  std::vector<double> values;
  values.reserve(coarse.node_count());
  for (std::size_t j = 0; j < coarse.nodes(1); ++j) {
    for (std::size_t i = 0; i < coarse.nodes(0); ++i) {
      values.push_back(field.at(i * factor, j * factor));
    }
  }
  return LatticeField2D(coarse, std::move(values));
}

// ---------------------------------------------------------------------------
// circulant embedding

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {
    if (data == nullptr) throw Error("fftw_alloc_complex failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* data;
  std::size_t size;
};

}  // namespace

struct CirculantEmbedding::Fft {
  Fft(std::size_t mx, std::size_t my) {
    FftwBuffer scratch(mx * my);
    std::lock_guard lock(fftw_planner_mutex());
    // Row-major with x fastest: the slow dimension is y.
    plan = fftw_plan_dft_2d(static_cast<int>(my), static_cast<int>(mx), scratch.data,
                            scratch.data, FFTW_FORWARD, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("fftw planning failed");
  }
  ~Fft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  void execute(FftwBuffer& buffer) const { fftw_execute_dft(plan, buffer.data, buffer.data); }

  fftw_plan plan = nullptr;
};

CirculantEmbedding::CirculantEmbedding(GridSpec2D grid, CovarianceModel model)
    : grid_(grid), model_(model) {
  const double sx = grid_.step(0);
  const double sy = grid_.step(1);
  for (int padding = 1; padding <= kMaxPadding; padding *= 2) {
    const std::size_t mx = 2 * grid_.intervals[0] * static_cast<std::size_t>(padding);
    const std::size_t my = 2 * grid_.intervals[1] * static_cast<std::size_t>(padding);
    auto fft = std::make_unique<Fft>(mx, my);
    FftwBuffer buffer(mx * my);
    for (std::size_t j = 0; j < my; ++j) {
      const double dy = static_cast<double>(std::min(j, my - j)) * sy;
      for (std::size_t i = 0; i < mx; ++i) {
        const double dx = static_cast<double>(std::min(i, mx - i)) * sx;
        buffer.data[j * mx + i][0] = cov_eval(model_, std::hypot(dx, dy));
        buffer.data[j * mx + i][1] = 0.0;
      }
    }
    fft->execute(buffer);

    double max_eig = 0.0;
    double min_eig = 0.0;
    for (std::size_t k = 0; k < mx * my; ++k) {
      max_eig = std::max(max_eig, buffer.data[k][0]);
      min_eig = std::min(min_eig, buffer.data[k][0]);
    }
    const double threshold = kClampTolerance * max_eig;
    most_negative_ = min_eig;
    if (min_eig < -threshold && padding < kMaxPadding) continue;
    if (min_eig < -threshold) {
      std::ostringstream msg;
      msg << "circulant embedding not positive semidefinite at padding " << padding
          << "; most negative eigenvalue magnitude " << -min_eig << " (max " << max_eig
          << ")";
      throw NumericalError(msg.str());
    }

    const double n = static_cast<double>(mx * my);
    sqrt_eigenvalues_.resize(mx * my);
    for (std::size_t k = 0; k < mx * my; ++k) {
      const double eig = buffer.data[k][0];
      sqrt_eigenvalues_[k] = (eig <= threshold) ? 0.0 : std::sqrt(eig / n);
    }
    torus_ = {mx, my};
    padding_ = padding;
    fft_ = std::move(fft);
    return;
  }
}

CirculantEmbedding::~CirculantEmbedding() = default;
CirculantEmbedding::CirculantEmbedding(CirculantEmbedding&&) noexcept = default;
CirculantEmbedding& CirculantEmbedding::operator=(CirculantEmbedding&&) noexcept = default;

std::pair<LatticeField2D, LatticeField2D> CirculantEmbedding::sample_pair(
    RandomStream& rng) const {
  const std::size_t mx = torus_[0];
  const std::size_t my = torus_[1];
  FftwBuffer buffer(mx * my);
  for (std::size_t k = 0; k < mx * my; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    buffer.data[k][0] = sqrt_eigenvalues_[k] * re;
    buffer.data[k][1] = sqrt_eigenvalues_[k] * im;
  }
  fft_->execute(buffer);

  const std::size_t nx = grid_.nodes(0);
  const std::size_t ny = grid_.nodes(1);
  std::vector<double> first(nx * ny);
  std::vector<double> second(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      first[j * nx + i] = buffer.data[j * mx + i][0];
      second[j * nx + i] = buffer.data[j * mx + i][1];
    }
  }
  return {LatticeField2D(grid_, std::move(first)), LatticeField2D(grid_, std::move(second))};
}

LatticeField2D sample_grf(const GridSpec2D& grid, const CovarianceModel& model,
                          RandomStream& rng) {
  return CirculantEmbedding(grid, model).sample(rng);
}

// ---------------------------------------------------------------------------
// serialization

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <class T>
T get_le(std::istream& in) {
  static_assert(sizeof(T) == 8);
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw IoError("field binary: truncated input");
  }
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void write_field_binary(const LatticeField2D& field, std::ostream& out) {
  const GridSpec2D& g = field.grid();
  put_le(out, g.origin[0]);
  put_le(out, g.origin[1]);
  put_le(out, g.extent[0]);
  put_le(out, g.extent[1]);
  put_le(out, g.step(0));
  put_le(out, g.step(1));
  put_le(out, static_cast<std::uint64_t>(g.nodes(0)));
  put_le(out, static_cast<std::uint64_t>(g.nodes(1)));
  for (const double v : field.values()) put_le(out, v);
  if (!out) throw IoError("field binary: write failed");
}

LatticeField2D read_field_binary(std::istream& in) {
  std::array<double, 2> origin{get_le<double>(in), get_le<double>(in)};
  std::array<double, 2> extent{get_le<double>(in), get_le<double>(in)};
  get_le<double>(in);  // steps are implied by extent and node counts
  get_le<double>(in);
  const auto nx = get_le<std::uint64_t>(in);
  const auto ny = get_le<std::uint64_t>(in);
  if (nx < 2 || ny < 2) throw IoError("field binary: need at least 2 nodes per axis");
  const GridSpec2D grid = GridSpec2D::with_intervals(origin, extent, {nx - 1, ny - 1});
  std::vector<double> values(nx * ny);
  for (double& v : values) v = get_le<double>(in);
  return LatticeField2D(grid, std::move(values));
}

void write_field_csv(const LatticeField2D& field, std::ostream& out) {
  const GridSpec2D& g = field.grid();
  const auto old_precision = out.precision(17);
  out << "x,y,value\n";
  for (std::size_t j = 0; j < g.nodes(1); ++j) {
    for (std::size_t i = 0; i < g.nodes(0); ++i) {
      out << g.coordinate(0, i) << ',' << g.coordinate(1, j) << ',' << field.at(i, j) << '\n';
    }
  }
  out.precision(old_precision);
  if (!out) throw IoError("field csv: write failed");
}

}  // namespace jdfem
