#include "jdfem/subordinator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "jdfem/error.hpp"

namespace jdfem {

SubordinatorLaw SubordinatorLaw::poisson(double intensity) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw InvalidArgument("Poisson intensity must be finite and > 0");
  }
  SubordinatorLaw law;
  law.family = Family::Poisson;
  law.intensity = intensity;
  return law;
}

SubordinatorLaw SubordinatorLaw::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw InvalidArgument("Gamma shape and rate must be finite and > 0");
  }
  SubordinatorLaw law;
  law.family = Family::Gamma;
  law.shape = shape;
  law.rate = rate;
  return law;
}

std::string SubordinatorLaw::describe() const {
  std::ostringstream s;
  s.precision(17);
  if (family == Family::Poisson) {
    s << "Poisson(" << intensity << ")";
  } else {
    s << "Gamma(" << shape << ", " << rate << ")";
  }
  return s.str();
}

const char* to_string(PathRepresentation representation) {
  return representation == PathRepresentation::ExactJumps ? "exact" : "grid";
}

SubordinatorPath::SubordinatorPath(double horizon, std::vector<double> breakpoints,
                                   std::vector<double> values,
                                   PathRepresentation representation, double scale)
    : horizon_(horizon),
      breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      representation_(representation),
      scale_(scale) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw InvalidArgument("path horizon must be finite and > 0");
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw InvalidArgument("path scale must be finite and > 0");
  }
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw InvalidArgument("path needs matching, non-empty breakpoints and values");
  }
  if (breakpoints_.front() != 0.0 || values_.front() != 0.0) {
    throw InvalidArgument("path must start with l(0) = 0");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1])) {
      throw InvalidArgument("path breakpoints must be strictly ascending");
    }
    if (!(values_[k] >= values_[k - 1]) || !std::isfinite(values_[k])) {
      throw InvalidArgument("path values must be finite and non-decreasing");
    }
  }
  if (breakpoints_.back() > horizon_) {
    throw InvalidArgument("path breakpoints must lie in [0, horizon]");
  }
  if (representation_ == PathRepresentation::GridIncrements) {
    if (breakpoints_.size() < 2 || breakpoints_.back() != horizon_) {
      throw InvalidArgument("grid path needs grid points 0 .. horizon");
    }
  }
}

SubordinatorPath SubordinatorPath::exact(double horizon, std::vector<double> jump_locations) {
  std::sort(jump_locations.begin(), jump_locations.end());
  std::vector<double> breakpoints{0.0};
  std::vector<double> values{0.0};
  double count = 0.0;
  for (const double t : jump_locations) {
    if (!(t > 0.0) || !(t <= horizon)) {
      throw InvalidArgument("exact path: jump location outside (0, horizon]");
    }
    count += 1.0;
    if (t == breakpoints.back()) {
      values.back() = count;
    } else {
      breakpoints.push_back(t);
      values.push_back(count);
    }
  }
  return SubordinatorPath(horizon, std::move(breakpoints), std::move(values),
                          PathRepresentation::ExactJumps);
}

SubordinatorPath SubordinatorPath::from_grid(double horizon, std::vector<double> grid_values) {
  if (grid_values.size() < 2) throw InvalidArgument("grid path needs at least one interval");
  const std::size_t n = grid_values.size() - 1;
  std::vector<double> breakpoints(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    breakpoints[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
  }
  breakpoints[n] = horizon;
  return SubordinatorPath(horizon, std::move(breakpoints), std::move(grid_values),
                          PathRepresentation::GridIncrements);
}

double SubordinatorPath::grid_step() const noexcept {
  if (representation_ != PathRepresentation::GridIncrements) return 0.0;
  return horizon_ / static_cast<double>(grid_intervals());
}

double SubordinatorPath::eval(double x) const {
  const double tol = 1e-12 * horizon_;
  if (!(x >= -tol && x <= horizon_ + tol)) {
    throw InvalidArgument("eval_path: x outside [0, horizon]");
  }
  x = std::clamp(x, 0.0, horizon_);
  auto k = static_cast<std::size_t>(
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin() - 1);
  if (representation_ == PathRepresentation::GridIncrements) {
    k = std::min(k, grid_intervals() - 1);
  }
  return scale_ * values_[k];
}

std::vector<double> SubordinatorPath::jump_locations() const {
  std::vector<double> jumps;
  // values[N] of a grid path is never returned by eval, so x_N is no jump.
  const std::size_t last = representation_ == PathRepresentation::GridIncrements
                               ? grid_intervals()
                               : breakpoints_.size();
  for (std::size_t k = 1; k < last; ++k) {
    if (values_[k] != values_[k - 1]) jumps.push_back(breakpoints_[k]);
  }
  return jumps;
}

SubordinatorPath SubordinatorPath::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("scale_path: factor must be > 0");
  return SubordinatorPath(horizon_, breakpoints_, values_, representation_, scale_ * factor);
}

SubordinatorPath SubordinatorPath::coarsened(std::size_t factor) const {
  if (representation_ != PathRepresentation::GridIncrements) {
    throw InvalidArgument("coarsened: only grid paths can be coarsened");
  }
  if (factor == 0 || grid_intervals() % factor != 0) {
    throw InvalidArgument("coarsened: factor must divide the grid interval count");
  }
  std::vector<double> breakpoints;
  std::vector<double> values;
  for (std::size_t i = 0; i < breakpoints_.size(); i += factor) {
    breakpoints.push_back(breakpoints_[i]);
    values.push_back(values_[i]);
  }
  return SubordinatorPath(horizon_, std::move(breakpoints), std::move(values), representation_,
                          scale_);
}

double eval_path(const SubordinatorPath& path, double x) { return path.eval(x); }

SubordinatorPath scale_path(const SubordinatorPath& path, double factor) {
  return path.scaled(factor);
}

SubordinatorPath sample_poisson_exact(double intensity, double horizon, RandomStream& rng) {
  const auto law = SubordinatorLaw::poisson(intensity);
  if (!(horizon > 0.0)) throw InvalidArgument("sample_poisson_exact: horizon must be > 0");
  const std::uint64_t n = sample_poisson(rng, law.intensity * horizon);
  std::vector<double> jumps(n);
  for (double& t : jumps) t = horizon * rng.uniform_open();
  return SubordinatorPath::exact(horizon, std::move(jumps));
}

SubordinatorPath sample_path_on_grid(const SubordinatorLaw& law, double horizon,
                                     std::size_t intervals, RandomStream& rng) {
  if (!(horizon > 0.0)) throw InvalidArgument("sample_path_grid: horizon must be > 0");
  if (intervals == 0) throw InvalidArgument("sample_path_grid: need at least one interval");
  const double step = horizon / static_cast<double>(intervals);
  std::vector<double> values(intervals + 1, 0.0);
  for (std::size_t i = 1; i <= intervals; ++i) {
    const double increment =
        law.family == SubordinatorLaw::Family::Poisson
            ? static_cast<double>(sample_poisson(rng, law.intensity * step))
            : sample_gamma(rng, law.shape * step, law.rate);
    values[i] = values[i - 1] + increment;
  }
  return SubordinatorPath::from_grid(horizon, std::move(values));
}

SubordinatorPath sample_path_grid(const SubordinatorLaw& law, double max_step, double horizon,
                                  RandomStream& rng) {
  if (!(max_step > 0.0) || !(max_step <= horizon)) {
    throw InvalidArgument("sample_path_grid: need 0 < step <= horizon");
  }
  const double ratio = horizon / max_step;
  const double nearest = std::round(ratio);
  const auto intervals = static_cast<std::size_t>(
      std::abs(ratio - nearest) <= 1e-10 * nearest ? nearest : std::ceil(ratio));
  return sample_path_on_grid(law, horizon, intervals, rng);
}

double clip(double z, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("clip: threshold must be > 0");
  return std::min(z, threshold);
}

double tail_probability(const SubordinatorLaw& law, double threshold, double horizon) {
  if (!(threshold > 0.0) || !(horizon > 0.0)) {
    throw InvalidArgument("tail_probability: threshold and horizon must be > 0");
  }
  if (law.family == SubordinatorLaw::Family::Poisson) {
    // P(N > K) = 1 - P(N <= floor K) = P(floor K + 1, mean) (lower regularized).
    const double mean = law.intensity * horizon;
    return boost::math::gamma_p(std::floor(threshold) + 1.0, mean);
  }
  return boost::math::gamma_q(law.shape * horizon, law.rate * threshold);
}

double gamma_raw_moment(double shape, double rate, unsigned n) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw InvalidArgument("gamma_raw_moment: shape and rate must be > 0");
  }
  double moment = 1.0;
  for (unsigned k = 0; k < n; ++k) moment *= (shape + k) / rate;
  return moment;
}

void write_path_csv(const SubordinatorPath& path, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "breakpoint,value,representation,scale\n";
  const auto bp = path.breakpoints();
  const auto vals = path.values();
  for (std::size_t k = 0; k < bp.size(); ++k) {
    out << bp[k] << ',' << vals[k] << ',' << to_string(path.representation()) << ','
        << path.scale() << '\n';
  }
  out.precision(old_precision);
}

}  // namespace jdfem
