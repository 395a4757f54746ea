#include "jdfem/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jdfem/error.hpp"

namespace jdfem {

// ---------------------------------------------------------------------------
// transforms

Transform::Transform(Kind kind, double parameter, Constants constants,
                     std::function<double(double)> fn)
    : kind_(kind), parameter_(parameter), constants_(constants), fn_(std::move(fn)) {}

Transform Transform::scaled_exp(double amplitude) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw InvalidArgument("scaled_exp amplitude must be finite and >= 0");
  }
  // |a e^x| <= a e^{|x|}; derivative bound is the same.
  return Transform(Kind::ScaledExp, amplitude,
                   Constants{amplitude, 1.0, std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()});
}

Transform Transform::scaled_abs(double slope) {
  if (!(slope >= 0.0) || !std::isfinite(slope)) {
    throw InvalidArgument("scaled_abs slope must be finite and >= 0");
  }
  return Transform(Kind::ScaledAbs, slope, Constants{slope, 1.0, slope, slope});
}

Transform Transform::zero() { return Transform(Kind::Zero, 0.0, Constants{}); }

Transform Transform::custom(std::function<double(double)> fn, Constants constants) {
  if (!fn) throw InvalidArgument("custom transform needs a function");
  return Transform(Kind::Custom, 0.0, constants, std::move(fn));
}

double Transform::operator()(double x) const {
  switch (kind_) {
    case Kind::ScaledExp:
      return parameter_ * std::exp(x);
    case Kind::ScaledAbs:
      return parameter_ * std::abs(x);
    case Kind::Zero:
      return 0.0;
    case Kind::Custom: {
      const double v = fn_(x);
      if (!(v >= 0.0)) throw NumericalError("custom transform returned a negative or NaN value");
      return v;
    }
  }
  return 0.0;
}

BaseCoefficient BaseCoefficient::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument("base coefficient must be finite and > 0");
  }
  return BaseCoefficient{[value](double, double) { return value; }, value, value};
}

// ---------------------------------------------------------------------------
// coefficient sample

CoefficientSample::CoefficientSample(BaseCoefficient base, Transform phi1, Transform phi2,
                                     std::shared_ptr<const LatticeField2D> w1,
                                     std::shared_ptr<const LatticeField2D> w2,
                                     SubordinatorPath l1, SubordinatorPath l2, double cutoff_k,
                                     double cutoff_a)
    : base_(std::move(base)),
      phi1_(std::move(phi1)),
      phi2_(std::move(phi2)),
      w1_(std::move(w1)),
      w2_(std::move(w2)),
      l1_(std::move(l1)),
      l2_(std::move(l2)),
      cutoff_k_(cutoff_k),
      cutoff_a_(cutoff_a) {
  if (!base_.fn || !(base_.lower > 0.0) || !(base_.upper >= base_.lower)) {
    throw InvalidArgument("base coefficient needs bounds 0 < lower <= upper");
  }
  if (!w1_ || !w2_) throw InvalidArgument("coefficient sample needs both Gaussian fields");
  if (!(cutoff_k_ > 0.0) || !std::isfinite(cutoff_k_)) {
    throw InvalidArgument("subordinator cut-off K must be finite and > 0");
  }
  if (!(cutoff_a_ >= base_.lower)) {
    throw InvalidArgument("coefficient cut-off A must be >= the base lower bound");
  }
  const GridSpec2D& g1 = w1_->grid();
  if (!g1.contains(0.0, 0.0) || !g1.contains(1.0, 1.0)) {
    throw InvalidArgument("W1 lattice must cover the unit square");
  }
  const GridSpec2D& g2 = w2_->grid();
  if (!g2.contains(0.0, 0.0) || !g2.contains(cutoff_k_, cutoff_k_)) {
    throw InvalidArgument("W2 lattice must cover [0, K]^2");
  }
  if (l1_.horizon() < 1.0 || l2_.horizon() < 1.0) {
    throw InvalidArgument("subordinator paths must cover [0, 1]");
  }
}

double CoefficientSample::operator()(double x, double y) const {
  const double s1 = std::min(l1_.eval(x), cutoff_k_);
  const double s2 = std::min(l2_.eval(y), cutoff_k_);
  const double value = base_.fn(x, y) + phi1_(w1_->eval(x, y)) + phi2_(w2_->eval(s1, s2));
  return std::min(value, cutoff_a_);
}

double eval_coefficient(const CoefficientSample& sample, double x, double y) {
  return sample(x, y);
}

JumpLines jump_lines(const CoefficientSample& sample) {
  const auto inside = [](std::vector<double> v) {
    std::erase_if(v, [](double t) { return !(t > 0.0 && t < 1.0); });
    return v;
  };
  return JumpLines{inside(sample.l1().jump_locations()), inside(sample.l2().jump_locations())};
}

// ---------------------------------------------------------------------------
// cut-off selection

SupStatistics estimate_sup_mean(const CirculantEmbedding& sampler, std::size_t n_draws,
                                RandomStream& rng) {
  if (n_draws < 100) throw InvalidArgument("estimate_sup_mean: need at least 100 draws");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t taken = 0;
  const auto accumulate = [&](const LatticeField2D& f) {
    const auto v = f.values();
    const double m = *std::max_element(v.begin(), v.end());
    sum += m;
    sum_sq += m * m;
    ++taken;
  };
  while (taken < n_draws) {
    auto [first, second] = sampler.sample_pair(rng);
    accumulate(first);
    if (taken < n_draws) accumulate(second);
  }
  const double n = static_cast<double>(taken);
  SupStatistics stats;
  stats.mean_sup = sum / n;
  const double var = std::max(0.0, (sum_sq - n * stats.mean_sup * stats.mean_sup) / (n - 1.0));
  stats.std_error = std::sqrt(var / n);
  // Stationary: every node has variance c(0).
  stats.sup_variance = cov_eval(sampler.model(), 0.0);
  return stats;
}

double choose_cutoff_A(const CutoffInputs& in) {
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    throw InvalidArgument("choose_cutoff_A: delta must lie in (0, 1)");
  }
  if (!(in.s >= 1.0)) throw InvalidArgument("choose_cutoff_A: s must be >= 1");
  for (const double v : {in.mu1, in.sigma_d2, in.mu2, in.sigma_k2, in.abar_plus, in.phi_tilde,
                         in.psi_tilde, in.phi2, in.moment_bound}) {
    if (!std::isfinite(v)) throw InvalidArgument("choose_cutoff_A: non-finite statistic");
  }
  const double ratio = std::pow(in.delta, 2.0 * in.s) / in.moment_bound;
  if (!(in.moment_bound > 0.0) || !(ratio < 1.0)) {
    std::ostringstream msg;
    msg << "choose_cutoff_A: moment bound " << in.moment_bound
        << " must exceed delta^(2s) = " << std::pow(in.delta, 2.0 * in.s)
        << " so that epsilon lies in (0, 1)";
    throw InvalidArgument(msg.str());
  }
  const double eps = 1.0 - std::sqrt(1.0 - ratio);
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("choose_cutoff_A: epsilon outside (0, 1)");
  const double log_term = std::abs(std::log(eps / 2.0));
  const double branch_base = 3.0 * in.abar_plus;
  const double branch_w1 =
      3.0 * in.phi_tilde *
      std::exp(in.psi_tilde * (std::sqrt(2.0 * in.sigma_d2) * log_term + in.mu1));
  const double branch_w2 =
      3.0 * in.phi2 * (std::sqrt(2.0 * in.sigma_k2 * log_term) + in.mu2 + 1.0);
  return std::max({branch_base, branch_w1, branch_w2}) * (1.0 + 1e-6);
}

// ---------------------------------------------------------------------------
// norms and rasters

double coefficient_distance(const CoefficientSample& a, const CoefficientSample& b, double t,
                            std::size_t probe_n) {
  if (!(t >= 1.0) || !std::isfinite(t)) {
    throw InvalidArgument("coefficient_distance: norm order must be finite and >= 1");
  }
  if (probe_n == 0) throw InvalidArgument("coefficient_distance: empty probe grid");
  const double h = 1.0 / static_cast<double>(probe_n);
  double sum = 0.0;
  for (std::size_t j = 0; j < probe_n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * h;
    for (std::size_t i = 0; i < probe_n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * h;
      sum += std::pow(std::abs(a(x, y) - b(x, y)), t);
    }
  }
  return std::pow(sum * h * h, 1.0 / t);
}

LatticeField2D sample_raster(const std::function<double(double, double)>& fn, std::size_t n) {
  if (n < 2) throw InvalidArgument("sample_raster: need n >= 2");
  const double h = 1.0 / static_cast<double>(n);
  const GridSpec2D grid = GridSpec2D::with_intervals({0.5 * h, 0.5 * h},
                                                     {1.0 - h, 1.0 - h}, {n - 1, n - 1});
  std::vector<double> values(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) * h;
    for (std::size_t i = 0; i < n; ++i) {
      values[j * n + i] = fn((static_cast<double>(i) + 0.5) * h, y);
    }
  }
  return LatticeField2D(grid, std::move(values));
}

}  // namespace jdfem
