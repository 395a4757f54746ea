#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "jdfem/randomfield.hpp"
#include "jdfem/subordinator.hpp"

namespace jdfem {

/// Non-negative transform applied to a Gaussian field value.
///
/// Growth constants feed the coefficient cut-off formula: exp_amplitude and
/// exp_rate bound |Φ(x)| <= exp_amplitude * exp(exp_rate |x|); linear_bound
/// bounds |Φ(x)| <= linear_bound * (1 + |x|); lipschitz is the global
/// Lipschitz constant (infinity when there is none).
class Transform {
 public:
  enum class Kind { ScaledExp, ScaledAbs, Zero, Custom };

  struct Constants {
    double exp_amplitude = 0.0;
    double exp_rate = 0.0;
    double linear_bound = 0.0;
    double lipschitz = 0.0;
  };

  /// amplitude * exp(x)
  static Transform scaled_exp(double amplitude);
  /// slope * |x|
  static Transform scaled_abs(double slope);
  static Transform zero();
  /// Declared constants are trusted, not verified.
  static Transform custom(std::function<double(double)> fn, Constants constants);

  double operator()(double x) const;

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  const Constants& constants() const noexcept { return constants_; }

 private:
  Transform(Kind kind, double parameter, Constants constants,
            std::function<double(double)> fn = {});

  Kind kind_;
  double parameter_;
  Constants constants_;
  std::function<double(double)> fn_;
};

/// Deterministic base coefficient ā with declared bounds 0 < lower <= ā <= upper.
struct BaseCoefficient {
  std::function<double(double, double)> fn;
  double lower = 0.0;
  double upper = 0.0;

  static BaseCoefficient constant(double value);
};

/// One realization of the truncated, approximated jump-diffusion coefficient
///   a(x, y) = min(ā(x, y) + Φ1(W1(x, y)) + Φ2(W2(min(l1(x), K), min(l2(y), K))), A)
/// on the closed unit square. A = +infinity gives the untruncated coefficient.
class CoefficientSample {
 public:
  static constexpr double kNoCutoff = std::numeric_limits<double>::infinity();

  CoefficientSample(BaseCoefficient base, Transform phi1, Transform phi2,
                    std::shared_ptr<const LatticeField2D> w1,
                    std::shared_ptr<const LatticeField2D> w2, SubordinatorPath l1,
                    SubordinatorPath l2, double cutoff_k, double cutoff_a = kNoCutoff);

  double operator()(double x, double y) const;

  const BaseCoefficient& base() const noexcept { return base_; }
  const Transform& phi1() const noexcept { return phi1_; }
  const Transform& phi2() const noexcept { return phi2_; }
  const LatticeField2D& w1() const noexcept { return *w1_; }
  const LatticeField2D& w2() const noexcept { return *w2_; }
  const SubordinatorPath& l1() const noexcept { return l1_; }
  const SubordinatorPath& l2() const noexcept { return l2_; }
  double cutoff_k() const noexcept { return cutoff_k_; }
  double cutoff_a() const noexcept { return cutoff_a_; }

 private:
  BaseCoefficient base_;
  Transform phi1_;
  Transform phi2_;
  std::shared_ptr<const LatticeField2D> w1_;
  std::shared_ptr<const LatticeField2D> w2_;
  SubordinatorPath l1_;
  SubordinatorPath l2_;
  double cutoff_k_;
  double cutoff_a_;
};

double eval_coefficient(const CoefficientSample& sample, double x, double y);

/// Vertical (xs) and horizontal (ys) lines across which the subordinated
/// term can jump: the value-change locations of l1 and l2 inside (0, 1).
struct JumpLines {
  std::vector<double> xs;
  std::vector<double> ys;
};

JumpLines jump_lines(const CoefficientSample& sample);

struct SupStatistics {
  double mean_sup = 0.0;       ///< Monte Carlo mean of the lattice maximum
  double std_error = 0.0;      ///< standard error of mean_sup
  double sup_variance = 0.0;   ///< max pointwise variance over the lattice
};

/// Requires n_draws >= 100. Uses both fields of each complex draw.
SupStatistics estimate_sup_mean(const CirculantEmbedding& sampler, std::size_t n_draws,
                                RandomStream& rng);

struct CutoffInputs {
  double delta = 0.1;
  double s = 1.0;
  double mu1 = 0.0;
  double sigma_d2 = 0.0;
  double mu2 = 0.0;
  double sigma_k2 = 0.0;
  double abar_plus = 0.0;
  double phi_tilde = 0.0;  ///< |Φ1(x)| <= phi_tilde exp(psi_tilde |x|)
  double psi_tilde = 0.0;
  double phi2 = 0.0;       ///< |Φ2(x)| <= phi2 (1 + |x|)
  double moment_bound = 0.0;  ///< E(sup a_K^{2s}); must exceed delta^{2s}
};

/// Smallest A strictly above
///   max{3 ā+, 3 φ̃ exp(ψ̃ (sqrt(2 σ_D²) |ln(ε/2)| + μ1)), 3 φ2 (sqrt(2 σ_K² |ln(ε/2)|) + μ2 + 1)}
/// with ε = 1 - sqrt(1 - δ^{2s} / C), times a 1 + 1e-6 safety factor.
double choose_cutoff_A(const CutoffInputs& in);

/// Discrete L^t([0,1]^2) norm of a - b from midpoint samples on an n x n
/// probe lattice.
double coefficient_distance(const CoefficientSample& a, const CoefficientSample& b, double t,
                            std::size_t probe_n = 800);

/// Cell-centre raster of `fn` on the unit square: node (i, j) sits at
/// ((i + 1/2) / n, (j + 1/2) / n).
LatticeField2D sample_raster(const std::function<double(double, double)>& fn,
                             std::size_t n = 800);

}  // namespace jdfem
