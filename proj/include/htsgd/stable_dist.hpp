#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "htsgd/errors.hpp"
#include "htsgd/rng.hpp"

namespace htsgd {

/// Symmetric alpha-stable law SaS(sigma) with characteristic function
/// exp(-|sigma * omega|^alpha). alpha = 2 is N(0, 2 sigma^2), alpha = 1 is
/// Cauchy with scale sigma.
struct StableParams {
  double alpha = 2.0;
  double sigma = 1.0;

  /// Throws ParameterError unless 0 < alpha <= 2 and sigma > 0.
  void validate() const;
};

void validate_alpha(double alpha);

/// Draws unit-scale SaS variates for a fixed alpha with the
/// Chambers-Mallows-Stuck transform (uniform angle, exponential radius).
/// Constants depending only on alpha are computed once.
class StableSampler {
 public:
  explicit StableSampler(double alpha);

  [[nodiscard]] double alpha() const { return alpha_; }

  template <class Engine>
  double operator()(Engine& engine) const {
    if (kind_ == Kind::kGaussian) {
      return std::numbers::sqrt2 * standard_normal(engine);
    }
    const double angle = std::numbers::pi * (uniform_open(engine) - 0.5);
    if (kind_ == Kind::kCauchy) {
      return std::tan(angle);
    }
    const double weight = standard_exponential(engine);
    const double cos_angle = std::cos(angle);
    const double head = std::sin(alpha_ * angle) / std::pow(cos_angle, inv_alpha_);
    return head * std::pow(std::cos(one_minus_alpha_ * angle) / weight, tail_exponent_);
  }

 private:
  enum class Kind { kGeneral, kCauchy, kGaussian };

  double alpha_;
  double inv_alpha_;
  double one_minus_alpha_;
  double tail_exponent_;
  Kind kind_;
};

/// n i.i.d. draws from SaS(sigma).
std::vector<double> sample_sas(const StableParams& params, std::size_t n, RngStream rng);

/// exp(-|sigma * omega|^alpha).
double char_fn(const StableParams& params, double omega);

/// Increment of a dim-dimensional Levy motion with independent components
/// over a time step dt: each component is SaS(dt^(1/alpha)).
std::vector<double> levy_increment(double alpha, double dt, std::size_t dim, RngStream rng);

/// True iff E|X|^r is finite: r < alpha, or any r when alpha = 2.
bool moment_exists(const StableParams& params, double r);

/// Constant C_alpha with P(|X| > x) ~ C_alpha x^-alpha for X ~ SaS(1).
double stable_tail_constant(double alpha);

/// Factor that rescales SaS(1) draws so the jump measure of the driving
/// Levy motion becomes |y|^(-1-alpha) dy, the normalization under which the
/// small-noise exit and transition rates are usually stated. Equals 1 at
/// alpha = 2 (no jumps).
double levy_measure_scale(double alpha);

}  // namespace htsgd
