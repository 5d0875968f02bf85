#include "htsgd/stable_dist.hpp"

#include <string>

namespace htsgd {

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw ParameterError("tail index alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
}

void StableParams::validate() const {
  validate_alpha(alpha);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("scale sigma must be positive and finite, got " + std::to_string(sigma));
  }
}

StableSampler::StableSampler(double alpha)
    : alpha_(alpha),
      inv_alpha_(1.0 / alpha),
      one_minus_alpha_(1.0 - alpha),
      tail_exponent_((1.0 - alpha) / alpha),
      kind_(Kind::kGeneral) {
  validate_alpha(alpha);
  if (alpha == 2.0) {
    kind_ = Kind::kGaussian;
  } else if (alpha == 1.0) {
    kind_ = Kind::kCauchy;
  }
}

std::vector<double> sample_sas(const StableParams& params, std::size_t n, RngStream rng) {
  params.validate();
  if (n == 0) {
    throw ParameterError("sample count must be at least 1");
  }
  const StableSampler draw(params.alpha);
  PhiloxEngine engine(rng);
  std::vector<double> out(n);
  for (auto& x : out) {
    x = params.sigma * draw(engine);
  }
  return out;
}

double char_fn(const StableParams& params, double omega) {
  params.validate();
  return std::exp(-std::pow(std::abs(params.sigma * omega), params.alpha));
}

std::vector<double> levy_increment(double alpha, double dt, std::size_t dim, RngStream rng) {
  validate_alpha(alpha);
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ParameterError("time step dt must be positive, got " + std::to_string(dt));
  }
  if (dim == 0) {
    throw ParameterError("dimension must be at least 1");
  }
  return sample_sas({alpha, std::pow(dt, 1.0 / alpha)}, dim, rng);
}

bool moment_exists(const StableParams& params, double r) {
  if (r < 0.0) {
    throw ParameterError("moment order must be non-negative");
  }
  return params.alpha == 2.0 || r < params.alpha;
}

double stable_tail_constant(double alpha) {
  validate_alpha(alpha);
  return 2.0 * std::tgamma(alpha) * std::sin(std::numbers::pi * alpha / 2.0) / std::numbers::pi;
}

double levy_measure_scale(double alpha) {
  validate_alpha(alpha);
  if (alpha == 2.0) {
    return 1.0;
  }
  return std::pow(2.0 / (alpha * stable_tail_constant(alpha)), 1.0 / alpha);
}

}  // namespace htsgd
