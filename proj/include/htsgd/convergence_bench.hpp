#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "htsgd/objective.hpp"
#include "htsgd/rng.hpp"

namespace htsgd {

/// c_gamma = (1/sigma) ((1 + gamma) / (gamma M) * gap)^(1 / (1 + gamma)).
/// Requires gamma in (0, 1], sigma > 0, M > 0, gap >= 0.
double optimal_c_gamma(double gamma, double sigma_gamma, double M, double gap);

/// a_gamma = sigma ((1 + gamma) / gamma * M)^(1 / (1 + gamma)) gap^(gamma / (1 + gamma)),
/// the constant of the guaranteed a_gamma / K^(gamma / (1 + gamma)) rate.
double a_gamma_bound(double gamma, double sigma_gamma, double M, double gap);

/// gap / (K eta) + M / (1 + gamma) eta^gamma sigma^(1 + gamma), the
/// constant-step bound on min_k E|grad f(w^k)|^2.
double constant_step_bound(std::size_t K, double eta, double gamma, double sigma_gamma, double M, double gap);

/// 0.8 (alpha - 1), inside [0, alpha - 1) for alpha in (1, 2].
double default_gamma(double alpha);

/// Additive per-coordinate gradient noise U ~ SaS(scale) with tail index
/// alpha; alpha = 2 is the Gaussian control N(0, 2 scale^2).
struct NoiseModel {
  double alpha = 2.0;
  double scale = 1.0;
};

/// (mean over n draws of |grad f(w) + U|^(1 + gamma))^(1 / (1 + gamma)):
/// a Monte Carlo proxy for sigma_gamma at the point w.
double estimate_sigma_gamma(const ObjectiveSpec& spec, std::span<const double> w, const NoiseModel& noise,
                            double gamma, std::size_t n, RngStream rng);

/// Largest |grad f(x) - grad f(y)| / |x - y|^gamma over `pairs` random point
/// pairs drawn uniformly from the ball of the given radius around center.
double estimate_holder_on_ball(const ObjectiveSpec& spec, std::span<const double> center, double radius,
                               double gamma, std::size_t pairs, RngStream rng);

enum class StepRule { kOptimal, kUserConstant, kFixedEta };

struct ConvergenceConfig {
  double gamma = 0.4;
  double sigma_gamma = 1.0;
  double M = 1.0;
  std::vector<std::size_t> Ks = {100, 1000, 10000};
  StepRule rule = StepRule::kOptimal;
  double c = 1.0;    ///< used by kUserConstant: eta = c / K^(1/(1+gamma))
  double eta = 0.1;  ///< used by kFixedEta
  std::size_t replicates = 100;
  /// Iterates with norm above this (or non-finite) count as diverged.
  double divergence_norm = 1e12;

  /// Throws ParameterError; also checks gamma < alpha - 1 for heavy-tailed noise.
  void validate(const NoiseModel& noise) const;
};

struct ConvergenceRow {
  std::size_t K = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double min_grad_sq_mean = 0.0;    ///< min over k < K of the replicate mean of |grad f(w^k)|^2
  double min_grad_sq_stderr = 0.0;  ///< standard error at the minimizing k
  double bound = 0.0;               ///< constant_step_bound at this (K, eta)
  double diverged_fraction = 0.0;

  static std::string csv_header();  // K,eta,gamma,alpha,min_grad_sq_mean,min_grad_sq_stderr,bound,diverged_fraction
  [[nodiscard]] std::string csv_row() const;
};

/// Step size for a sweep entry under the configured rule. `gap` is
/// f(w0) - f_star.
double step_size(const ConvergenceConfig& config, std::size_t K, double gap);

/// SGD w <- w - eta (grad f(w) + U) from w0 for every K in config.Ks with a
/// constant step per run. Replicate r of sweep entry i draws from
/// rng.replicate(i * replicates + r). Diverged replicates are excluded from
/// the statistics and counted in diverged_fraction.
std::vector<ConvergenceRow> run_convergence(const ObjectiveSpec& spec, std::span<const double> w0,
                                            const NoiseModel& noise, const ConvergenceConfig& config,
                                            RngStream rng, std::size_t threads = 0);

}  // namespace htsgd
