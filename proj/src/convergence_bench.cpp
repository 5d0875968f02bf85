#include "htsgd/convergence_bench.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "htsgd/errors.hpp"
#include "htsgd/sde_sim.hpp"
#include "htsgd/stable_dist.hpp"

namespace htsgd {

namespace {

void validate_rate_inputs(double gamma, double sigma_gamma, double M, double gap) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ParameterError("gamma must lie in (0, 1], got " + std::to_string(gamma));
  }
  if (!(sigma_gamma > 0.0)) {
    throw ParameterError("sigma_gamma must be positive");
  }
  if (!(M > 0.0)) {
    throw ParameterError("Hoelder constant M must be positive");
  }
  if (!(gap >= 0.0)) {
    throw ParameterError("initial gap f(w0) - f_star must be non-negative");
  }
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    s += x * x;
  }
  return s;
}

}  // namespace

double optimal_c_gamma(double gamma, double sigma_gamma, double M, double gap) {
  validate_rate_inputs(gamma, sigma_gamma, M, gap);
  return std::pow((1.0 + gamma) / (gamma * M) * gap, 1.0 / (1.0 + gamma)) / sigma_gamma;
}

double a_gamma_bound(double gamma, double sigma_gamma, double M, double gap) {
  validate_rate_inputs(gamma, sigma_gamma, M, gap);
  return sigma_gamma * std::pow((1.0 + gamma) / gamma * M, 1.0 / (1.0 + gamma)) *
         std::pow(gap, gamma / (1.0 + gamma));
}

double constant_step_bound(std::size_t K, double eta, double gamma, double sigma_gamma, double M, double gap) {
  validate_rate_inputs(gamma, sigma_gamma, M, gap);
  if (K == 0 || !(eta > 0.0)) {
    throw ParameterError("constant-step bound needs K >= 1 and eta > 0");
  }
  return gap / (static_cast<double>(K) * eta) +
         M / (1.0 + gamma) * std::pow(eta, gamma) * std::pow(sigma_gamma, 1.0 + gamma);
}

double default_gamma(double alpha) {
  validate_alpha(alpha);
  if (alpha <= 1.0) {
    throw ParameterError("no positive gamma exists for alpha <= 1");
  }
  return 0.8 * (alpha - 1.0);
}

double estimate_sigma_gamma(const ObjectiveSpec& spec, std::span<const double> w, const NoiseModel& noise,
                            double gamma, std::size_t n, RngStream rng) {
  if (w.size() != spec.dim()) {
    throw ShapeError("point dimension does not match the objective");
  }
  if (n == 0) {
    throw ParameterError("sigma_gamma estimate needs at least one draw");
  }
  const StableSampler draw(noise.alpha);
  PhiloxEngine engine(rng);
  const auto grad = spec.gradient(w);
  std::vector<double> noisy(grad.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < grad.size(); ++j) {
      noisy[j] = grad[j] + noise.scale * draw(engine);
    }
    acc += std::pow(std::sqrt(squared_norm(noisy)), 1.0 + gamma);
  }
  return std::pow(acc / static_cast<double>(n), 1.0 / (1.0 + gamma));
}

double estimate_holder_on_ball(const ObjectiveSpec& spec, std::span<const double> center, double radius,
                               double gamma, std::size_t pairs, RngStream rng) {
  if (center.size() != spec.dim()) {
    throw ShapeError("ball center dimension does not match the objective");
  }
  if (!(radius > 0.0) || pairs == 0) {
    throw ParameterError("Hoelder estimate needs a positive radius and at least one pair");
  }
  PhiloxEngine engine(rng);
  const std::size_t d = spec.dim();
  // Uniform in the ball: Gaussian direction, radius scaled by U^(1/d).
  auto point = [&] {
    std::vector<double> p(d);
    for (auto& x : p) {
      x = standard_normal(engine);
    }
    const double scale = radius * std::pow(uniform_open(engine), 1.0 / static_cast<double>(d)) /
                         std::sqrt(squared_norm(p));
    for (std::size_t j = 0; j < d; ++j) {
      p[j] = center[j] + scale * p[j];
    }
    return p;
  };
  std::vector<ProbePair> probes;
  probes.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    auto x = point();
    probes.emplace_back(std::move(x), point());
  }
  return holder_constant(spec, gamma, probes);
}

void ConvergenceConfig::validate(const NoiseModel& noise) const {
  validate_alpha(noise.alpha);
  if (!(noise.scale >= 0.0)) {
    throw ParameterError("noise scale must be non-negative");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ParameterError("gamma must lie in (0, 1]");
  }
  if (noise.alpha < 2.0 && noise.scale > 0.0 && !(gamma < noise.alpha - 1.0)) {
    throw ParameterError("gamma must be below alpha - 1 for heavy-tailed noise");
  }
  if (!(sigma_gamma > 0.0) || !(M > 0.0)) {
    throw ParameterError("sigma_gamma and M must be positive");
  }
  if (Ks.empty()) {
    throw ParameterError("the K sweep is empty");
  }
  for (std::size_t K : Ks) {
    if (K == 0) {
      throw ParameterError("every K must be at least 1");
    }
  }
  if (replicates == 0) {
    throw ParameterError("at least one replicate is required");
  }
  if (rule == StepRule::kUserConstant && !(c > 0.0)) {
    throw ParameterError("step constant c must be positive");
  }
  if (rule == StepRule::kFixedEta && !(eta > 0.0)) {
    throw ParameterError("fixed eta must be positive");
  }
}

std::string ConvergenceRow::csv_header() {
  return "K,eta,gamma,alpha,min_grad_sq_mean,min_grad_sq_stderr,bound,diverged_fraction";
}

std::string ConvergenceRow::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << K << ',' << eta << ',' << gamma << ',' << alpha << ',' << min_grad_sq_mean << ',' << min_grad_sq_stderr
     << ',' << bound << ',' << diverged_fraction;
  return os.str();
}

double step_size(const ConvergenceConfig& config, std::size_t K, double gap) {
  const double root = std::pow(static_cast<double>(K), 1.0 / (1.0 + config.gamma));
  switch (config.rule) {
    case StepRule::kOptimal:
      return optimal_c_gamma(config.gamma, config.sigma_gamma, config.M, gap) / root;
    case StepRule::kUserConstant:
      return config.c / root;
    case StepRule::kFixedEta:
      return config.eta;
  }
  return config.eta;
}

std::vector<ConvergenceRow> run_convergence(const ObjectiveSpec& spec, std::span<const double> w0,
                                            const NoiseModel& noise, const ConvergenceConfig& config,
                                            RngStream rng, std::size_t threads) {
  config.validate(noise);
  if (w0.size() != spec.dim()) {
    throw ShapeError("w0 dimension does not match the objective");
  }
  if (!spec.f_star()) {
    throw UnsupportedObjectiveError("convergence bounds need an objective with a known f_star");
  }
  const double gap = spec.value(w0) - *spec.f_star();
  const std::size_t d = spec.dim();
  const StableSampler draw(noise.alpha);

  std::vector<ConvergenceRow> rows;
  for (std::size_t s = 0; s < config.Ks.size(); ++s) {
    const std::size_t K = config.Ks[s];
    const double eta = step_size(config, K, gap);

    // Each replicate returns |grad f(w^k)|^2 for k = 0 .. K-1, or nothing on divergence.
    auto traces = run_replicates<std::optional<std::vector<double>>>(config.replicates, threads, [&](std::size_t r) {
      PhiloxEngine engine(rng.replicate(static_cast<std::uint32_t>(s * config.replicates + r)));
      std::vector<double> w(w0.begin(), w0.end());
      std::vector<double> g(d);
      std::vector<double> trace(K);
      for (std::size_t k = 0; k < K; ++k) {
        spec.gradient(w, g);
        trace[k] = squared_norm(g);
        for (std::size_t j = 0; j < d; ++j) {
          w[j] -= eta * (g[j] + noise.scale * draw(engine));
        }
        const double norm_sq = squared_norm(w);
        if (!std::isfinite(norm_sq) || norm_sq > config.divergence_norm * config.divergence_norm) {
          return std::optional<std::vector<double>>();
        }
      }
      return std::optional<std::vector<double>>(std::move(trace));
    });

    std::vector<double> sum(K, 0.0);
    std::vector<double> sum_sq(K, 0.0);
    std::size_t kept = 0;
    for (const auto& t : traces) {
      if (!t) {
        continue;
      }
      ++kept;
      for (std::size_t k = 0; k < K; ++k) {
        sum[k] += (*t)[k];
        sum_sq[k] += (*t)[k] * (*t)[k];
      }
    }

    ConvergenceRow row;
    row.K = K;
    row.eta = eta;
    row.gamma = config.gamma;
    row.alpha = noise.alpha;
    row.bound = constant_step_bound(K, eta, config.gamma, config.sigma_gamma, config.M, gap);
    row.diverged_fraction = static_cast<double>(config.replicates - kept) / static_cast<double>(config.replicates);
    if (kept == 0) {
      row.min_grad_sq_mean = std::numeric_limits<double>::quiet_NaN();
      row.min_grad_sq_stderr = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
      continue;
    }
    const auto n = static_cast<double>(kept);
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (sum[k] < sum[best]) {
        best = k;
      }
    }
    const double m = sum[best] / n;
    const double var = kept > 1 ? std::max(0.0, (sum_sq[best] - n * m * m) / (n - 1.0)) : 0.0;
    row.min_grad_sq_mean = m;
    row.min_grad_sq_stderr = std::sqrt(var / n);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace htsgd
