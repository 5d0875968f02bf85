#include "htsgd/sde_sim.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

bool all_finite(std::span<const double> w) {
  for (double x : w) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void require_dim(const SdeConfig& config, const ObjectiveSpec& spec) {
  config.validate();
  if (spec.dim() != config.dim) {
    throw ShapeError("objective dimension " + std::to_string(spec.dim()) + " does not match config dim " +
                     std::to_string(config.dim));
  }
}

}  // namespace

std::string to_string(JumpScale scale) {
  return scale == JumpScale::kLevyMeasure ? "levy_measure" : "characteristic";
}

JumpScale jump_scale_from_string(const std::string& text) {
  if (text == "levy_measure") {
    return JumpScale::kLevyMeasure;
  }
  if (text == "characteristic") {
    return JumpScale::kCharacteristic;
  }
  throw ParameterError("unknown jump scale '" + text + "' (expected characteristic or levy_measure)");
}

void SdeConfig::validate() const {
  validate_alpha(alpha);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ParameterError("step size eta must be positive");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError("noise level epsilon must be non-negative");
  }
  if (!(sigma_brownian >= 0.0) || !std::isfinite(sigma_brownian)) {
    throw ParameterError("Brownian amplitude must be non-negative");
  }
  if (dim == 0) {
    throw ParameterError("dimension must be at least 1");
  }
  if (w0.size() != dim) {
    throw ShapeError("w0 has " + std::to_string(w0.size()) + " entries, expected " + std::to_string(dim));
  }
  if (!all_finite(w0)) {
    throw ParameterError("w0 must be finite");
  }
}

double SdeConfig::brownian_coefficient() const { return epsilon * sigma_brownian * std::sqrt(eta); }

double SdeConfig::levy_coefficient() const {
  const double scale = jump_scale == JumpScale::kLevyMeasure ? levy_measure_scale(alpha) : 1.0;
  return epsilon * std::pow(eta, 1.0 / alpha) * scale;
}

bool euler_step(const ObjectiveSpec& spec, const SdeConfig& config, std::span<const double> w,
                std::span<const double> z, std::span<const double> s, std::span<double> next) {
  const std::size_t d = w.size();
  if (z.size() != d || s.size() != d || next.size() != d || spec.dim() != d) {
    throw ShapeError("euler_step: state, draws and output must share the objective dimension");
  }
  std::vector<double> grad(d);
  spec.gradient(w, grad);
  const double bc = config.brownian_coefficient();
  const double lc = config.levy_coefficient();
  for (std::size_t i = 0; i < d; ++i) {
    next[i] = w[i] - config.eta * grad[i] + bc * z[i] + lc * s[i];
  }
  return all_finite(next);
}

EulerStepper::EulerStepper(const ObjectiveSpec& spec, const SdeConfig& config, RngStream rng)
    : spec_(spec),
      config_(config),
      engine_(rng),
      sampler_(config.alpha),
      brownian_(config.brownian_coefficient()),
      levy_(config.levy_coefficient()),
      grad_(config.dim) {
  require_dim(config_, spec_);
}

bool EulerStepper::step(std::span<double> w) {
  spec_.gradient(w, grad_);
  const std::size_t d = w.size();
  for (std::size_t i = 0; i < d; ++i) {
    w[i] -= config_.eta * grad_[i];
  }
  if (brownian_ != 0.0) {
    for (std::size_t i = 0; i < d; ++i) {
      w[i] += brownian_ * standard_normal(engine_);
    }
  }
  if (levy_ != 0.0) {
    for (std::size_t i = 0; i < d; ++i) {
      w[i] += levy_ * sampler_(engine_);
    }
  }
  return all_finite(w);
}

void Trajectory::write_csv(std::ostream& os) const {
  os << "step,time";
  for (std::size_t j = 0; j < dim; ++j) {
    os << ",coord_" << j;
  }
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t k = 0; k < size(); ++k) {
    os << k << ',' << static_cast<double>(k) * eta;
    for (double x : point(k)) {
      os << ',' << x;
    }
    os << '\n';
  }
  os.precision(old_precision);
}

Trajectory simulate(const SdeConfig& config, const ObjectiveSpec& spec, RngStream rng) {
  EulerStepper stepper(spec, config, rng);
  Trajectory out;
  out.dim = config.dim;
  out.eta = config.eta;
  out.points.reserve((config.max_steps + 1) * config.dim);
  std::vector<double> w = config.w0;
  out.points.insert(out.points.end(), w.begin(), w.end());
  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    if (!stepper.step(w)) {
      out.diverged_at = k;
      break;
    }
    out.points.insert(out.points.end(), w.begin(), w.end());
  }
  return out;
}

std::string ExitTimeRecord::csv_header() { return "replicate,exited,diverged,exit_step,exit_time,radius_a,margin_xi"; }

std::string ExitTimeRecord::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << replicate << ',' << (exited ? 1 : 0) << ',' << (diverged ? 1 : 0) << ',' << exit_step << ',' << exit_time
     << ',' << radius_a << ',' << margin_xi;
  return os.str();
}

ExitTimeRecord first_exit(const SdeConfig& config, const ObjectiveSpec& spec, std::span<const double> center,
                          double a, double xi, RngStream rng, std::size_t replicate) {
  require_dim(config, spec);
  if (center.size() != config.dim) {
    throw ShapeError("exit center has the wrong dimension");
  }
  if (!(a > 0.0)) {
    throw ParameterError("exit radius a must be positive");
  }
  if (!(xi >= 0.0)) {
    throw ParameterError("exit margin xi must be non-negative");
  }
  const double radius = a + xi;
  if (distance(config.w0, center) > radius) {
    throw PreconditionError("w0 lies outside the exit ball");
  }

  ExitTimeRecord rec;
  rec.replicate = replicate;
  rec.radius_a = a;
  rec.margin_xi = xi;
  rec.center.assign(center.begin(), center.end());

  EulerStepper stepper(spec, config, rng);
  std::vector<double> w = config.w0;
  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    const bool finite = stepper.step(w);
    if (!finite || distance(w, center) > radius) {
      rec.exited = true;
      rec.diverged = !finite;
      rec.exit_step = k;
      rec.exit_time = static_cast<double>(k) * config.eta;
      return rec;
    }
  }
  rec.exit_step = config.max_steps;
  rec.exit_time = static_cast<double>(config.max_steps) * config.eta;
  return rec;
}

std::vector<ExitTimeRecord> first_exit_replicates(const SdeConfig& config, const ObjectiveSpec& spec,
                                                  std::span<const double> center, double a, double xi,
                                                  RngStream rng, std::size_t count, std::size_t threads) {
  const std::vector<double> c(center.begin(), center.end());
  return run_replicates<ExitTimeRecord>(count, threads, [&](std::size_t i) {
    return first_exit(config, spec, c, a, xi, rng.replicate(static_cast<std::uint32_t>(i)), i);
  });
}

double ExitSummary::diverged_fraction() const {
  return replicates == 0 ? 0.0 : static_cast<double>(diverged) / static_cast<double>(replicates);
}

ExitSummary summarize_exits(std::span<const ExitTimeRecord> records) {
  ExitSummary s;
  s.replicates = records.size();
  double total = 0.0;
  for (const auto& r : records) {
    if (r.exited) {
      ++s.exited;
      total += r.exit_time;
    }
    if (r.diverged) {
      ++s.diverged;
    }
  }
  s.mean_exit_time = s.exited == 0 ? 0.0 : total / static_cast<double>(s.exited);
  return s;
}

std::string TransitionRecord::csv_header() {
  return "replicate,start_basin,end_basin,transition_step,transition_time,sojourn_time";
}

std::string TransitionRecord::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << replicate << ',' << start_basin << ',' << end_basin << ',' << transition_step << ',' << transition_time
     << ',' << sojourn_time;
  return os.str();
}

std::vector<TransitionRecord> transition_trace(const SdeConfig& config, const ObjectiveSpec& spec, double delta,
                                               RngStream rng, std::size_t replicate) {
  if (!spec.has_geometry()) {
    throw UnsupportedObjectiveError("transition tracing needs an objective with basin geometry");
  }
  require_dim(config, spec);
  const auto& minima = spec.minima();
  const auto& saddles = spec.saddles();
  if (!(delta > 0.0)) {
    throw ParameterError("neighbourhood radius delta must be positive");
  }
  for (std::size_t i = 0; i < minima.size(); ++i) {
    const bool left_ok = i == 0 || minima[i] - delta > saddles[i - 1];
    const bool right_ok = i + 1 == minima.size() || minima[i] + delta < saddles[i];
    if (!left_ok || !right_ok) {
      throw ParameterError("delta = " + std::to_string(delta) + " reaches past a separating maximum");
    }
  }

  auto neighbourhood = [&](double x) -> std::optional<std::size_t> {
    const std::size_t v = spec.valley_of(x);
    if (std::abs(x - minima[v]) < delta) {
      return v;
    }
    return std::nullopt;
  };

  EulerStepper stepper(spec, config, rng);
  std::vector<double> w = config.w0;
  std::size_t last = neighbourhood(w[0]).value_or(spec.valley_of(w[0]));
  std::size_t last_step = 0;
  std::vector<TransitionRecord> out;
  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    if (!stepper.step(w)) {
      break;
    }
    const auto here = neighbourhood(w[0]);
    if (here && *here != last) {
      TransitionRecord rec;
      rec.replicate = replicate;
      rec.start_basin = last;
      rec.end_basin = *here;
      rec.transition_step = k;
      rec.transition_time = static_cast<double>(k) * config.eta;
      rec.sojourn_time = static_cast<double>(k - last_step) * config.eta;
      out.push_back(rec);
      last = *here;
      last_step = k;
    }
  }
  return out;
}

std::vector<double> occupancy(const Trajectory& trajectory, const ObjectiveSpec& spec) {
  if (!spec.has_geometry()) {
    throw UnsupportedObjectiveError("occupancy needs an objective with basin geometry");
  }
  if (trajectory.dim != 1 || trajectory.size() == 0) {
    throw ShapeError("occupancy needs a non-empty scalar trajectory");
  }
  std::vector<double> fractions(spec.minima().size(), 0.0);
  for (double x : trajectory.points) {
    fractions[spec.valley_of(x)] += 1.0;
  }
  for (auto& f : fractions) {
    f /= static_cast<double>(trajectory.size());
  }
  return fractions;
}

std::vector<double> OccupancyResult::fractions() const {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0) {
    return out;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

OccupancyResult occupancy_run(const SdeConfig& config, const ObjectiveSpec& spec, std::size_t burn_in,
                              RngStream rng) {
  if (!spec.has_geometry()) {
    throw UnsupportedObjectiveError("occupancy needs an objective with basin geometry");
  }
  if (burn_in >= config.max_steps) {
    throw ParameterError("burn-in must be shorter than max_steps");
  }
  EulerStepper stepper(spec, config, rng);
  OccupancyResult out;
  out.counts.assign(spec.minima().size(), 0);
  std::vector<double> w = config.w0;
  for (std::size_t k = 1; k <= config.max_steps; ++k) {
    if (!stepper.step(w)) {
      out.diverged = true;
      break;
    }
    if (k > burn_in) {
      ++out.counts[spec.valley_of(w[0])];
    }
  }
  return out;
}

PooledOccupancy occupancy_replicates(const SdeConfig& config, const ObjectiveSpec& spec, std::size_t burn_in,
                                     RngStream rng, std::size_t count, std::size_t threads) {
  const auto runs = run_replicates<OccupancyResult>(count, threads, [&](std::size_t i) {
    return occupancy_run(config, spec, burn_in, rng.replicate(static_cast<std::uint32_t>(i)));
  });
  PooledOccupancy pooled;
  pooled.replicates = count;
  OccupancyResult total;
  total.counts.assign(spec.minima().size(), 0);
  for (const auto& r : runs) {
    if (r.diverged) {
      ++pooled.diverged;
      continue;
    }
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      total.counts[i] += r.counts[i];
    }
  }
  pooled.fractions = total.fractions();
  return pooled;
}

double conservative_eta(const ObjectiveSpec& spec, double center, double radius) {
  const double lipschitz = grid_lipschitz(spec, center, radius);
  if (!(lipschitz > 0.0)) {
    throw DegenerateInputError("gradient is constant on the probe interval; no step-size scale available");
  }
  return 0.1 / lipschitz;
}

}  // namespace htsgd
