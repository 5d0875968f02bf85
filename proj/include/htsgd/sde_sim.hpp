#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htsgd/objective.hpp"
#include "htsgd/parallel.hpp"
#include "htsgd/rng.hpp"
#include "htsgd/stable_dist.hpp"

namespace htsgd {

/// How the unit SaS draws S_k are scaled before entering the recursion.
///
/// kCharacteristic uses S ~ SaS(1) as is (characteristic function
/// exp(-|w|^alpha)). kLevyMeasure multiplies S by levy_measure_scale(alpha)
/// so that the driving Levy motion has jump measure |y|^(-1-alpha) dy; the
/// closed-form exit-time and transition-rate predictions assume that
/// normalization.
enum class JumpScale { kCharacteristic, kLevyMeasure };

std::string to_string(JumpScale scale);
JumpScale jump_scale_from_string(const std::string& text);

/// Parameters of the Euler scheme
///   w_{k+1} = w_k - eta grad f(w_k) + eps sigma sqrt(eta) Z_{k+1} + eps eta^(1/alpha) S_{k+1}.
struct SdeConfig {
  double eta = 1e-3;
  double epsilon = 0.0;
  double sigma_brownian = 0.0;
  double alpha = 2.0;
  std::size_t dim = 1;
  std::vector<double> w0 = {0.0};
  std::size_t max_steps = 1000;
  JumpScale jump_scale = JumpScale::kCharacteristic;

  /// Throws ParameterError when a field is out of its domain or w0 has the
  /// wrong length.
  void validate() const;

  /// Coefficient of Z: eps * sigma * sqrt(eta).
  [[nodiscard]] double brownian_coefficient() const;
  /// Coefficient of a unit SaS draw S: eps * eta^(1/alpha) * jump scale.
  [[nodiscard]] double levy_coefficient() const;
};

/// One Euler step with caller-supplied draws z and s (both of length d).
/// Writes the new iterate to `next` and returns false when it is not finite.
bool euler_step(const ObjectiveSpec& spec, const SdeConfig& config, std::span<const double> w,
                std::span<const double> z, std::span<const double> s, std::span<double> next);

/// Stateful stepper: owns the random stream and scratch buffers and advances
/// an iterate in place. Draw order per step: d Gaussians, then d SaS values.
/// Gaussian draws are skipped entirely when the Brownian coefficient is 0,
/// and SaS draws when the Levy coefficient is 0.
class EulerStepper {
 public:
  EulerStepper(const ObjectiveSpec& spec, const SdeConfig& config, RngStream rng);

  /// Advances w by one step; returns false once w has become non-finite.
  bool step(std::span<double> w);

 private:
  const ObjectiveSpec& spec_;
  SdeConfig config_;
  PhiloxEngine engine_;
  StableSampler sampler_;
  double brownian_;
  double levy_;
  std::vector<double> grad_;
};

/// Stored iterates w^0 .. w^n, flattened row-major.
struct Trajectory {
  std::size_t dim = 1;
  double eta = 1.0;
  std::vector<double> points;
  std::optional<std::size_t> diverged_at;  ///< step k whose iterate was non-finite

  [[nodiscard]] std::size_t size() const { return points.size() / dim; }
  [[nodiscard]] std::span<const double> point(std::size_t k) const {
    return std::span<const double>(points).subspan(k * dim, dim);
  }

  /// CSV with header step,time,coord_0..coord_{d-1}.
  void write_csv(std::ostream& os) const;
};

/// Runs max_steps Euler steps from w0. On divergence the run halts: the
/// non-finite iterate is not stored and diverged_at holds its step index.
Trajectory simulate(const SdeConfig& config, const ObjectiveSpec& spec, RngStream rng);

struct ExitTimeRecord {
  std::size_t replicate = 0;
  bool exited = false;
  bool diverged = false;  ///< exit caused by a non-finite iterate
  std::size_t exit_step = 0;
  double exit_time = 0.0;  ///< exit_step * eta
  double radius_a = 0.0;
  double margin_xi = 0.0;
  std::vector<double> center;

  static std::string csv_header();  // replicate,exited,diverged,exit_step,exit_time,radius_a,margin_xi
  [[nodiscard]] std::string csv_row() const;
};

/// First step k with |w^k - center| > a + xi, checked after every step.
/// Divergence counts as an exit and sets the diverged flag. Throws
/// PreconditionError when w0 starts outside the ball.
ExitTimeRecord first_exit(const SdeConfig& config, const ObjectiveSpec& spec, std::span<const double> center,
                          double a, double xi, RngStream rng, std::size_t replicate = 0);

/// `count` independent first exits; replicate i draws from rng.replicate(i).
/// Results are ordered by replicate regardless of `threads`.
std::vector<ExitTimeRecord> first_exit_replicates(const SdeConfig& config, const ObjectiveSpec& spec,
                                                  std::span<const double> center, double a, double xi,
                                                  RngStream rng, std::size_t count, std::size_t threads = 0);

struct ExitSummary {
  std::size_t replicates = 0;
  std::size_t exited = 0;
  std::size_t diverged = 0;
  double mean_exit_time = 0.0;  ///< over exited replicates (diverged included)
  [[nodiscard]] double diverged_fraction() const;
};

ExitSummary summarize_exits(std::span<const ExitTimeRecord> records);

struct TransitionRecord {
  std::size_t replicate = 0;
  std::size_t start_basin = 0;
  std::size_t end_basin = 0;
  std::size_t transition_step = 0;  ///< absolute step of entry into the new neighbourhood
  double transition_time = 0.0;     ///< transition_step * eta
  double sojourn_time = 0.0;        ///< time since the previous record (or since the start)

  static std::string csv_header();
  [[nodiscard]] std::string csv_row() const;
};

/// Simulates max_steps steps and records every entry into the
/// delta-neighbourhood of a minimum other than the last one visited. The run
/// starts "in" the neighbourhood containing w0, or failing that in the valley
/// of w0. Stops early on divergence.
///
/// Throws UnsupportedObjectiveError without basin geometry and
/// ParameterError unless every neighbourhood lies strictly inside its valley.
std::vector<TransitionRecord> transition_trace(const SdeConfig& config, const ObjectiveSpec& spec, double delta,
                                               RngStream rng, std::size_t replicate = 0);

/// Fraction of stored iterates (w^0 included) lying in each valley.
std::vector<double> occupancy(const Trajectory& trajectory, const ObjectiveSpec& spec);

struct OccupancyResult {
  std::vector<std::uint64_t> counts;  ///< steps per valley after burn-in
  bool diverged = false;

  [[nodiscard]] std::vector<double> fractions() const;
};

/// Streaming occupancy without storing the path: counts the valley of
/// w^k for burn_in < k <= max_steps.
OccupancyResult occupancy_run(const SdeConfig& config, const ObjectiveSpec& spec, std::size_t burn_in, RngStream rng);

/// Pooled occupancy over `count` replicates. Diverged replicates are
/// excluded from the pooled counts and reported separately.
struct PooledOccupancy {
  std::vector<double> fractions;
  std::size_t replicates = 0;
  std::size_t diverged = 0;
};

PooledOccupancy occupancy_replicates(const SdeConfig& config, const ObjectiveSpec& spec, std::size_t burn_in,
                                     RngStream rng, std::size_t count, std::size_t threads = 0);

/// eta <= 0.1 / M_local with M_local a grid Lipschitz estimate of f' on
/// [center - radius, center + radius]. Scalar objectives only.
double conservative_eta(const ObjectiveSpec& spec, double center, double radius);

}  // namespace htsgd
