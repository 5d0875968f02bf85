#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace htsgd {

/// Immutable differentiable objective with an exact gradient oracle.
///
/// Scalar objectives may also declare basin geometry: ordered local minima
/// m_1 < ... < m_r and the separating maxima s_1 < ... < s_{r-1} (with
/// s_0 = -inf and s_r = +inf implied). Valley i is (s_{i-1}, s_i).
class ObjectiveSpec {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  ObjectiveSpec(std::string name, std::size_t dim, ValueFn value, GradFn grad, std::optional<double> f_star = {});

  /// Attaches basin geometry. Requires dim() == 1 and the interleaving order;
  /// throws ParameterError otherwise, or when the gradient does not vanish
  /// (to 1e-8) at a declared critical point.
  ObjectiveSpec with_geometry(std::vector<double> minima, std::vector<double> saddles) const;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] std::optional<double> f_star() const { return f_star_; }

  [[nodiscard]] double value(std::span<const double> w) const { return value_(w); }
  void gradient(std::span<const double> w, std::span<double> out) const { grad_(w, out); }
  [[nodiscard]] std::vector<double> gradient(std::span<const double> w) const;

  [[nodiscard]] bool has_geometry() const { return !minima_.empty(); }
  [[nodiscard]] const std::vector<double>& minima() const { return minima_; }
  [[nodiscard]] const std::vector<double>& saddles() const { return saddles_; }

  /// 0-based valley containing the scalar point w. Points exactly on a
  /// saddle belong to the valley on its left.
  [[nodiscard]] std::size_t valley_of(double w) const;

 private:
  std::string name_;
  std::size_t dim_;
  ValueFn value_;
  GradFn grad_;
  std::optional<double> f_star_;
  std::vector<double> minima_;
  std::vector<double> saddles_;
};

/// f(w) = |w|^2 / 2, minimum at the origin, f_star = 0.
ObjectiveSpec quadratic(std::size_t dim);

/// Scalar double well defined through f'(w) = scale * w (w - m1) (w - m2),
/// with f the quartic antiderivative normalized to f(0) = 0. Minima
/// {m1, m2}, separating maximum at 0. Requires m1 < 0 < m2 and scale > 0.
ObjectiveSpec double_well(double m1, double m2, double scale = 1.0);

/// <x, grad f(x)> >= m |x|^(1+gamma) - b at every probe.
bool check_dissipativity(const ObjectiveSpec& spec, double m, double b, double gamma,
                         const std::vector<std::vector<double>>& probes);

using ProbePair = std::pair<std::vector<double>, std::vector<double>>;

/// |grad f(x) - grad f(y)| <= M |x - y|^gamma on every pair.
bool check_holder(const ObjectiveSpec& spec, double M, double gamma, const std::vector<ProbePair>& pairs);

/// Largest ratio |grad f(x) - grad f(y)| / |x - y|^gamma over the pairs
/// (pairs with x == y are skipped): the smallest M that check_holder accepts.
double holder_constant(const ObjectiveSpec& spec, double gamma, const std::vector<ProbePair>& pairs);

/// Largest |f'(x) - f'(y)| / |x - y| over neighbouring points of a uniform
/// grid of `points` nodes on [center - radius, center + radius]. Scalar only.
double grid_lipschitz(const ObjectiveSpec& spec, double center, double radius, std::size_t points = 401);

/// Central-difference second derivative of a scalar objective.
double second_derivative(const ObjectiveSpec& spec, double w, double h = 1e-4);

/// Human-readable warnings for declared critical points with |f''| < 1e-6,
/// where small-noise predictions lose their meaning.
std::vector<std::string> geometry_warnings(const ObjectiveSpec& spec);

}  // namespace htsgd
