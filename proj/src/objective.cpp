#include "htsgd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    s += x * x;
  }
  return std::sqrt(s);
}

double scalar_derivative(const ObjectiveSpec& spec, double w) {
  double g = 0.0;
  spec.gradient(std::span<const double>(&w, 1), std::span<double>(&g, 1));
  return g;
}

}  // namespace

ObjectiveSpec::ObjectiveSpec(std::string name, std::size_t dim, ValueFn value, GradFn grad,
                             std::optional<double> f_star)
    : name_(std::move(name)), dim_(dim), value_(std::move(value)), grad_(std::move(grad)), f_star_(f_star) {
  if (dim_ == 0) {
    throw ParameterError("objective dimension must be at least 1");
  }
}

ObjectiveSpec ObjectiveSpec::with_geometry(std::vector<double> minima, std::vector<double> saddles) const {
  if (dim_ != 1) {
    throw ParameterError("basin geometry is only defined for scalar objectives");
  }
  if (minima.empty() || saddles.size() + 1 != minima.size()) {
    throw ParameterError("geometry needs r >= 1 minima and r - 1 separating maxima");
  }
  for (std::size_t i = 0; i < saddles.size(); ++i) {
    if (!(minima[i] < saddles[i] && saddles[i] < minima[i + 1])) {
      throw ParameterError("minima and maxima must interleave: m_1 < s_1 < m_2 < ...");
    }
  }
  for (double c : minima) {
    if (std::abs(scalar_derivative(*this, c)) >= 1e-8) {
      throw ParameterError("gradient does not vanish at declared minimum " + std::to_string(c));
    }
  }
  for (double c : saddles) {
    if (std::abs(scalar_derivative(*this, c)) >= 1e-8) {
      throw ParameterError("gradient does not vanish at declared maximum " + std::to_string(c));
    }
  }
  ObjectiveSpec out = *this;
  out.minima_ = std::move(minima);
  out.saddles_ = std::move(saddles);
  return out;
}

std::vector<double> ObjectiveSpec::gradient(std::span<const double> w) const {
  std::vector<double> g(dim_);
  grad_(w, g);
  return g;
}

std::size_t ObjectiveSpec::valley_of(double w) const {
  if (!has_geometry()) {
    throw UnsupportedObjectiveError("objective '" + name_ + "' declares no basin geometry");
  }
  const auto it = std::lower_bound(saddles_.begin(), saddles_.end(), w);
  return static_cast<std::size_t>(it - saddles_.begin());
}

ObjectiveSpec quadratic(std::size_t dim) {
  if (dim == 0) {
    throw ParameterError("quadratic objective needs dim >= 1");
  }
  auto value = [](std::span<const double> w) {
    double s = 0.0;
    for (double x : w) {
      s += x * x;
    }
    return 0.5 * s;
  };
  auto grad = [](std::span<const double> w, std::span<double> out) { std::copy(w.begin(), w.end(), out.begin()); };
  return ObjectiveSpec("quadratic", dim, value, grad, 0.0);
}

ObjectiveSpec double_well(double m1, double m2, double scale) {
  if (!(m1 < 0.0 && 0.0 < m2)) {
    throw ParameterError("double well needs m1 < 0 < m2");
  }
  if (!(scale > 0.0)) {
    throw ParameterError("double well scale must be positive");
  }
  const double sum = m1 + m2;
  const double prod = m1 * m2;
  // f'(w) = scale * (w^3 - (m1 + m2) w^2 + m1 m2 w)
  auto quartic = [=](double w) {
    const double w2 = w * w;
    return scale * (0.25 * w2 * w2 - sum * w2 * w / 3.0 + 0.5 * prod * w2);
  };
  auto value = [quartic](std::span<const double> w) { return quartic(w[0]); };
  auto grad = [=](std::span<const double> w, std::span<double> out) {
    const double x = w[0];
    out[0] = scale * x * (x - m1) * (x - m2);
  };
  const double f_star = std::min(quartic(m1), quartic(m2));
  std::ostringstream name;
  name << "double_well(" << m1 << ',' << m2 << ',' << scale << ')';
  return ObjectiveSpec(name.str(), 1, value, grad, f_star).with_geometry({m1, m2}, {0.0});
}

bool check_dissipativity(const ObjectiveSpec& spec, double m, double b, double gamma,
                         const std::vector<std::vector<double>>& probes) {
  if (probes.empty()) {
    throw ParameterError("dissipativity check needs at least one probe");
  }
  std::vector<double> g(spec.dim());
  for (const auto& x : probes) {
    if (x.size() != spec.dim()) {
      throw ShapeError("probe dimension does not match the objective");
    }
    spec.gradient(x, g);
    double inner = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      inner += x[i] * g[i];
    }
    if (inner < m * std::pow(norm(x), 1.0 + gamma) - b) {
      return false;
    }
  }
  return true;
}

double holder_constant(const ObjectiveSpec& spec, double gamma, const std::vector<ProbePair>& pairs) {
  if (pairs.empty()) {
    throw ParameterError("Hoelder check needs at least one probe pair");
  }
  std::vector<double> gx(spec.dim());
  std::vector<double> gy(spec.dim());
  std::vector<double> diff(spec.dim());
  double worst = 0.0;
  for (const auto& [x, y] : pairs) {
    if (x.size() != spec.dim() || y.size() != spec.dim()) {
      throw ShapeError("probe dimension does not match the objective");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff[i] = x[i] - y[i];
    }
    const double dist = norm(diff);
    if (dist == 0.0) {
      continue;
    }
    spec.gradient(x, gx);
    spec.gradient(y, gy);
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff[i] = gx[i] - gy[i];
    }
    worst = std::max(worst, norm(diff) / std::pow(dist, gamma));
  }
  return worst;
}

bool check_holder(const ObjectiveSpec& spec, double M, double gamma, const std::vector<ProbePair>& pairs) {
  return holder_constant(spec, gamma, pairs) <= M;
}

double grid_lipschitz(const ObjectiveSpec& spec, double center, double radius, std::size_t points) {
  if (spec.dim() != 1) {
    throw ParameterError("grid Lipschitz estimate is scalar only");
  }
  if (points < 2 || !(radius > 0.0)) {
    throw ParameterError("grid needs at least two points and a positive radius");
  }
  const double h = 2.0 * radius / static_cast<double>(points - 1);
  double prev_x = center - radius;
  double prev_g = scalar_derivative(spec, prev_x);
  double worst = 0.0;
  for (std::size_t i = 1; i < points; ++i) {
    const double x = center - radius + h * static_cast<double>(i);
    const double g = scalar_derivative(spec, x);
    worst = std::max(worst, std::abs(g - prev_g) / (x - prev_x));
    prev_x = x;
    prev_g = g;
  }
  return worst;
}

double second_derivative(const ObjectiveSpec& spec, double w, double h) {
  if (spec.dim() != 1) {
    throw ParameterError("second derivative helper is scalar only");
  }
  return (scalar_derivative(spec, w + h) - scalar_derivative(spec, w - h)) / (2.0 * h);
}

std::vector<std::string> geometry_warnings(const ObjectiveSpec& spec) {
  std::vector<std::string> out;
  if (!spec.has_geometry()) {
    return out;
  }
  auto inspect = [&](double c, const char* kind) {
    const double curvature = second_derivative(spec, c);
    if (std::abs(curvature) < 1e-6) {
      out.push_back(std::string("near-degenerate ") + kind + " at " + std::to_string(c) +
                    ": |f''| = " + std::to_string(std::abs(curvature)));
    }
  };
  for (double m : spec.minima()) {
    inspect(m, "minimum");
  }
  for (double s : spec.saddles()) {
    inspect(s, "maximum");
  }
  return out;
}

}  // namespace htsgd
