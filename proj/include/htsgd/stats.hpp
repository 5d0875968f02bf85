#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace htsgd {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

/// stddev / sqrt(n).
double standard_error(std::span<const double> xs);

double median(std::span<const double> xs);

/// Least-squares slope of log(y) against log(x). Needs at least two points
/// with positive coordinates.
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// sup_x |F_n(x) - F(x)| for the empirical distribution of `samples`
/// against a continuous reference CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

}  // namespace htsgd
