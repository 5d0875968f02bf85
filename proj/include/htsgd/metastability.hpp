#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace htsgd {

/// Limiting valley-hopping chain of the small-noise Levy dynamics on a
/// scalar landscape with minima m_1 < ... < m_r separated by s_1 < ... < s_{r-1}.
struct MarkovChainModel {
  std::vector<double> minima;
  std::vector<double> saddles;
  double alpha = 1.0;
  Eigen::MatrixXd Q;
  Eigen::VectorXd pi;  ///< empty until stationary_distribution has been attached

  /// {minima, saddles, alpha, Q (row-major nested list), pi}
  [[nodiscard]] nlohmann::json to_json() const;
};

/// q_ij = (1/alpha) |1/|s_{j-1} - m_i|^alpha - 1/|s_j - m_i|^alpha| for j != i,
/// where the outer boundaries s_0 = -inf and s_r = +inf contribute 0.
/// Diagonal entries are minus the off-diagonal row sums. Throws
/// ParameterError on an ordering violation or alpha outside (0, 2].
MarkovChainModel generator_matrix(const std::vector<double>& minima, const std::vector<double>& saddles,
                                  double alpha);

/// Solves Q^T pi = 0, sum(pi) = 1 by replacing the last equation with the
/// normalization. Throws DegenerateChainError when the replaced system is
/// numerically singular (more than one stationary direction).
Eigen::VectorXd stationary_distribution(const MarkovChainModel& model);

/// Closed form for two valleys: (|m1|^a, |m2|^a) / (|m1|^a + |m2|^a), where
/// the distances are measured from the single separating maximum s.
Eigen::Vector2d two_well_stationary(double m1, double s, double m2, double alpha);

/// Leading-order mean first exit time (alpha/2) a^alpha / eps^alpha.
double expected_exit_time(double a, double epsilon, double alpha);

/// Leading-order survival P(tau > u) = exp(-u eps^alpha theta / alpha), theta = 2 / a^alpha.
double exit_survival(double u, double a, double epsilon, double alpha);

}  // namespace htsgd
