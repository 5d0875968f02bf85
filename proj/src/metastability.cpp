#include "htsgd/metastability.hpp"

#include <cmath>

#include "htsgd/errors.hpp"
#include "htsgd/stable_dist.hpp"

namespace htsgd {

namespace {

void validate_geometry(const std::vector<double>& minima, const std::vector<double>& saddles) {
  if (minima.empty()) {
    throw ParameterError("at least one minimum is required");
  }
  if (saddles.size() + 1 != minima.size()) {
    throw ParameterError("r minima need exactly r - 1 separating maxima");
  }
  for (std::size_t i = 0; i < saddles.size(); ++i) {
    if (!(minima[i] < saddles[i] && saddles[i] < minima[i + 1])) {
      throw ParameterError("minima and maxima must interleave: m_1 < s_1 < m_2 < ...");
    }
  }
}

void validate_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

nlohmann::json MarkovChainModel::to_json() const {
  nlohmann::json q = nlohmann::json::array();
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(Q.cols()));
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = Q(i, j);
    }
    q.push_back(row);
  }
  return {{"minima", minima},
          {"saddles", saddles},
          {"alpha", alpha},
          {"Q", q},
          {"pi", std::vector<double>(pi.data(), pi.data() + pi.size())}};
}

MarkovChainModel generator_matrix(const std::vector<double>& minima, const std::vector<double>& saddles,
                                  double alpha) {
  validate_alpha(alpha);
  validate_geometry(minima, saddles);
  const std::size_t r = minima.size();

  // 1/|s_j - m_i|^alpha with s_0 = -inf and s_r = +inf mapped to 0.
  auto inverse_power = [&](std::size_t j, double m) {
    if (j == 0 || j == r) {
      return 0.0;
    }
    return 1.0 / std::pow(std::abs(saddles[j - 1] - m), alpha);
  };

  MarkovChainModel model;
  model.minima = minima;
  model.saddles = saddles;
  model.alpha = alpha;
  model.Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
      if (j == i) {
        continue;
      }
      // Valley j spans (s_j, s_{j+1}) in 0-based saddle numbering.
      const double q = std::abs(inverse_power(j, minima[i]) - inverse_power(j + 1, minima[i])) / alpha;
      model.Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = q;
      row_sum += q;
    }
    model.Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = -row_sum;
  }
  return model;
}

Eigen::VectorXd stationary_distribution(const MarkovChainModel& model) {
  const Eigen::Index r = model.Q.rows();
  if (r == 0 || model.Q.cols() != r) {
    throw ShapeError("generator matrix must be square and non-empty");
  }
  Eigen::MatrixXd A = model.Q.transpose();
  A.row(r - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
  rhs(r - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (lu.rank() < r) {
    throw DegenerateChainError("generator has more than one stationary direction (rank " +
                               std::to_string(lu.rank()) + " of " + std::to_string(r) + ")");
  }
  Eigen::VectorXd pi = lu.solve(rhs);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (pi(i) < 0.0) {
      if (pi(i) < -1e-12) {
        throw DegenerateChainError("stationary solve produced a negative probability");
      }
      pi(i) = 0.0;
    }
  }
  return pi / pi.sum();
}

Eigen::Vector2d two_well_stationary(double m1, double s, double m2, double alpha) {
  validate_alpha(alpha);
  if (!(m1 < s && s < m2)) {
    throw ParameterError("two-well closed form needs m1 < s < m2");
  }
  const double left = std::pow(s - m1, alpha);
  const double right = std::pow(m2 - s, alpha);
  return Eigen::Vector2d(left, right) / (left + right);
}

double expected_exit_time(double a, double epsilon, double alpha) {
  validate_positive(a, "exit radius a");
  validate_positive(epsilon, "noise level epsilon");
  validate_alpha(alpha);
  return 0.5 * alpha * std::pow(a / epsilon, alpha);
}

double exit_survival(double u, double a, double epsilon, double alpha) {
  if (!(u >= 0.0)) {
    throw ParameterError("survival time u must be non-negative");
  }
  validate_positive(a, "exit radius a");
  validate_positive(epsilon, "noise level epsilon");
  validate_alpha(alpha);
  const double theta = 2.0 / std::pow(a, alpha);
  return std::exp(-u * std::pow(epsilon, alpha) * theta / alpha);
}

}  // namespace htsgd
