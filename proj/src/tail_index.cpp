#include "htsgd/tail_index.hpp"

#include <cmath>
#include <sstream>

#include "htsgd/errors.hpp"

namespace htsgd {

namespace {

std::vector<double> nonzero_values(std::span<const double> samples) {
  std::vector<double> kept;
  kept.reserve(samples.size());
  for (double x : samples) {
    if (!std::isfinite(x)) {
      throw DegenerateInputError("tail-index estimation received a non-finite sample");
    }
    if (x != 0.0) {
      kept.push_back(x);
    }
  }
  if (kept.empty()) {
    throw DegenerateInputError("tail-index estimation received only zero samples");
  }
  return kept;
}

TailEstimate estimate_from_nonzero(const std::vector<double>& values, std::size_t n_zero, std::size_t k1) {
  if (k1 < 2) {
    throw ParameterError("block length k1 must be at least 2");
  }
  if (values.size() < k1) {
    throw SizeError("tail-index estimation needs at least k1 = " + std::to_string(k1) +
                    " non-zero samples, got " + std::to_string(values.size()));
  }
  const std::size_t blocks = values.size() / k1;

  double sum_log_y = 0.0;
  double sum_log_x = 0.0;
  std::size_t kept_blocks = 0;
  for (std::size_t i = 0; i < blocks; ++i) {
    const auto block = std::span<const double>(values).subspan(i * k1, k1);
    double y = 0.0;
    double log_x = 0.0;
    for (double x : block) {
      y += x;
      log_x += std::log(std::abs(x));
    }
    if (!std::isfinite(y)) {
      throw DegenerateInputError("block sum overflowed to a non-finite value");
    }
    if (y == 0.0) {
      continue;
    }
    sum_log_y += std::log(std::abs(y));
    sum_log_x += log_x;
    ++kept_blocks;
  }
  if (kept_blocks == 0) {
    throw DegenerateInputError("every block sum cancelled to zero");
  }

  const double mean_log_y = sum_log_y / static_cast<double>(kept_blocks);
  const double mean_log_x = sum_log_x / static_cast<double>(kept_blocks * k1);
  const double inv_alpha = (mean_log_y - mean_log_x) / std::log(static_cast<double>(k1));
  if (!(inv_alpha > 0.0)) {
    throw DegenerateInputError("block sums do not grow with the block length; tail index undefined");
  }

  TailEstimate est;
  est.alpha_hat = 1.0 / inv_alpha;
  est.k1 = k1;
  est.k2 = kept_blocks;
  est.n_used = kept_blocks * k1;
  est.n_dropped = n_zero + (values.size() - est.n_used);
  return est;
}

}  // namespace

std::string TailEstimate::csv_header() { return "alpha_hat,k1,k2,n_used,n_dropped"; }

std::string TailEstimate::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << alpha_hat << ',' << k1 << ',' << k2 << ',' << n_used << ',' << n_dropped;
  return os.str();
}

TailEstimate estimate_alpha(std::span<const double> samples, std::size_t k1) {
  const auto values = nonzero_values(samples);
  return estimate_from_nonzero(values, samples.size() - values.size(), k1);
}

TailEstimate estimate_alpha(std::span<const double> samples) {
  const auto values = nonzero_values(samples);
  if (values.size() < 4) {
    throw SizeError("automatic block length needs at least 4 non-zero samples");
  }
  return estimate_from_nonzero(values, samples.size() - values.size(), choose_block_size(values.size()));
}

std::size_t choose_block_size(std::size_t K) {
  if (K < 4) {
    throw SizeError("block-size selection needs K >= 4");
  }
  for (std::size_t n = K; n >= 4; --n) {
    const double root = std::sqrt(static_cast<double>(n));
    std::size_t best = 0;
    double best_gap = 0.0;
    for (std::size_t d = 1; d * d <= n; ++d) {
      if (n % d != 0) {
        continue;
      }
      // Visit the small divisor before its cofactor so ties keep the smaller one.
      for (std::size_t cand : {d, n / d}) {
        const double gap = std::abs(static_cast<double>(cand) - root);
        if (best == 0 || gap < best_gap) {
          best = cand;
          best_gap = gap;
        }
      }
    }
    const auto b = static_cast<double>(best);
    if (best >= 2 && b >= root / 2.0 && b <= 2.0 * root) {
      return best;
    }
  }
  return 2;  // unreachable: n = 4 always yields 2
}

TailEstimate gradient_noise_alpha(std::span<const double> grad_full,
                                  const std::vector<std::vector<double>>& grads_minibatch) {
  if (grads_minibatch.empty()) {
    throw ShapeError("gradient noise needs at least one minibatch gradient");
  }
  const std::size_t d = grad_full.size();
  std::vector<double> pool;
  pool.reserve(d * grads_minibatch.size());
  for (const auto& g : grads_minibatch) {
    if (g.size() != d) {
      throw ShapeError("minibatch gradient has dimension " + std::to_string(g.size()) + ", expected " +
                       std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      pool.push_back(g[j] - grad_full[j]);
    }
  }
  return estimate_alpha(pool);
}

}  // namespace htsgd
