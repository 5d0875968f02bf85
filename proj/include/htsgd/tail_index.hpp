#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace htsgd {

/// Result of the block-sum tail-index estimator.
///
/// alpha_hat is reported raw: values above 2 are possible for near-Gaussian
/// data and are not clamped.
struct TailEstimate {
  double alpha_hat = 0.0;
  std::size_t k1 = 0;         ///< block length
  std::size_t k2 = 0;         ///< number of blocks kept
  std::size_t n_used = 0;     ///< == k1 * k2
  std::size_t n_dropped = 0;  ///< zeros, truncation remainder, cancelled blocks

  static std::string csv_header();  // alpha_hat,k1,k2,n_used,n_dropped
  [[nodiscard]] std::string csv_row() const;
};

/// Estimates alpha from samples in their given order.
///
/// Exact zeros are removed first. The remaining values are cut into blocks
/// of k1 consecutive samples (the tail that does not fill a block is
/// dropped), block sums Y_i are formed and
///
///   1/alpha_hat = (mean_i log|Y_i| - mean_j log|X_j|) / log k1.
///
/// A block whose sum cancels exactly to zero is dropped together with its
/// samples. The estimate is invariant to rescaling the input.
///
/// Throws ParameterError for k1 < 2, DegenerateInputError for all-zero or
/// non-finite input, SizeError when fewer than k1 non-zero samples remain.
TailEstimate estimate_alpha(std::span<const double> samples, std::size_t k1);

/// Same as above with k1 = choose_block_size(number of non-zero samples).
TailEstimate estimate_alpha(std::span<const double> samples);

/// Block length for K samples: the divisor of K closest to sqrt(K), ties to
/// the smaller divisor. When no divisor lies in [sqrt(K)/2, 2 sqrt(K)]
/// (e.g. K prime) K is lowered until one does; the caller's estimator then
/// drops the remainder. Requires K >= 4.
std::size_t choose_block_size(std::size_t K);

/// Gradient-noise tail index: U_i = grads_minibatch[i] - grad_full, all
/// noises concatenated in minibatch order, then estimate_alpha with an
/// automatic block length. Throws ShapeError on dimension mismatch.
TailEstimate gradient_noise_alpha(std::span<const double> grad_full,
                                  const std::vector<std::vector<double>>& grads_minibatch);

}  // namespace htsgd
