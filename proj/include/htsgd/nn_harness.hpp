#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htsgd/rng.hpp"
#include "htsgd/tail_index.hpp"

namespace htsgd {

enum class LossKind { kNll, kLinearHinge };
enum class InitScheme { kFanIn, kMeanField };

std::string to_string(LossKind loss);
LossKind loss_kind_from_string(const std::string& text);
std::string to_string(InitScheme init);
InitScheme init_scheme_from_string(const std::string& text);

/// Samples stored column-wise: inputs is input_dim x n.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::size_t input_dim() const { return static_cast<std::size_t>(inputs.rows()); }
  /// Copies the listed samples into a new dataset, in the given order.
  [[nodiscard]] Dataset gather(std::span<const std::size_t> indices) const;
  /// Samples [first, first + count) as a new dataset.
  [[nodiscard]] Dataset slice(std::size_t first, std::size_t count) const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::size_t n_classes = 10;

  /// Throws ParameterError on a label outside [0, n_classes) or mismatched
  /// input dimensions.
  void validate() const;
};

/// Parses an IDX image file (magic 0x00000803, three big-endian dims) into a
/// rows*cols x n matrix scaled to [0, 1].
Eigen::MatrixXd parse_idx_images(std::span<const std::uint8_t> bytes);

/// Parses an IDX label file (magic 0x00000801); labels >= 10 are rejected.
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// Loads an image/label IDX pair. Throws FormatError (with byte offset) on
/// a bad magic number, truncated payload or count mismatch.
Dataset load_mnist_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path);

/// Loads train-images-idx3-ubyte, train-labels-idx1-ubyte,
/// t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte from a directory.
DatasetSplit load_mnist_dir(const std::filesystem::path& dir);

/// Class-conditional Gaussian blobs: class centres ~ N(0, I), samples are
/// centre + spread * N(0, I), labels cycle through the classes. The test part
/// has n_test samples (0 picks n / 4 rounded down to a class multiple).
DatasetSplit synthetic_blobs(std::size_t n, std::size_t dim, std::size_t n_classes, double spread, RngStream rng,
                             std::size_t n_test = 0);

/// Fully-connected rectifier network with a flat parameter vector. Layer l
/// (1-based) stores its weight matrix (column-major, out x in) followed by
/// its bias. Under kMeanField the pre-activation of layer l is
/// W_l a_{l-1} / n_{l-1} + b_l; under kFanIn the factor is 1.
class MlpModel {
 public:
  MlpModel(std::vector<std::size_t> layer_sizes, InitScheme init, RngStream rng);

  [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  [[nodiscard]] std::size_t depth() const { return sizes_.size() - 1; }
  [[nodiscard]] std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  [[nodiscard]] InitScheme init() const { return init_; }

  [[nodiscard]] Eigen::VectorXd& params() { return params_; }
  [[nodiscard]] const Eigen::VectorXd& params() const { return params_; }

  /// Offset and length of layer l's parameters (weights then bias), 1 <= l <= depth.
  [[nodiscard]] std::pair<std::size_t, std::size_t> layer_range(std::size_t l) const;

  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> weights(std::size_t l) const;
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
  [[nodiscard]] double input_scale(std::size_t l) const { return scales_[l - 1]; }

  /// Output scores, n_classes x batch.
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> scales_;
  InitScheme init_;
  Eigen::VectorXd params_;
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Batch-mean loss and its exact gradient over all parameters.
/// kNll: cross-entropy of the softmax outputs.
/// kLinearHinge: mean over wrong classes c of max(0, 1 + score_c - score_y).
LossAndGradient forward_backward(const MlpModel& model, const Dataset& batch, LossKind loss);

double accuracy(const MlpModel& model, const Dataset& data);
double mean_loss(const MlpModel& model, const Dataset& data, LossKind loss);

/// Minibatch noises U_i = g_i - g_full, one row of length d per minibatch.
struct NoisePool {
  std::size_t dim = 0;
  std::size_t batches = 0;
  std::vector<double> values;  ///< batches x dim, row-major

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * dim, dim);
  }
};

struct GradientPool {
  double loss = 0.0;  ///< mean loss over all n points
  Eigen::VectorXd full_gradient;
  NoisePool noise;
};

/// Splits the data in its stored order into consecutive size-b minibatches.
/// The full gradient is exact over all n points (a trailing partial batch
/// contributes to it); only complete minibatches enter the noise pool.
GradientPool gradient_noise_pool(const MlpModel& model, const Dataset& data, std::size_t batch_size, LossKind loss,
                                 std::size_t threads = 1);

struct LayerEstimate {
  std::size_t layer = 0;  ///< 0 = whole network
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples = 0;
  bool reliable = false;
};

/// Minimum non-zero noise entries for a per-layer estimate to count as reliable.
inline constexpr std::size_t kMinLayerSamples = 1000;

/// Index 0 estimates the whole concatenated pool; index l the entries owned
/// by layer l, concatenated in minibatch order. Layers with too few usable
/// entries are flagged unreliable instead of throwing.
std::vector<LayerEstimate> layerwise_alpha(const NoisePool& pool, const MlpModel& model);

struct TrainLogRow {
  std::size_t iteration = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double loss = 0.0;
  double alpha_whole = 0.0;
  std::vector<double> alpha_layers;
  std::optional<double> c_st;

  static std::string csv_header(std::size_t depth);
  [[nodiscard]] std::string csv_row() const;
};

struct TrainOptions {
  std::size_t batch_size = 100;
  double eta = 0.1;
  std::size_t iterations = 1000;
  std::size_t log_every = 100;
  LossKind loss = LossKind::kNll;
  bool stop_at_full_accuracy = true;
  bool stability_check = false;
  /// When set, the measured noise pool is replaced by SaS(alpha) draws of
  /// the same shape before estimation (training itself is unchanged).
  std::optional<double> inject_alpha;
  std::size_t threads = 1;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::size_t iterations_run = 0;
  bool diverged = false;
};

/// Plain SGD with epoch-wise shuffled minibatches. Tail statistics are
/// logged at iteration 0 and every log_every iterations, measured at the
/// current iterate before that iteration's update. Stops early at 100%
/// training accuracy when enabled, or on a non-finite loss.
TrainResult train_with_tail_logging(MlpModel& model, const DatasetSplit& data, const TrainOptions& options,
                                    RngStream rng);

struct SweepGrid {
  std::vector<std::size_t> widths = {32};
  std::vector<std::size_t> depths = {2};
  std::vector<std::size_t> batch_sizes = {50};
  std::vector<double> etas = {0.1};
};

struct SweepCell {
  std::size_t width = 0;
  std::size_t depth = 0;
  std::size_t batch_size = 0;
  double eta = 0.0;
  double eta_over_b = 0.0;
  double test_error = 0.0;
  double alpha_hat = 0.0;
  bool diverged = false;
};

struct SweepGroup {
  double eta_over_b = 0.0;
  std::size_t cells = 0;
  double test_error = 0.0;  ///< mean over non-diverged cells
  double alpha_hat = 0.0;
  std::size_t diverged = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepGroup> groups;  ///< ascending eta / b; equal ratios (1e-9 relative) merged

  static std::string cell_csv_header();
  static std::string group_csv_header();
};

/// Trains one network per grid cell (depth counts weight layers, so the
/// network has depth - 1 hidden layers of the given width) with the
/// given base options and records the final log row of each.
SweepResult noise_scale_sweep(const SweepGrid& grid, const DatasetSplit& data, InitScheme init,
                              const TrainOptions& base, RngStream rng);

}  // namespace htsgd
