#include "htsgd/nn_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

#include "htsgd/errors.hpp"
#include "htsgd/parallel.hpp"
#include "htsgd/stability_test.hpp"
#include "htsgd/stable_dist.hpp"

namespace htsgd {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) {
    throw FormatError("IDX header truncated", bytes.size());
  }
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) | (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) | static_cast<std::uint32_t>(bytes[offset + 3]);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Eigen::ArrayXXd relu_mask(const Eigen::MatrixXd& z) { return (z.array() > 0.0).cast<double>(); }

}  // namespace

std::string to_string(LossKind loss) { return loss == LossKind::kNll ? "nll" : "hinge"; }

LossKind loss_kind_from_string(const std::string& text) {
  if (text == "nll") {
    return LossKind::kNll;
  }
  if (text == "hinge") {
    return LossKind::kLinearHinge;
  }
  throw ParameterError("unknown loss '" + text + "' (expected nll or hinge)");
}

std::string to_string(InitScheme init) { return init == InitScheme::kFanIn ? "fan_in" : "mean_field"; }

InitScheme init_scheme_from_string(const std::string& text) {
  if (text == "fan_in") {
    return InitScheme::kFanIn;
  }
  if (text == "mean_field") {
    return InitScheme::kMeanField;
  }
  throw ParameterError("unknown init scheme '" + text + "' (expected fan_in or mean_field)");
}

Dataset Dataset::gather(std::span<const std::size_t> indices) const {
  Dataset out;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(static_cast<Eigen::Index>(indices[i]));
    out.labels[i] = labels[indices[i]];
  }
  return out;
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) {
    throw SizeError("dataset slice runs past the end");
  }
  Dataset out;
  out.inputs = inputs.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(first),
                    labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

void DatasetSplit::validate() const {
  if (n_classes < 2) {
    throw ParameterError("at least two classes are required");
  }
  if (train.size() == 0) {
    throw ParameterError("training set is empty");
  }
  if (static_cast<std::size_t>(train.inputs.cols()) != train.size() ||
      static_cast<std::size_t>(test.inputs.cols()) != test.size()) {
    throw ShapeError("input columns and label count disagree");
  }
  if (test.size() > 0 && test.input_dim() != train.input_dim()) {
    throw ShapeError("train and test inputs differ in dimension");
  }
  for (const auto* part : {&train, &test}) {
    for (int y : part->labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
        throw ParameterError("label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes) + ")");
      }
    }
  }
}

Eigen::MatrixXd parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (read_be32(bytes, 0) != kImageMagic) {
    throw FormatError("not an IDX image file (magic 0x00000803 expected)", 0);
  }
  const std::size_t n = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t pixels = rows * cols;
  if (pixels == 0) {
    throw FormatError("IDX image dimensions must be non-zero", 8);
  }
  const std::size_t need = 16 + n * pixels;
  if (bytes.size() < need) {
    throw FormatError("IDX image payload truncated: " + std::to_string(need) + " bytes needed", bytes.size());
  }
  if (bytes.size() > need) {
    throw FormatError("IDX image file has trailing bytes", need);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = bytes[16 + i * pixels + p] / 255.0;
    }
  }
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (read_be32(bytes, 0) != kLabelMagic) {
    throw FormatError("not an IDX label file (magic 0x00000801 expected)", 0);
  }
  const std::size_t n = read_be32(bytes, 4);
  if (bytes.size() < 8 + n) {
    throw FormatError("IDX label payload truncated", bytes.size());
  }
  if (bytes.size() > 8 + n) {
    throw FormatError("IDX label file has trailing bytes", 8 + n);
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t y = bytes[8 + i];
    if (y >= 10) {
      throw FormatError("label " + std::to_string(y) + " outside [0, 10)", 8 + i);
    }
    out[i] = y;
  }
  return out;
}

Dataset load_mnist_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  const auto image_bytes = read_file(image_path);
  const auto label_bytes = read_file(label_path);
  Dataset out;
  out.inputs = parse_idx_images(image_bytes);
  out.labels = parse_idx_labels(label_bytes);
  if (static_cast<std::size_t>(out.inputs.cols()) != out.labels.size()) {
    throw FormatError("label count " + std::to_string(out.labels.size()) + " does not match image count " +
                          std::to_string(out.inputs.cols()),
                      4);
  }
  return out;
}

DatasetSplit load_mnist_dir(const std::filesystem::path& dir) {
  DatasetSplit split;
  split.train = load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  split.test = load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  split.n_classes = 10;
  split.validate();
  return split;
}

DatasetSplit synthetic_blobs(std::size_t n, std::size_t dim, std::size_t n_classes, double spread, RngStream rng,
                             std::size_t n_test) {
  if (n_classes < 2 || dim == 0 || n == 0) {
    throw ParameterError("synthetic blobs need n >= 1, dim >= 1 and at least two classes");
  }
  if (n % n_classes != 0) {
    throw ParameterError("n must be divisible by the number of classes");
  }
  if (!(spread >= 0.0)) {
    throw ParameterError("spread must be non-negative");
  }
  if (n_test == 0) {
    n_test = (n / 4) / n_classes * n_classes;
  }

  PhiloxEngine centre_engine(rng.replicate(0));
  Eigen::MatrixXd centres(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n_classes));
  for (Eigen::Index c = 0; c < centres.cols(); ++c) {
    for (Eigen::Index j = 0; j < centres.rows(); ++j) {
      centres(j, c) = standard_normal(centre_engine);
    }
  }
  auto draw = [&](std::size_t count, RngStream stream) {
    PhiloxEngine engine(stream);
    Dataset part;
    part.inputs.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    part.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto y = static_cast<int>(i % n_classes);
      part.labels[i] = y;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dim); ++j) {
        part.inputs(j, static_cast<Eigen::Index>(i)) = centres(j, y) + spread * standard_normal(engine);
      }
    }
    return part;
  };

  DatasetSplit split;
  split.n_classes = n_classes;
  split.train = draw(n, rng.replicate(1));
  split.test = draw(n_test, rng.replicate(2));
  return split;
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, InitScheme init, RngStream rng)
    : sizes_(std::move(layer_sizes)), init_(init) {
  if (sizes_.size() < 2) {
    throw ParameterError("a network needs an input and an output layer");
  }
  for (std::size_t s : sizes_) {
    if (s == 0) {
      throw ParameterError("layer sizes must be positive");
    }
  }
  std::size_t total = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l - 1] + sizes_[l];
    scales_.push_back(init_ == InitScheme::kMeanField ? 1.0 / static_cast<double>(sizes_[l - 1]) : 1.0);
  }
  offsets_.push_back(total);
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));

  PhiloxEngine engine(rng);
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const double sd = init_ == InitScheme::kMeanField ? 1.0 : 1.0 / std::sqrt(static_cast<double>(sizes_[l - 1]));
    const std::size_t weights = sizes_[l] * sizes_[l - 1];
    for (std::size_t i = 0; i < weights; ++i) {
      params_(static_cast<Eigen::Index>(offsets_[l - 1] + i)) = sd * standard_normal(engine);
    }
  }
}

std::pair<std::size_t, std::size_t> MlpModel::layer_range(std::size_t l) const {
  if (l == 0 || l > depth()) {
    throw ParameterError("layer index must lie in [1, depth]");
  }
  return {offsets_[l - 1], offsets_[l] - offsets_[l - 1]};
}

Eigen::Map<const Eigen::MatrixXd> MlpModel::weights(std::size_t l) const {
  const auto [offset, count] = layer_range(l);
  return {params_.data() + offset, static_cast<Eigen::Index>(sizes_[l]), static_cast<Eigen::Index>(sizes_[l - 1])};
}

Eigen::Map<const Eigen::VectorXd> MlpModel::bias(std::size_t l) const {
  const auto [offset, count] = layer_range(l);
  return {params_.data() + offset + sizes_[l] * sizes_[l - 1], static_cast<Eigen::Index>(sizes_[l])};
}

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != sizes_.front()) {
    throw ShapeError("input dimension does not match the first layer");
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 1; l <= depth(); ++l) {
    Eigen::MatrixXd z = input_scale(l) * (weights(l) * a);
    z.colwise() += bias(l);
    a = l < depth() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

LossAndGradient forward_backward(const MlpModel& model, const Dataset& batch, LossKind loss) {
  const std::size_t B = batch.size();
  if (B == 0) {
    throw SizeError("forward_backward needs a non-empty batch");
  }
  const std::size_t L = model.depth();
  const std::size_t C = model.layer_sizes().back();

  std::vector<Eigen::MatrixXd> acts(L + 1);  // acts[l] = input to layer l + 1
  std::vector<Eigen::MatrixXd> pre(L + 1);
  acts[0] = batch.inputs;
  if (static_cast<std::size_t>(acts[0].rows()) != model.layer_sizes().front()) {
    throw ShapeError("input dimension does not match the first layer");
  }
  for (std::size_t l = 1; l <= L; ++l) {
    pre[l] = model.input_scale(l) * (model.weights(l) * acts[l - 1]);
    pre[l].colwise() += model.bias(l);
    if (l < L) {
      acts[l] = pre[l].cwiseMax(0.0);
    }
  }
  const Eigen::MatrixXd& scores = pre[L];

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(B));
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const int y = batch.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw ParameterError("label outside the output range");
    }
    if (loss == LossKind::kNll) {
      const double top = scores.col(col).maxCoeff();
      const Eigen::VectorXd e = (scores.col(col).array() - top).exp();
      const double z = e.sum();
      total += std::log(z) + top - scores(y, col);
      delta.col(col) = e / z;
      delta(y, col) -= 1.0;
    } else {
      const double weight = 1.0 / static_cast<double>(C - 1);
      for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(C); ++c) {
        if (c == y) {
          continue;
        }
        const double margin = 1.0 + scores(c, col) - scores(y, col);
        if (margin > 0.0) {
          total += weight * margin;
          delta(c, col) += weight;
          delta(y, col) -= weight;
        }
      }
    }
  }
  delta /= static_cast<double>(B);

  LossAndGradient out;
  out.loss = total / static_cast<double>(B);
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.parameter_count()));
  for (std::size_t l = L; l >= 1; --l) {
    const auto [offset, count] = model.layer_range(l);
    const auto rows = static_cast<Eigen::Index>(model.layer_sizes()[l]);
    const auto cols = static_cast<Eigen::Index>(model.layer_sizes()[l - 1]);
    Eigen::Map<Eigen::MatrixXd> gw(out.gradient.data() + offset, rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(out.gradient.data() + offset + rows * cols, rows);
    const double s = model.input_scale(l);
    gw.noalias() = s * (delta * acts[l - 1].transpose());
    gb = delta.rowwise().sum();
    if (l > 1) {
      Eigen::MatrixXd back = s * (model.weights(l).transpose() * delta);
      delta = (back.array() * relu_mask(pre[l - 1])).matrix();
    }
  }
  return out;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) {
    return 0.0;
  }
  constexpr std::size_t kChunk = 1000;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < data.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - first);
    const Eigen::MatrixXd scores =
        model.forward(data.inputs.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)));
    for (std::size_t i = 0; i < count; ++i) {
      Eigen::Index best = 0;
      scores.col(static_cast<Eigen::Index>(i)).maxCoeff(&best);
      if (best == data.labels[first + i]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double mean_loss(const MlpModel& model, const Dataset& data, LossKind loss) {
  return forward_backward(model, data, loss).loss;
}

GradientPool gradient_noise_pool(const MlpModel& model, const Dataset& data, std::size_t batch_size, LossKind loss,
                                 std::size_t threads) {
  const std::size_t n = data.size();
  if (batch_size == 0 || batch_size > n) {
    throw ParameterError("batch size must lie in [1, n]");
  }
  const std::size_t full_batches = n / batch_size;
  const std::size_t remainder = n - full_batches * batch_size;
  const std::size_t jobs = full_batches + (remainder > 0 ? 1 : 0);

  auto grads = run_replicates<LossAndGradient>(jobs, threads, [&](std::size_t i) {
    const std::size_t first = i * batch_size;
    return forward_backward(model, data.slice(first, std::min(batch_size, n - first)), loss);
  });

  GradientPool out;
  const auto d = static_cast<Eigen::Index>(model.parameter_count());
  out.full_gradient = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < jobs; ++i) {
    const auto weight = static_cast<double>(i < full_batches ? batch_size : remainder);
    out.full_gradient += weight * grads[i].gradient;
    out.loss += weight * grads[i].loss;
  }
  out.full_gradient /= static_cast<double>(n);
  out.loss /= static_cast<double>(n);

  out.noise.dim = model.parameter_count();
  out.noise.batches = full_batches;
  out.noise.values.resize(full_batches * out.noise.dim);
  for (std::size_t i = 0; i < full_batches; ++i) {
    Eigen::Map<Eigen::VectorXd> row(out.noise.values.data() + i * out.noise.dim, d);
    row = grads[i].gradient - out.full_gradient;
  }
  return out;
}

std::vector<LayerEstimate> layerwise_alpha(const NoisePool& pool, const MlpModel& model) {
  if (pool.dim != model.parameter_count()) {
    throw ShapeError("noise pool dimension does not match the model");
  }
  auto estimate = [](std::size_t layer, const std::vector<double>& values) {
    LayerEstimate est;
    est.layer = layer;
    est.samples = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double x) { return x != 0.0; }));
    try {
      est.alpha_hat = estimate_alpha(values).alpha_hat;
      est.reliable = est.samples >= kMinLayerSamples;
    } catch (const SizeError&) {
      est.reliable = false;
    } catch (const DegenerateInputError&) {
      est.reliable = false;
    }
    return est;
  };

  std::vector<LayerEstimate> out;
  out.push_back(estimate(0, pool.values));
  for (std::size_t l = 1; l <= model.depth(); ++l) {
    const auto [offset, count] = model.layer_range(l);
    std::vector<double> values;
    values.reserve(count * pool.batches);
    for (std::size_t i = 0; i < pool.batches; ++i) {
      const auto row = pool.row(i).subspan(offset, count);
      values.insert(values.end(), row.begin(), row.end());
    }
    out.push_back(estimate(l, values));
  }
  return out;
}

std::string TrainLogRow::csv_header(std::size_t depth) {
  std::string h = "iteration,train_acc,test_acc,loss,alpha_whole";
  for (std::size_t l = 1; l <= depth; ++l) {
    h += ",alpha_layer_" + std::to_string(l);
  }
  return h + ",c_st";
}

std::string TrainLogRow::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << iteration << ',' << train_acc << ',' << test_acc << ',' << loss << ',' << alpha_whole;
  for (double a : alpha_layers) {
    os << ',' << a;
  }
  os << ',';
  if (c_st) {
    os << *c_st;
  }
  return os.str();
}

TrainResult train_with_tail_logging(MlpModel& model, const DatasetSplit& data, const TrainOptions& options,
                                    RngStream rng) {
  data.validate();
  const std::size_t n = data.train.size();
  if (options.batch_size == 0 || options.batch_size > n) {
    throw ParameterError("batch size must lie in [1, n_train]");
  }
  if (!(options.eta > 0.0) || options.log_every == 0 || options.iterations == 0) {
    throw ParameterError("training needs eta > 0, log_every >= 1 and iterations >= 1");
  }
  if (options.inject_alpha) {
    validate_alpha(*options.inject_alpha);
  }

  PhiloxEngine shuffler(rng.replicate(0));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle before the first batch

  TrainResult result;
  std::size_t log_index = 0;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    if (it % options.log_every == 0) {
      auto pool = gradient_noise_pool(model, data.train, options.batch_size, options.loss, options.threads);
      if (options.inject_alpha) {
        PhiloxEngine engine(rng.replicate(static_cast<std::uint32_t>(2 * log_index + 1)));
        const StableSampler draw(*options.inject_alpha);
        for (auto& x : pool.noise.values) {
          x = draw(engine);
        }
      }
      TrainLogRow row;
      row.iteration = it;
      row.loss = pool.loss;
      row.train_acc = accuracy(model, data.train);
      row.test_acc = accuracy(model, data.test);
      const auto layers = layerwise_alpha(pool.noise, model);
      row.alpha_whole = layers[0].alpha_hat;
      for (std::size_t l = 1; l < layers.size(); ++l) {
        row.alpha_layers.push_back(layers[l].alpha_hat);
      }
      if (options.stability_check && pool.noise.values.size() >= kMinStabilitySamples) {
        row.c_st = stability_condition(pool.noise.values, rng.replicate(static_cast<std::uint32_t>(2 * log_index + 2)))
                       .c_st;
      }
      result.log.push_back(row);
      ++log_index;
      if (!std::isfinite(row.loss)) {
        result.diverged = true;
        break;
      }
      if (options.stop_at_full_accuracy && row.train_acc == 1.0) {
        break;
      }
    }

    if (cursor + options.batch_size > n) {
      std::shuffle(order.begin(), order.end(), shuffler);
      cursor = 0;
    }
    const auto batch = data.train.gather(std::span<const std::size_t>(order).subspan(cursor, options.batch_size));
    cursor += options.batch_size;
    const auto step = forward_backward(model, batch, options.loss);
    if (!std::isfinite(step.loss) || !step.gradient.allFinite()) {
      result.diverged = true;
      result.iterations_run = it + 1;
      break;
    }
    model.params() -= options.eta * step.gradient;
    result.iterations_run = it + 1;
  }
  return result;
}

std::string SweepResult::cell_csv_header() {
  return "width,depth,batch_size,eta,eta_over_b,test_error,alpha_hat,diverged";
}

std::string SweepResult::group_csv_header() { return "eta_over_b,cells,test_error,alpha_hat,diverged"; }

SweepResult noise_scale_sweep(const SweepGrid& grid, const DatasetSplit& data, InitScheme init,
                              const TrainOptions& base, RngStream rng) {
  if (grid.widths.empty() || grid.depths.empty() || grid.batch_sizes.empty() || grid.etas.empty()) {
    throw ParameterError("sweep grid must be non-empty in every axis");
  }
  data.validate();
  SweepResult result;
  std::uint32_t cell_index = 0;
  for (std::size_t width : grid.widths) {
    for (std::size_t depth : grid.depths) {
      if (depth < 1) {
        throw ParameterError("depth must be at least 1");
      }
      for (std::size_t b : grid.batch_sizes) {
        for (double eta : grid.etas) {
          std::vector<std::size_t> sizes = {data.train.input_dim()};
          for (std::size_t h = 1; h < depth; ++h) {
            sizes.push_back(width);
          }
          sizes.push_back(data.n_classes);
          MlpModel model(sizes, init, rng.replicate(2 * cell_index));
          TrainOptions opts = base;
          opts.batch_size = b;
          opts.eta = eta;
          const auto run = train_with_tail_logging(model, data, opts, rng.replicate(2 * cell_index + 1));
          ++cell_index;

          SweepCell cell;
          cell.width = width;
          cell.depth = depth;
          cell.batch_size = b;
          cell.eta = eta;
          cell.eta_over_b = eta / static_cast<double>(b);
          cell.diverged = run.diverged;
          const auto& last = run.log.back();
          cell.test_error = 1.0 - last.test_acc;
          cell.alpha_hat = last.alpha_whole;
          result.cells.push_back(cell);
        }
      }
    }
  }

  std::vector<const SweepCell*> sorted;
  for (const auto& c : result.cells) {
    sorted.push_back(&c);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepCell* a, const SweepCell* b) { return a->eta_over_b < b->eta_over_b; });
  for (const SweepCell* c : sorted) {
    const bool same = !result.groups.empty() &&
                      std::abs(result.groups.back().eta_over_b - c->eta_over_b) <= 1e-9 * c->eta_over_b;
    if (!same) {
      result.groups.push_back({c->eta_over_b, 0, 0.0, 0.0, 0});
    }
    auto& g = result.groups.back();
    ++g.cells;
    if (c->diverged) {
      ++g.diverged;
      continue;
    }
    const auto kept = static_cast<double>(g.cells - g.diverged);
    g.test_error += (c->test_error - g.test_error) / kept;
    g.alpha_hat += (c->alpha_hat - g.alpha_hat) / kept;
  }
  return result;
}

}  // namespace htsgd
