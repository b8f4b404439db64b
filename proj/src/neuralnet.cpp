#include "fairmix/neuralnet.hpp"

#include "fairmix/io.hpp"
#include "fairmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fairmix {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::relu;
  if (text == "sigmoid") return Activation::sigmoid;
  if (text == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + text + "'");
}

std::string to_string(LossKind k) { return k == LossKind::bce ? "bce" : "mse"; }

void MlpConfig::validate() const {
  if (widths.size() < 3) throw std::invalid_argument("MlpConfig: need at least 3 layers (input, latent, output)");
  for (const Index w : widths) {
    if (w < 1) throw std::invalid_argument("MlpConfig: layer widths must be >= 1");
  }
  if (latent_layer <= 0 || latent_layer >= static_cast<Index>(widths.size()) - 1) {
    throw std::invalid_argument("MlpConfig: latent_layer must be a hidden layer index");
  }
  if (hidden != Activation::relu) throw std::invalid_argument("MlpConfig: hidden activation must be relu");
  if (output == Activation::relu) throw std::invalid_argument("MlpConfig: output activation must be sigmoid or linear");
}

LossKind MlpConfig::loss() const { return output == Activation::sigmoid ? LossKind::bce : LossKind::mse; }

std::size_t MlpParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return total;
}

bool MlpParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const DenseLayer& l) { return l.weights.allFinite() && l.bias.allFinite(); });
}

MlpParams init_params(const MlpConfig& config, std::uint64_t seed) {
  config.validate();
  MlpParams params;
  params.config = config;
  Rng rng(seed);
  for (Index l = 0; l < config.layer_count(); ++l) {
    const Index fan_in = config.widths[static_cast<std::size_t>(l)];
    const Index fan_out = config.widths[static_cast<std::size_t>(l + 1)];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
    for (Index i = 0; i < fan_in; ++i) {
      for (Index j = 0; j < fan_out; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

void apply_activation(Activation a, const Matrix& pre, Matrix& post) {
  switch (a) {
    case Activation::relu: post = pre.cwiseMax(0.0); break;
    case Activation::linear: post = pre; break;
    case Activation::sigmoid:
      post = pre.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
      break;
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

ForwardCache forward(const MlpParams& params, const Matrix& x) {
  if (x.cols() != params.config.input_width()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                                std::to_string(params.config.input_width()));
  }
  if (!x.allFinite()) throw std::invalid_argument("forward: input has non-finite entries");
  const auto layers = static_cast<std::size_t>(params.config.layer_count());
  ForwardCache cache;
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const DenseLayer& layer = params.layers[l];
    cache.pre[l].noalias() = cache.post[l] * layer.weights;
    cache.pre[l].rowwise() += layer.bias;
    const Activation a = l + 1 == layers ? params.config.output : params.config.hidden;
    apply_activation(a, cache.pre[l], cache.post[l + 1]);
  }
  return cache;
}

Matrix predict(const MlpParams& params, const Matrix& x) { return forward(params, x).output(); }

Matrix activations_at(const MlpParams& params, const Matrix& x, Index layer) {
  if (layer < 0 || layer > params.config.layer_count()) throw std::invalid_argument("activations_at: bad layer index");
  if (x.cols() != params.config.input_width()) {
    throw std::invalid_argument("activations_at: input has " + std::to_string(x.cols()) + " columns, network expects " +
                                std::to_string(params.config.input_width()));
  }
  Matrix a = x;
  Matrix pre;
  for (Index l = 0; l < layer; ++l) {
    const DenseLayer& dense = params.layers[static_cast<std::size_t>(l)];
    pre.noalias() = a * dense.weights;
    pre.rowwise() += dense.bias;
    apply_activation(l + 1 == params.config.layer_count() ? params.config.output : params.config.hidden, pre, a);
  }
  return a;
}

double bce_loss(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "bce_loss");
  if (pred.size() == 0) throw std::invalid_argument("bce_loss: empty input");
  double total = 0.0;
  for (Index j = 0; j < pred.cols(); ++j) {
    for (Index i = 0; i < pred.rows(); ++i) {
      const double p = std::clamp(pred(i, j), kBceClamp, 1.0 - kBceClamp);
      const double t = target(i, j);
      total -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
    }
  }
  return total / static_cast<double>(pred.size());
}

double mse_loss(const Matrix& pred, const Matrix& target) {
  check_same_shape(pred, target, "mse_loss");
  if (pred.size() == 0) throw std::invalid_argument("mse_loss: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double loss_value(LossKind kind, const Matrix& pred, const Matrix& target) {
  return kind == LossKind::bce ? bce_loss(pred, target) : mse_loss(pred, target);
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& target, LossKind loss) {
  if (loss != params.config.loss()) {
    throw std::invalid_argument("backward: loss " + to_string(loss) + " does not match output activation " +
                                to_string(params.config.output));
  }
  const Matrix& out = cache.output();
  check_same_shape(out, target, "backward");
  const double scale = 1.0 / static_cast<double>(out.size());

  // sigmoid + BCE and linear + MSE both reduce to a residual at the output.
  Matrix delta = (out - target) * (loss == LossKind::bce ? scale : 2.0 * scale);

  const auto layers = params.layers.size();
  Gradients grads(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grads[l].weights.noalias() = cache.post[l].transpose() * delta;
    grads[l].bias = delta.colwise().sum();
    if (l == 0) break;
    Matrix upstream;
    upstream.noalias() = delta * params.layers[l].weights.transpose();
    delta = upstream.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

AdamState AdamState::zeros_like(const MlpParams& params, const AdamOptions& options) {
  AdamState state;
  state.options = options;
  for (const auto& l : params.layers) {
    state.first.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), RowVector::Zero(l.bias.size())});
  }
  state.second = state.first;
  return state;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state) {
  if (grads.size() != params.layers.size() || state.first.size() != params.layers.size()) {
    throw std::invalid_argument("adam_step: layer count mismatch");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));

  const auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    m = o.beta1 * m + (1.0 - o.beta1) * grad;
    v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseAbs2();
    param.array() -= o.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + o.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads[l].weights, state.first[l].weights, state.second[l].weights);
    update(params.layers[l].bias, grads[l].bias, state.first[l].bias, state.second[l].bias);
  }
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < train_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(train_loss[e]) + "," +
           (e < val_loss.size() ? format_double(val_loss[e]) : std::string()) + "\n";
  }
  return out;
}

TrainResult train(const MlpConfig& config, const Matrix& x, const Matrix& y, const TrainOptions& options) {
  config.validate();
  if (x.rows() != y.rows()) throw std::invalid_argument("train: input and target row counts differ");
  if (x.cols() != config.input_width() || y.cols() != config.output_width()) {
    throw std::invalid_argument("train: data widths do not match the network");
  }
  if (!(options.val_fraction >= 0.0 && options.val_fraction < 1.0)) {
    throw std::invalid_argument("train: val_fraction must lie in [0, 1)");
  }
  if (options.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");

  TrainResult result{init_params(config, derive_seed(options.seed, 0)), {}};
  if (options.epochs == 0) return result;

  Rng rng(derive_seed(options.seed, 1));
  std::vector<Index> order = [&] {
    auto idx = iota_indices(static_cast<std::size_t>(x.rows()));
    return std::vector<Index>(idx.begin(), idx.end());
  }();
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(std::llround(options.val_fraction * static_cast<double>(x.rows())));
  std::vector<Index> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  if (options.batch_size < 1 || options.batch_size > static_cast<Index>(train_rows.size())) {
    throw std::invalid_argument("train: batch_size " + std::to_string(options.batch_size) + " exceeds " +
                                std::to_string(train_rows.size()) + " training rows");
  }

  const Matrix x_val = x(val_rows, Eigen::all);
  const Matrix y_val = y(val_rows, Eigen::all);
  const LossKind loss = config.loss();
  AdamState state = AdamState::zeros_like(result.params, options.adam);

  std::vector<Index> batch;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(train_rows);
    double weighted = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop = std::min(train_rows.size(), start + static_cast<std::size_t>(options.batch_size));
      batch.assign(train_rows.begin() + static_cast<std::ptrdiff_t>(start),
                   train_rows.begin() + static_cast<std::ptrdiff_t>(stop));
      const Matrix xb = x(batch, Eigen::all);
      const Matrix yb = y(batch, Eigen::all);
      const ForwardCache cache = forward(result.params, xb);
      const double batch_loss = loss_value(loss, cache.output(), yb);
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", batch starting at row " + std::to_string(start));
      }
      weighted += batch_loss * static_cast<double>(stop - start);
      adam_step(result.params, backward(result.params, cache, yb, loss), state);
    }
    result.history.train_loss.push_back(weighted / static_cast<double>(train_rows.size()));
    if (!val_rows.empty()) {
      const double v = loss_value(loss, predict(result.params, x_val), y_val);
      if (!std::isfinite(v)) {
        throw NumericalError("training diverged: non-finite validation loss at epoch " + std::to_string(epoch + 1));
      }
      result.history.val_loss.push_back(v);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Persistence: key-value header, an `end_header` line, then per layer the
// weight matrix and the bias as a 1 x fan_out matrix.

void write_params(std::ostream& out, const MlpParams& params) {
  KeyValues kv;
  kv.set("format_version", kFormatVersion);
  std::string widths;
  for (std::size_t i = 0; i < params.config.widths.size(); ++i) {
    if (i) widths.push_back(' ');
    widths += std::to_string(params.config.widths[i]);
  }
  kv.set("widths", widths);
  kv.set("hidden_activation", to_string(params.config.hidden));
  kv.set("output_activation", to_string(params.config.output));
  kv.set("latent_layer", static_cast<long long>(params.config.latent_layer));
  out << kv.to_string() << "end_header\n";
  for (const auto& layer : params.layers) {
    write_matrix(out, layer.weights);
    write_matrix(out, Matrix(layer.bias));
  }
}

MlpParams read_params(std::istream& in, const std::string& source) {
  std::string header;
  std::string line;
  bool closed = false;
  while (std::getline(in, line)) {
    if (trim(line) == "end_header") {
      closed = true;
      break;
    }
    header += line + "\n";
  }
  if (!closed) throw DataError(source + ": missing end_header line");
  const KeyValues kv = KeyValues::parse(header, source);
  if (kv.get("format_version") != std::to_string(kFormatVersion)) {
    throw DataError(source + ": unsupported model format_version");
  }
  MlpParams params;
  for (const auto& tok : split(kv.get("widths"), ' ')) {
    if (!trim(tok).empty()) params.config.widths.push_back(static_cast<Index>(parse_integer(tok, source + ": widths")));
  }
  params.config.hidden = parse_activation(kv.get("hidden_activation"));
  params.config.output = parse_activation(kv.get("output_activation"));
  params.config.latent_layer = static_cast<Index>(kv.get_int("latent_layer"));
  params.config.validate();
  for (Index l = 0; l < params.config.layer_count(); ++l) {
    Matrix w = read_matrix(in, source);
    Matrix b = read_matrix(in, source);
    const Index fan_in = params.config.widths[static_cast<std::size_t>(l)];
    const Index fan_out = params.config.widths[static_cast<std::size_t>(l + 1)];
    if (w.rows() != fan_in || w.cols() != fan_out || b.rows() != 1 || b.cols() != fan_out) {
      throw DataError(source + ": layer " + std::to_string(l) + " shape does not match widths");
    }
    params.layers.push_back({std::move(w), RowVector(b.row(0))});
  }
  return params;
}

void save_params(const std::filesystem::path& path, const MlpParams& params) {
  std::ostringstream out;
  write_params(out, params);
  write_file(path, out.str());
}

MlpParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_params(in, path.string());
}

}  // namespace fairmix
