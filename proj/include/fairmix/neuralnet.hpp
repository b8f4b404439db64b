#pragma once

// Small dense feed-forward networks: rows of a batch matrix are samples,
// layer l computes act(A W_l + b_l) with W_l stored in x out.

#include "fairmix/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fairmix {

enum class Activation { relu, sigmoid, linear };
enum class LossKind { bce, mse };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);
std::string to_string(LossKind k);

struct MlpConfig {
  std::vector<Index> widths;  // input, hidden..., output
  Activation hidden = Activation::relu;
  Activation output = Activation::sigmoid;
  Index latent_layer = 1;  // index into widths; the encoder output

  void validate() const;
  Index layer_count() const { return static_cast<Index>(widths.size()) - 1; }
  Index input_width() const { return widths.front(); }
  Index output_width() const { return widths.back(); }
  /// Loss paired with the output activation: sigmoid -> BCE, linear -> MSE.
  LossKind loss() const;

  bool operator==(const MlpConfig&) const = default;
};

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // fan_out
};

struct MlpParams {
  MlpConfig config;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_params(const MlpConfig& config, std::uint64_t seed);

struct ForwardCache {
  std::vector<Matrix> pre;   // pre[l]: pre-activation of layer l
  std::vector<Matrix> post;  // post[0] is the input, post[l + 1] = act(pre[l])

  const Matrix& output() const { return post.back(); }
};

ForwardCache forward(const MlpParams& params, const Matrix& x);
Matrix predict(const MlpParams& params, const Matrix& x);

/// Post-activation values at `layer` (an index into config.widths).
Matrix activations_at(const MlpParams& params, const Matrix& x, Index layer);

inline constexpr double kBceClamp = 1e-12;

/// Mean over all entries of -[t ln p + (1 - t) ln(1 - p)], p clamped to [1e-12, 1 - 1e-12].
double bce_loss(const Matrix& pred, const Matrix& target);
/// Mean over all entries of (p - t)^2.
double mse_loss(const Matrix& pred, const Matrix& target);
double loss_value(LossKind kind, const Matrix& pred, const Matrix& target);

using Gradients = std::vector<DenseLayer>;

/// Exact gradient of the mean loss with respect to every weight and bias.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& target, LossKind loss);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  long long step = 0;
  std::vector<DenseLayer> first;   // m
  std::vector<DenseLayer> second;  // v

  static AdamState zeros_like(const MlpParams& params, const AdamOptions& options = {});
};

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state);

struct TrainOptions {
  int epochs = 100;
  Index batch_size = 64;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  AdamOptions adam;
};

/// Per-epoch losses. val_loss is empty when training ran without a
/// validation split.
struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;

  std::size_t epochs() const { return train_loss.size(); }
  /// CSV with header epoch,train_loss,val_loss (epochs numbered from 1).
  std::string to_csv() const;
};

struct TrainResult {
  MlpParams params;
  TrainHistory history;
};

/// Mini-batch Adam. Validation rows are drawn once before the first epoch
/// and never trained on; training rows are reshuffled every epoch.
TrainResult train(const MlpConfig& config, const Matrix& x, const Matrix& y, const TrainOptions& options);

void write_params(std::ostream& out, const MlpParams& params);
MlpParams read_params(std::istream& in, const std::string& source = "<stream>");
void save_params(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_params(const std::filesystem::path& path);

}  // namespace fairmix
