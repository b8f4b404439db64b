#pragma once

// Two cross-reconstruction networks over a mixed-type table:
//   numeric -> categorical (sigmoid output, BCE) whose latent layer gives z_num
//   categorical -> numeric (linear output, MSE) whose latent layer gives z_cat
// Z = [z_num, z_cat]. Sensitive columns are never fed to either network.

#include "fairmix/dataset.hpp"
#include "fairmix/neuralnet.hpp"
#include "fairmix/types.hpp"

#include <cstdint>
#include <vector>

namespace fairmix {

struct MixedEncoderConfig {
  int hidden_num_cat = 3;  // k1: hidden layers of the numeric -> categorical network, latent included
  int hidden_cat_num = 3;  // k2
  Index latent_num = 50;   // d_kappa1
  Index latent_cat = 50;   // d_kappa2
  TrainOptions training;   // epochs, batch size, validation fraction, Adam
  std::uint64_t seed = 0;
  bool parallel = false;   // train the two networks on separate threads

  Index p() const { return latent_num + latent_cat; }
  void validate() const;

  /// Even split of the concatenated dimension (the numeric side gets the odd unit).
  static MixedEncoderConfig with_dimension(Index p, int k1, int k2);
};

/// Rounded geometric interpolation input -> latent -> output over
/// `hidden_layers` hidden layers, the latent sitting at hidden position
/// (hidden_layers + 1) / 2.
MlpConfig interpolate_network(Index input, Index latent, Index output, int hidden_layers, Activation output_activation);

MlpConfig build_num_cat(Index d1, Index d2, const MixedEncoderConfig& config);
MlpConfig build_cat_num(Index d2, Index d1, const MixedEncoderConfig& config);

struct MixedEncoder {
  MlpParams num_cat;
  MlpParams cat_num;
  TrainHistory history_num_cat;
  TrainHistory history_cat_num;
};

MixedEncoder train_mixed(const EncodedDataset& dataset, const MixedEncoderConfig& config);

/// Post-activation values of the network's latent layer.
Matrix extract_latent(const MlpParams& params, const Matrix& x);

struct MixedRepresentation {
  Matrix z;  // n x p, z_num columns first
  Index latent_num = 0;
  Index latent_cat = 0;

  Index p() const { return z.cols(); }
};

MixedRepresentation concatenate_latents(const Matrix& z_num, const Matrix& z_cat);

/// Latent codes of both networks for every row of `dataset`.
MixedRepresentation embed(const MixedEncoder& encoder, const EncodedDataset& dataset);

}  // namespace fairmix
