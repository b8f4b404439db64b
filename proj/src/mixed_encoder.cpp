#include "fairmix/mixed_encoder.hpp"

#include "fairmix/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace fairmix {

void MixedEncoderConfig::validate() const {
  if (hidden_num_cat < 1 || hidden_cat_num < 1) throw std::invalid_argument("mixed encoder: k1 and k2 must be >= 1");
  if (latent_num < 1 || latent_cat < 1) throw std::invalid_argument("mixed encoder: latent dimensions must be >= 1");
}

MixedEncoderConfig MixedEncoderConfig::with_dimension(Index p, int k1, int k2) {
  if (p < 2) throw std::invalid_argument("mixed encoder: p must be >= 2");
  MixedEncoderConfig c;
  c.hidden_num_cat = k1;
  c.hidden_cat_num = k2;
  c.latent_cat = p / 2;
  c.latent_num = p - c.latent_cat;
  return c;
}

MlpConfig interpolate_network(Index input, Index latent, Index output, int hidden_layers, Activation output_activation) {
  if (hidden_layers < 1) throw std::invalid_argument("network needs at least one hidden layer");
  if (input < 1 || latent < 1 || output < 1) throw std::invalid_argument("network widths must be >= 1");
  const Index latent_pos = (hidden_layers + 1) / 2;
  const Index last = hidden_layers + 1;

  const auto geometric = [](Index from, Index to, double t) {
    const double w = static_cast<double>(from) * std::pow(static_cast<double>(to) / static_cast<double>(from), t);
    return std::max<Index>(1, static_cast<Index>(std::llround(w)));
  };

  MlpConfig config;
  config.widths.resize(static_cast<std::size_t>(last + 1));
  config.widths.front() = input;
  config.widths.back() = output;
  for (Index i = 1; i < last; ++i) {
    if (i < latent_pos) {
      config.widths[static_cast<std::size_t>(i)] =
          geometric(input, latent, static_cast<double>(i) / static_cast<double>(latent_pos));
    } else if (i == latent_pos) {
      config.widths[static_cast<std::size_t>(i)] = latent;
    } else {
      config.widths[static_cast<std::size_t>(i)] =
          geometric(latent, output, static_cast<double>(i - latent_pos) / static_cast<double>(last - latent_pos));
    }
  }
  config.hidden = Activation::relu;
  config.output = output_activation;
  config.latent_layer = latent_pos;
  config.validate();
  return config;
}

MlpConfig build_num_cat(Index d1, Index d2, const MixedEncoderConfig& config) {
  config.validate();
  return interpolate_network(d1, config.latent_num, d2, config.hidden_num_cat, Activation::sigmoid);
}

MlpConfig build_cat_num(Index d2, Index d1, const MixedEncoderConfig& config) {
  config.validate();
  return interpolate_network(d2, config.latent_cat, d1, config.hidden_cat_num, Activation::linear);
}

MixedEncoder train_mixed(const EncodedDataset& dataset, const MixedEncoderConfig& config) {
  config.validate();
  if (dataset.n() < 2 || dataset.d1() < 1 || dataset.d2() < 1) {
    throw std::invalid_argument("train_mixed: dataset needs rows and both numeric and categorical columns");
  }
  const MlpConfig nc = build_num_cat(dataset.d1(), dataset.d2(), config);
  const MlpConfig cn = build_cat_num(dataset.d2(), dataset.d1(), config);

  TrainOptions nc_options = config.training;
  nc_options.seed = derive_seed(config.seed, 100);
  TrainOptions cn_options = config.training;
  cn_options.seed = derive_seed(config.seed, 200);

  // Only X_num and X_cat are ever handed to a network; S stays out.
  TrainResult nc_result;
  TrainResult cn_result;
  if (config.parallel) {
    std::exception_ptr failure;
    std::thread worker([&] {
      try {
        nc_result = train(nc, dataset.x_num, dataset.x_cat, nc_options);
      } catch (...) {
        failure = std::current_exception();
      }
    });
    try {
      cn_result = train(cn, dataset.x_cat, dataset.x_num, cn_options);
    } catch (...) {
      worker.join();
      throw;
    }
    worker.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    nc_result = train(nc, dataset.x_num, dataset.x_cat, nc_options);
    cn_result = train(cn, dataset.x_cat, dataset.x_num, cn_options);
  }
  return {std::move(nc_result.params), std::move(cn_result.params), std::move(nc_result.history),
          std::move(cn_result.history)};
}

Matrix extract_latent(const MlpParams& params, const Matrix& x) {
  return activations_at(params, x, params.config.latent_layer);
}

MixedRepresentation concatenate_latents(const Matrix& z_num, const Matrix& z_cat) {
  if (z_num.rows() != z_cat.rows()) {
    throw std::invalid_argument("concatenate_latents: row counts differ (" + std::to_string(z_num.rows()) + " vs " +
                                std::to_string(z_cat.rows()) + ")");
  }
  MixedRepresentation rep;
  rep.z.resize(z_num.rows(), z_num.cols() + z_cat.cols());
  rep.z << z_num, z_cat;
  rep.latent_num = z_num.cols();
  rep.latent_cat = z_cat.cols();
  return rep;
}

MixedRepresentation embed(const MixedEncoder& encoder, const EncodedDataset& dataset) {
  return concatenate_latents(extract_latent(encoder.num_cat, dataset.x_num),
                             extract_latent(encoder.cat_num, dataset.x_cat));
}

}  // namespace fairmix
