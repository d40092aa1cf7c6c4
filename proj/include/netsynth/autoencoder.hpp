#pragma once

// Deterministic mixed-type autoencoder: separate numeric and categorical
// encoder branches joined by a shared trunk, a linear latent projection, and a
// decoder ending in typed heads.

#include <cstdint>
#include <vector>

#include "netsynth/common.hpp"
#include "netsynth/dataio.hpp"
#include "netsynth/heads.hpp"

namespace netsynth {

struct AEConfig {
    std::vector<std::size_t> numeric_widths{64, 32};
    std::vector<std::size_t> categorical_widths{32, 16};
    std::size_t shared_width = 32;
    std::vector<std::size_t> decoder_widths{32, 64};
    std::size_t latent_dim = 0;  // 0 picks ceil(features / 4)
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    bool stochastic_decode = false;
};

struct AEModel {
    TableSchema schema;  // encoded schema the model was built for
    AEConfig config;
    DenseNet numeric_branch;      // empty when the schema has no continuous features
    DenseNet categorical_branch;  // empty when the schema has no discrete features
    DenseNet encoder_trunk;       // shared layer + linear latent projection
    DenseNet decoder;             // trunk + linear logit layer for the heads
    MixedHeads heads;
    RowVector latent_mean;
    RowVector latent_std;

    std::size_t latent_dim() const { return config.latent_dim; }
    bool latent_fitted() const { return latent_std.size() > 0; }
};

std::size_t default_latent_dim(const TableSchema& schema);

AEModel build_ae(const TableSchema& schema, AEConfig config, std::uint64_t seed);

struct TrainCurve {
    std::vector<double> train_loss;
    std::vector<double> val_loss;  // empty without validation data
};

/// Mini-batch Adam on the reconstruction loss. Returns per-epoch losses; the
/// model keeps the final-epoch parameters.
TrainCurve train_ae(AEModel& model, const Dataset& train, const Dataset* val, std::uint64_t seed);

Matrix encode(const AEModel& model, const Dataset& data);
/// Encoder on a relaxed matrix (continuous columns, then one-hot blocks).
Matrix encode_relaxed(const AEModel& model, const Matrix& relaxed);

/// Head outputs (continuous values and probabilities) for latent rows.
Matrix decode_outputs(const AEModel& model, const Matrix& latents);
/// Encoded dataset for latent rows; stochastic decoding follows the config.
Dataset decode(const AEModel& model, const Matrix& latents, Rng* rng = nullptr);

/// Reconstruction loss of the full autoencoder on a batch, with the gradient of
/// every parameter flattened in ae_parameters order.
double ae_batch_gradient(AEModel& model, const Matrix& relaxed, const Matrix& cells, std::vector<double>& grads);
ParameterSet ae_parameters(AEModel& model);

void fit_latent_norm(AEModel& model, const Dataset& train);
Matrix normalize_latents(const AEModel& model, const Matrix& latents);
Matrix denormalize_latents(const AEModel& model, const Matrix& latents);

void to_json(json& j, const AEConfig& c);
void from_json(const json& j, AEConfig& c);
void to_json(json& j, const AEModel& m);
void from_json(const json& j, AEModel& m);

}  // namespace netsynth
