#pragma once

// Class-specific synthesizers behind one interface: SMOTE, VAE, GAN,
// data-space diffusion and latent diffusion. Every generator is fitted on the
// encoded rows of a single class and samples encoded rows of the same schema.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "netsynth/autoencoder.hpp"
#include "netsynth/common.hpp"
#include "netsynth/dataio.hpp"
#include "netsynth/diffusion.hpp"
#include "netsynth/heads.hpp"

namespace netsynth {

enum class Variant { smote, vae, gan, dm, ldm };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
const std::vector<Variant>& all_variants();

/// "default" plus the named attack presets.
const std::vector<std::string>& preset_names();

struct SmoteConfig {
    std::size_t k = 5;
    double hamming_weight = 1.0;
};

struct VaeConfig {
    std::vector<std::size_t> encoder_widths{128, 64};
    std::vector<std::size_t> decoder_widths{64, 128};
    std::size_t latent_dim = 0;  // 0 picks ceil(features / 4)
    double kl_weight = 1e-2;
    double clip_norm = 1.0;
    double learning_rate = 1e-3;
    std::size_t epochs = 300;
    std::size_t batch_size = 128;
    bool stochastic_decode = true;
};

struct GanConfig {
    std::vector<std::size_t> generator_widths{128, 128};
    std::vector<std::size_t> discriminator_widths{128, 128};
    std::size_t noise_dim = 0;  // 0 picks ceil(features / 4)
    double generator_lr = 1e-3;
    double discriminator_lr = 1e-3;
    double beta1 = 0.5;
    double real_label = 0.9;
    std::size_t epochs = 300;
    std::size_t batch_size = 128;
    bool train_generator = true;  // false freezes the generator at its initialization
    bool stochastic_decode = true;
};

struct DmConfig {
    std::size_t steps = 200;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    DenoiserConfig denoiser;
    DiffusionTrainConfig train;
};

struct LdmConfig {
    AEConfig ae;
    DmConfig diffusion;

    LdmConfig() { diffusion.denoiser.parameterization = Parameterization::predict_clean; }
};

struct GenConfig {
    Variant variant = Variant::ldm;
    std::string preset = "default";
    SmoteConfig smote;
    VaeConfig vae;
    GanConfig gan;
    DmConfig dm;
    LdmConfig ldm;
};

/// Config for a variant with the preset's hyperparameters applied and every
/// data-dependent size resolved against the schema.
GenConfig resolve_config(Variant variant, const std::string& preset, const TableSchema& schema);
/// Fills the data-dependent sizes still set to 0 and checks all dimensions.
void finalize_config(GenConfig& config, const TableSchema& schema);

// ------------------------------------------------------------ fitted models ----

struct SmoteModel {
    Matrix cells;                                 // encoded training rows
    std::vector<std::vector<std::size_t>> neighbors;  // k nearest, nearest first
};

struct VaeModel {
    DenseNet encoder;  // relaxed row -> [mean | log variance]
    DenseNet decoder;  // latent -> head logits
    MixedHeads heads;
    std::size_t latent_dim = 0;
};

struct GanModel {
    DenseNet generator;      // noise -> head logits
    DenseNet discriminator;  // relaxed row -> probability of being real
    MixedHeads heads;
    std::size_t noise_dim = 0;
};

struct DmModel {
    DiffusionSchedule schedule;
    Denoiser denoiser;  // over the relaxed layout
};

struct LdmModel {
    AEModel ae;
    DiffusionSchedule schedule;
    Denoiser denoiser;  // over normalized latents
};

using GeneratorModel = std::variant<SmoteModel, VaeModel, GanModel, DmModel, LdmModel>;

struct Provenance {
    Variant variant = Variant::ldm;
    std::string preset = "default";
    std::uint64_t fit_seed = 0;
    std::uint64_t fit_fingerprint = 0;
    std::size_t fit_rows = 0;
};

struct FitReport {
    std::vector<double> loss;                // per epoch; empty for SMOTE
    std::vector<double> autoencoder_loss;    // LDM only
    std::vector<double> discriminator_loss;  // GAN only
    std::vector<std::string> warnings;
    double seconds = 0.0;  // wall clock; not stored in containers
};

struct Generator {
    GenConfig config;
    TableSchema schema;  // encoded schema of the fit data
    std::optional<int> class_label;
    std::optional<PreprocessState> preprocess;
    Provenance provenance;
    GeneratorModel model;
    FitReport report;

    Variant variant() const { return config.variant; }
};

struct SyntheticBatch {
    Dataset data;  // encoded rows
    Provenance provenance;
    std::uint64_t sample_seed = 0;
};

/// Order-sensitive hash of the encoded rows and feature schema (labels ignored).
std::uint64_t data_fingerprint(const Dataset& data);

/// Fits the configured variant on encoded rows of one class. Labeled input
/// must carry a single label, which the samples inherit.
Generator fit_generator(const Dataset& train, GenConfig config, std::uint64_t seed);

SmoteModel smote_fit(const Dataset& train, const SmoteConfig& config);
Matrix smote_sample(const SmoteModel& model, const TableSchema& schema, const SmoteConfig& config, std::size_t n,
                    std::uint64_t seed);

VaeModel vae_fit(const Dataset& train, const VaeConfig& config, std::uint64_t seed, FitReport* report = nullptr);
Matrix vae_sample(const VaeModel& model, const VaeConfig& config, std::size_t n, std::uint64_t seed);

GanModel gan_fit(const Dataset& train, const GanConfig& config, std::uint64_t seed, FitReport* report = nullptr);
Matrix gan_sample(const GanModel& model, const GanConfig& config, std::size_t n, std::uint64_t seed);
/// Share of real rows scored above 0.5 and generated rows at or below it.
double discriminator_accuracy(const GanModel& model, const Matrix& real_relaxed, std::size_t n_fake, std::uint64_t seed);

DmModel dm_fit(const Dataset& train, const DmConfig& config, std::uint64_t seed, FitReport* report = nullptr);
/// Relaxed rows from the reverse chain, before snapping.
Matrix dm_sample_relaxed(const DmModel& model, std::size_t n, std::uint64_t seed);
Matrix dm_sample(const DmModel& model, const TableSchema& schema, std::size_t n, std::uint64_t seed);

LdmModel ldm_fit(const Dataset& train, const LdmConfig& config, std::uint64_t seed, FitReport* report = nullptr);
Matrix ldm_sample(const LdmModel& model, std::size_t n, std::uint64_t seed);

/// Encoded synthetic rows; n = 0 gives an empty batch.
SyntheticBatch generate(const Generator& gen, std::size_t n, std::uint64_t seed);
/// Synthetic rows mapped back to raw units; requires a stored PreprocessState.
Dataset to_raw(const Generator& gen, const SyntheticBatch& batch);

/// KL(N(mu, exp(logvar)) || N(0, I)) summed over latent dimensions and averaged
/// over rows. Gradients, when requested, are of that mean.
double gaussian_kl(const Matrix& mu, const Matrix& logvar, Matrix* grad_mu = nullptr, Matrix* grad_logvar = nullptr);

/// Negative ELBO on a batch (reconstruction + kl_weight * KL) with gradients of
/// encoder then decoder parameters; `noise` is the reparameterization draw.
double vae_batch_gradient(VaeModel& model, const Matrix& relaxed, const Matrix& cells, const Matrix& noise,
                          double kl_weight, std::vector<double>& grads);

void save_generator(const Generator& gen, const std::string& path);
Generator load_generator(const std::string& path);

void to_json(json& j, const GenConfig& c);
/// Fields present in j override the values already in c.
void from_json(const json& j, GenConfig& c);
void to_json(json& j, const Generator& g);
void from_json(const json& j, Generator& g);

}  // namespace netsynth
