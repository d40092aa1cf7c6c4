#pragma once

// DDPM machinery: linear noise schedule, closed-form corruption, a
// time-conditional MLP denoiser, its training loop and the ancestral sampler.
// Steps are 1-based throughout.

#include <cstdint>
#include <span>
#include <vector>

#include "netsynth/common.hpp"

namespace netsynth {

struct DiffusionSchedule {
    std::size_t steps = 0;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::vector<double> beta;  // index t - 1
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double beta_at(std::size_t t) const { return beta[t - 1]; }
    double alpha_at(std::size_t t) const { return alpha[t - 1]; }
    double alpha_bar_at(std::size_t t) const { return alpha_bar[t - 1]; }
};

DiffusionSchedule linear_schedule(std::size_t steps, double beta_start = 1e-4, double beta_end = 0.02);

/// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * noise
Matrix forward_diffuse(const Matrix& z0, std::size_t t, const Matrix& noise, const DiffusionSchedule& schedule);

/// Interleaved sin/cos features: entry 2i is sin(t * w_i), entry 2i + 1 is
/// cos(t * w_i), with w_i = 10000^(-2i / dim).
RowVector time_embedding(std::size_t t, std::size_t dim = 128);

enum class Parameterization { predict_noise, predict_clean };
enum class ReverseVariance { beta, posterior };

std::string_view to_string(Parameterization p);
Parameterization parameterization_from_string(std::string_view s);

struct DenoiserConfig {
    std::size_t hidden_width = 256;
    std::size_t depth = 4;  // hidden layers in the backbone
    std::size_t time_dim = 128;
    Parameterization parameterization = Parameterization::predict_noise;
    ReverseVariance variance = ReverseVariance::beta;
};

class Denoiser {
public:
    Denoiser() = default;
    Denoiser(std::size_t data_dim, const DenoiserConfig& config, std::uint64_t seed);

    std::size_t data_dim() const { return data_dim_; }
    const DenoiserConfig& config() const { return config_; }

    /// Network output for noisy rows at per-row steps.
    Matrix predict(const Matrix& z_t, std::span<const std::size_t> steps) const;
    /// Network output when every row shares the step t. The time branch and
    /// its contribution to the first backbone layer are evaluated once.
    Matrix predict(const Matrix& z_t, std::size_t t) const;

    /// Mean squared error of the prediction against target, with gradients of
    /// every parameter flattened in parameters() order.
    double loss_and_gradient(const Matrix& z_t, std::span<const std::size_t> steps, const Matrix& target,
                             std::vector<double>& grads) const;
    ParameterSet parameters();

    DenseNet& time_mlp() { return time_mlp_; }
    DenseNet& backbone() { return backbone_; }
    const DenseNet& time_mlp() const { return time_mlp_; }
    const DenseNet& backbone() const { return backbone_; }

    friend void to_json(json& j, const Denoiser& d);
    friend void from_json(const json& j, Denoiser& d);

private:
    Matrix embed(std::span<const std::size_t> steps) const;

    std::size_t data_dim_ = 0;
    DenoiserConfig config_;
    DenseNet time_mlp_;
    DenseNet backbone_;
};

struct DiffusionTrainConfig {
    std::size_t epochs = 400;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double clip_norm = 1.0;  // 0 disables clipping
};

/// Per-epoch mean training loss.
std::vector<double> train_denoiser(Denoiser& model, const Matrix& data, const DiffusionSchedule& schedule,
                                   const DiffusionTrainConfig& config, std::uint64_t seed);

/// Noise estimate implied by a clean-sample estimate.
Matrix noise_from_clean(const Matrix& z_t, const Matrix& clean, std::size_t t, const DiffusionSchedule& schedule);

/// Reverse-process mean for a noise estimate.
Matrix reverse_mean(const Matrix& z_t, const Matrix& noise_estimate, std::size_t t, const DiffusionSchedule& schedule);

double reverse_sigma(std::size_t t, const DiffusionSchedule& schedule, ReverseVariance variance);

/// One ancestral step given a raw network prediction in either parameterization.
Matrix reverse_step_from_prediction(const Matrix& z_t, const Matrix& prediction, Parameterization parameterization,
                                    std::size_t t, const DiffusionSchedule& schedule, const Matrix& noise,
                                    ReverseVariance variance = ReverseVariance::beta);

Matrix reverse_step(const Denoiser& model, const Matrix& z_t, std::size_t t, const DiffusionSchedule& schedule,
                    const Matrix& noise);

/// Full reverse chain from standard normal noise.
Matrix sample(const Denoiser& model, const DiffusionSchedule& schedule, std::size_t n, std::uint64_t seed);

void to_json(json& j, const DenoiserConfig& c);
void from_json(const json& j, DenoiserConfig& c);
void to_json(json& j, const DiffusionTrainConfig& c);
void from_json(const json& j, DiffusionTrainConfig& c);
/// Stored as (steps, beta_start, beta_end) and re-derived on load.
void to_json(json& j, const DiffusionSchedule& s);
void from_json(const json& j, DiffusionSchedule& s);

}  // namespace netsynth
