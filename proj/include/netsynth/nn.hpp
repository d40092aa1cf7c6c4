#pragma once

// Small dense-network engine: forward pass, reverse-mode gradients, Adam and
// the three reconstruction losses used by every model in the library.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace netsynth {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using json = nlohmann::json;

enum class Activation { relu, sigmoid, softmax, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
    Matrix weight;  // [input_dim x output_dim]
    RowVector bias;
    Activation activation = Activation::identity;

    std::size_t input_dim() const { return static_cast<std::size_t>(weight.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(weight.cols()); }
};

struct LayerSpec {
    std::size_t width = 0;
    Activation activation = Activation::relu;
};

/// Every intermediate value of one forward pass. values[0] is the input batch,
/// values[i + 1] the post-activation output of layer i.
struct ForwardTrace {
    std::vector<Matrix> values;

    const Matrix& input() const { return values.front(); }
    const Matrix& output() const { return values.back(); }
};

struct LayerGradient {
    Matrix weight;
    RowVector bias;
};

using Gradients = std::vector<LayerGradient>;

class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);

    /// He-uniform init for relu layers, Xavier-uniform for the rest; zero biases.
    static DenseNet make(std::size_t input_dim, std::span<const LayerSpec> specs,
                         std::mt19937_64& rng);

    bool empty() const { return layers_.empty(); }
    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    ForwardTrace forward(const Matrix& batch) const;
    Matrix predict(const Matrix& batch) const;

    /// Gradients of every weight and bias given dLoss/dOutput. When input_grad
    /// is non-null it receives dLoss/dInput.
    Gradients backward(const ForwardTrace& trace, const Matrix& output_grad,
                       Matrix* input_grad = nullptr) const;

    void collect_parameters(std::vector<std::span<double>>& out);

private:
    std::vector<DenseLayer> layers_;
};

Matrix activate(Activation a, const Matrix& pre);
Matrix softmax_rows(const Matrix& logits);

/// Views into the parameters of several nets, in a fixed order. Gradients are
/// flattened in the same order with append_gradients.
class ParameterSet {
public:
    void add(DenseNet& net);
    std::span<const std::span<double>> views() const { return views_; }
    std::size_t size() const;
    std::vector<double> snapshot() const;

private:
    std::vector<std::span<double>> views_;
};

void append_gradients(const Gradients& grads, std::vector<double>& flat);
Gradients zero_gradients(const DenseNet& net);

enum class LossKind { mse, binary_cross_entropy, categorical_cross_entropy };

struct LossResult {
    double value = 0.0;
    Matrix gradient;
};

/// Mean-reduced losses. mse and bce average over every element; cce expects
/// class probabilities [n x k] and a [n x 1] target of category indices and
/// averages over rows.
LossResult loss_and_grad(LossKind kind, const Matrix& prediction, const Matrix& target);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, std::size_t parameter_count);

    /// One bias-corrected update. Throws TrainingError on a non-finite gradient.
    void step(std::span<const std::span<double>> params, std::span<const double> grads);

    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }

private:
    AdamConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

double global_norm(std::span<const double> grads);

/// Rescales grads so their global L2 norm is at most max_norm. Returns the
/// norm before clipping.
double clip_gradients(std::span<double> grads, double max_norm);

void to_json(json& j, const DenseNet& net);
void from_json(const json& j, DenseNet& net);

}  // namespace netsynth
