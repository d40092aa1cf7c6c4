#include "netsynth/nn.hpp"

#include <algorithm>
#include <cmath>

#include "netsynth/errors.hpp"

namespace netsynth {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softmax") return Activation::softmax;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double peak = logits.row(i).maxCoeff();
        out.row(i) = (logits.row(i).array() - peak).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

Matrix activate(Activation a, const Matrix& pre) {
    switch (a) {
        case Activation::relu: return pre.cwiseMax(0.0);
        case Activation::sigmoid:
            return pre.unaryExpr([](double x) {
                // split on sign so exp never overflows
                if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                const double e = std::exp(x);
                return e / (1.0 + e);
            });
        case Activation::softmax: return softmax_rows(pre);
        case Activation::identity: return pre;
    }
    return pre;
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        if (layer.weight.rows() == 0 || layer.weight.cols() == 0)
            throw ShapeError("dense layer " + std::to_string(i) + " has an empty weight matrix");
        if (static_cast<std::size_t>(layer.bias.size()) != layer.output_dim())
            throw ShapeError("dense layer " + std::to_string(i) + " bias does not match its width");
        if (i > 0 && layers_[i - 1].output_dim() != layer.input_dim())
            throw ShapeError("dense layer " + std::to_string(i) + " does not chain with its predecessor");
        if (layer.activation == Activation::softmax && i + 1 != layers_.size())
            throw ConfigError("softmax is only allowed on the output layer");
    }
}

DenseNet DenseNet::make(std::size_t input_dim, std::span<const LayerSpec> specs,
                        std::mt19937_64& rng) {
    if (input_dim == 0) throw ConfigError("dense net input dimension must be positive");
    std::vector<DenseLayer> layers;
    layers.reserve(specs.size());
    std::size_t fan_in = input_dim;
    for (const auto& spec : specs) {
        if (spec.width == 0) throw ConfigError("dense layer width must be positive");
        const double fan_out = static_cast<double>(spec.width);
        const double limit = spec.activation == Activation::relu
                                 ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                 : std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer layer;
        layer.weight.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(spec.width));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
        layer.bias = RowVector::Zero(static_cast<Eigen::Index>(spec.width));
        layer.activation = spec.activation;
        layers.push_back(std::move(layer));
        fan_in = spec.width;
    }
    return DenseNet(std::move(layers));
}

std::size_t DenseNet::input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }

std::size_t DenseNet::output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

ForwardTrace DenseNet::forward(const Matrix& batch) const {
    if (layers_.empty()) throw ShapeError("forward on an empty network");
    if (static_cast<std::size_t>(batch.cols()) != input_dim())
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(input_dim()));
    ForwardTrace trace;
    trace.values.reserve(layers_.size() + 1);
    trace.values.push_back(batch);
    for (const auto& layer : layers_) {
        Matrix pre = trace.values.back() * layer.weight;
        pre.rowwise() += layer.bias;
        trace.values.push_back(activate(layer.activation, pre));
    }
    return trace;
}

Matrix DenseNet::predict(const Matrix& batch) const { return forward(batch).output(); }

Gradients DenseNet::backward(const ForwardTrace& trace, const Matrix& output_grad,
                             Matrix* input_grad) const {
    if (trace.values.size() != layers_.size() + 1)
        throw ShapeError("backward: trace does not belong to this network");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (static_cast<std::size_t>(trace.values[i].cols()) != layers_[i].input_dim() ||
            static_cast<std::size_t>(trace.values[i + 1].cols()) != layers_[i].output_dim())
            throw ShapeError("backward: stale activations for layer " + std::to_string(i));
    }
    const Matrix& out = trace.output();
    if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
        throw ShapeError("backward: output gradient shape mismatch");

    Gradients grads(layers_.size());
    Matrix upstream = output_grad;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const DenseLayer& layer = layers_[idx];
        const Matrix& a_out = trace.values[idx + 1];
        const Matrix& a_in = trace.values[idx];
        Matrix delta;
        switch (layer.activation) {
            case Activation::relu:
                delta = upstream.cwiseProduct((a_out.array() > 0.0).cast<double>().matrix());
                break;
            case Activation::sigmoid:
                delta = upstream.array() * a_out.array() * (1.0 - a_out.array());
                break;
            case Activation::softmax: {
                // J^T g for each row: s * (g - <g, s>)
                const Eigen::VectorXd inner = upstream.cwiseProduct(a_out).rowwise().sum();
                delta = a_out.array() * (upstream.colwise() - inner).array();
                break;
            }
            case Activation::identity: delta = upstream; break;
        }
        grads[idx].weight = a_in.transpose() * delta;
        grads[idx].bias = delta.colwise().sum();
        if (idx > 0 || input_grad != nullptr) upstream = delta * layer.weight.transpose();
    }
    if (input_grad != nullptr) *input_grad = std::move(upstream);
    return grads;
}

void DenseNet::collect_parameters(std::vector<std::span<double>>& out) {
    for (auto& l : layers_) {
        out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
}

void ParameterSet::add(DenseNet& net) { net.collect_parameters(views_); }

std::size_t ParameterSet::size() const {
    std::size_t n = 0;
    for (const auto& v : views_) n += v.size();
    return n;
}

std::vector<double> ParameterSet::snapshot() const {
    std::vector<double> flat;
    flat.reserve(size());
    for (const auto& v : views_) flat.insert(flat.end(), v.begin(), v.end());
    return flat;
}

void append_gradients(const Gradients& grads, std::vector<double>& flat) {
    for (const auto& g : grads) {
        flat.insert(flat.end(), g.weight.data(), g.weight.data() + g.weight.size());
        flat.insert(flat.end(), g.bias.data(), g.bias.data() + g.bias.size());
    }
}

Gradients zero_gradients(const DenseNet& net) {
    Gradients grads;
    for (const auto& l : net.layers())
        grads.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), RowVector::Zero(l.bias.size())});
    return grads;
}

namespace {

constexpr double kProbFloor = 1e-12;

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(what) + ": prediction and target shapes differ");
}

}  // namespace

LossResult loss_and_grad(LossKind kind, const Matrix& prediction, const Matrix& target) {
    LossResult r;
    switch (kind) {
        case LossKind::mse: {
            require_same_shape(prediction, target, "mse");
            const double count = static_cast<double>(prediction.size());
            if (count == 0) throw ShapeError("mse: empty prediction");
            const Matrix diff = prediction - target;
            r.value = diff.squaredNorm() / count;
            r.gradient = diff * (2.0 / count);
            return r;
        }
        case LossKind::binary_cross_entropy: {
            require_same_shape(prediction, target, "binary cross-entropy");
            const double count = static_cast<double>(prediction.size());
            if (count == 0) throw ShapeError("binary cross-entropy: empty prediction");
            r.gradient.resize(prediction.rows(), prediction.cols());
            double total = 0.0;
            for (Eigen::Index i = 0; i < prediction.rows(); ++i) {
                for (Eigen::Index j = 0; j < prediction.cols(); ++j) {
                    const double p_raw = prediction(i, j);
                    if (!(p_raw >= 0.0 && p_raw <= 1.0))
                        throw NumericError("binary cross-entropy: probability outside [0, 1]");
                    const double y = target(i, j);
                    const double p = std::clamp(p_raw, kProbFloor, 1.0 - kProbFloor);
                    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
                    r.gradient(i, j) = (p - y) / (p * (1.0 - p)) / count;
                }
            }
            r.value = total / count;
            return r;
        }
        case LossKind::categorical_cross_entropy: {
            if (target.rows() != prediction.rows() || target.cols() != 1)
                throw ShapeError("categorical cross-entropy: target must be [n x 1] category indices");
            const auto n = prediction.rows();
            if (n == 0) throw ShapeError("categorical cross-entropy: empty prediction");
            r.gradient = Matrix::Zero(prediction.rows(), prediction.cols());
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double raw = target(i, 0);
                const auto k = static_cast<Eigen::Index>(raw);
                if (raw != static_cast<double>(k) || k < 0 || k >= prediction.cols())
                    throw DomainError("categorical cross-entropy: invalid category index " +
                                      std::to_string(raw));
                const double p_raw = prediction(i, k);
                if (!(p_raw >= 0.0 && p_raw <= 1.0))
                    throw NumericError("categorical cross-entropy: probability outside [0, 1]");
                const double p = std::max(p_raw, kProbFloor);
                total -= std::log(p);
                r.gradient(i, k) = -1.0 / (p * static_cast<double>(n));
            }
            r.value = total / static_cast<double>(n);
            return r;
        }
    }
    throw ConfigError("unknown loss kind");
}

Adam::Adam(AdamConfig config, std::size_t parameter_count)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
    if (!(config_.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
}

void Adam::step(std::span<const std::span<double>> params, std::span<const double> grads) {
    if (grads.size() != m_.size()) throw ShapeError("Adam: gradient size does not match optimizer state");
    std::size_t total = 0;
    for (const auto& p : params) total += p.size();
    if (total != grads.size()) throw ShapeError("Adam: parameter and gradient sizes differ");
    for (double g : grads)
        if (!std::isfinite(g)) throw TrainingError("Adam: non-finite gradient");

    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    std::size_t k = 0;
    for (const auto& block : params) {
        for (double& p : block) {
            const double g = grads[k];
            m_[k] = b1 * m_[k] + (1.0 - b1) * g;
            v_[k] = b2 * v_[k] + (1.0 - b2) * g * g;
            const double m_hat = m_[k] / corr1;
            const double v_hat = v_[k] / corr2;
            p -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            ++k;
        }
    }
}

double global_norm(std::span<const double> grads) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    return std::sqrt(sq);
}

double clip_gradients(std::span<double> grads, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("gradient clipping norm must be positive");
    const double norm = global_norm(grads);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grads) g *= scale;
    }
    return norm;
}

void to_json(json& j, const DenseNet& net) {
    j = json::array();
    for (const auto& l : net.layers()) {
        json layer;
        layer["input_dim"] = l.input_dim();
        layer["output_dim"] = l.output_dim();
        layer["activation"] = std::string(to_string(l.activation));
        layer["weight"] = std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size());
        layer["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        j.push_back(std::move(layer));
    }
}

void from_json(const json& j, DenseNet& net) {
    std::vector<DenseLayer> layers;
    for (const auto& item : j) {
        DenseLayer l;
        const auto in = item.at("input_dim").get<Eigen::Index>();
        const auto out = item.at("output_dim").get<Eigen::Index>();
        const auto w = item.at("weight").get<std::vector<double>>();
        const auto b = item.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
            throw ShapeError("serialized dense layer has inconsistent parameter counts");
        l.weight = Eigen::Map<const Matrix>(w.data(), in, out);
        l.bias = Eigen::Map<const RowVector>(b.data(), out);
        l.activation = activation_from_string(item.at("activation").get<std::string>());
        layers.push_back(std::move(l));
    }
    net = DenseNet(std::move(layers));
}

}  // namespace netsynth
