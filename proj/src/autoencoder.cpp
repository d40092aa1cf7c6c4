#include "netsynth/autoencoder.hpp"

#include <cmath>

#include "netsynth/errors.hpp"

namespace netsynth {

namespace {

std::vector<LayerSpec> relu_stack(const std::vector<std::size_t>& widths) {
    std::vector<LayerSpec> specs;
    for (auto w : widths) specs.push_back({w, Activation::relu});
    return specs;
}

void check_widths(const std::vector<std::size_t>& widths, const char* what) {
    if (widths.empty()) throw ConfigError(std::string(what) + " needs at least one layer");
    for (auto w : widths)
        if (w == 0) throw ConfigError(std::string(what) + " has a zero-width layer");
}

struct EncoderTrace {
    ForwardTrace numeric;
    ForwardTrace categorical;
    ForwardTrace trunk;
};

EncoderTrace encoder_forward(const AEModel& m, const Matrix& relaxed) {
    if (static_cast<std::size_t>(relaxed.cols()) != m.schema.relaxed_width())
        throw ShapeError("autoencoder input has " + std::to_string(relaxed.cols()) + " columns, expected " +
                         std::to_string(m.schema.relaxed_width()));
    const auto dc = static_cast<Eigen::Index>(m.schema.continuous_count());
    EncoderTrace t;
    Eigen::Index width = 0;
    if (!m.numeric_branch.empty()) {
        t.numeric = m.numeric_branch.forward(relaxed.leftCols(dc));
        width += t.numeric.output().cols();
    }
    if (!m.categorical_branch.empty()) {
        t.categorical = m.categorical_branch.forward(relaxed.rightCols(relaxed.cols() - dc));
        width += t.categorical.output().cols();
    }
    Matrix joined(relaxed.rows(), width);
    Eigen::Index col = 0;
    if (!m.numeric_branch.empty()) {
        joined.leftCols(t.numeric.output().cols()) = t.numeric.output();
        col = t.numeric.output().cols();
    }
    if (!m.categorical_branch.empty()) joined.rightCols(width - col) = t.categorical.output();
    t.trunk = m.encoder_trunk.forward(joined);
    return t;
}

}  // namespace

std::size_t default_latent_dim(const TableSchema& schema) {
    return std::max<std::size_t>(1, (schema.feature_count() + 3) / 4);
}

AEModel build_ae(const TableSchema& schema, AEConfig config, std::uint64_t seed) {
    const std::size_t d = schema.feature_count();
    if (d == 0) throw ConfigError("autoencoder schema has no features");
    if (config.latent_dim == 0) config.latent_dim = default_latent_dim(schema);
    if (config.latent_dim >= d)
        throw ConfigError("latent dimension " + std::to_string(config.latent_dim) +
                          " must be smaller than the feature count " + std::to_string(d));
    if (config.shared_width == 0) throw ConfigError("shared width must be positive");
    if (config.batch_size == 0) throw ConfigError("batch size must be positive");
    check_widths(config.decoder_widths, "decoder");

    AEModel m;
    m.schema = schema;
    m.config = config;
    m.heads = MixedHeads(schema);
    Rng rng(seed);
    std::size_t joined = 0;
    if (schema.continuous_count() > 0) {
        check_widths(config.numeric_widths, "numeric branch");
        const auto specs = relu_stack(config.numeric_widths);
        m.numeric_branch = DenseNet::make(schema.continuous_count(), specs, rng);
        joined += config.numeric_widths.back();
    }
    if (schema.discrete_count() > 0) {
        check_widths(config.categorical_widths, "categorical branch");
        const auto specs = relu_stack(config.categorical_widths);
        m.categorical_branch = DenseNet::make(schema.relaxed_width() - schema.continuous_count(), specs, rng);
        joined += config.categorical_widths.back();
    }
    const std::vector<LayerSpec> trunk{{config.shared_width, Activation::relu},
                                       {config.latent_dim, Activation::identity}};
    m.encoder_trunk = DenseNet::make(joined, trunk, rng);
    auto dec = relu_stack(config.decoder_widths);
    dec.push_back({m.heads.output_width(), Activation::identity});
    m.decoder = DenseNet::make(config.latent_dim, dec, rng);
    return m;
}

ParameterSet ae_parameters(AEModel& model) {
    ParameterSet p;
    p.add(model.numeric_branch);
    p.add(model.categorical_branch);
    p.add(model.encoder_trunk);
    p.add(model.decoder);
    return p;
}

double ae_batch_gradient(AEModel& model, const Matrix& relaxed, const Matrix& cells, std::vector<double>& grads) {
    const EncoderTrace enc = encoder_forward(model, relaxed);
    const ForwardTrace dec = model.decoder.forward(enc.trunk.output());
    const Matrix outputs = model.heads.activate(dec.output());
    const double loss = model.heads.loss(outputs, cells);

    Matrix latent_grad, joined_grad;
    const Gradients dec_grads = model.decoder.backward(dec, model.heads.logit_gradient(outputs, cells), &latent_grad);
    const Gradients trunk_grads = model.encoder_trunk.backward(enc.trunk, latent_grad, &joined_grad);

    grads.clear();
    Eigen::Index col = 0;
    if (!model.numeric_branch.empty()) {
        const auto w = enc.numeric.output().cols();
        append_gradients(model.numeric_branch.backward(enc.numeric, joined_grad.leftCols(w)), grads);
        col = w;
    }
    if (!model.categorical_branch.empty())
        append_gradients(model.categorical_branch.backward(enc.categorical, joined_grad.rightCols(joined_grad.cols() - col)),
                         grads);
    append_gradients(trunk_grads, grads);
    append_gradients(dec_grads, grads);
    return loss;
}

TrainCurve train_ae(AEModel& model, const Dataset& train, const Dataset* val, std::uint64_t seed) {
    if (train.rows() == 0) throw FitError("autoencoder training set is empty");
    if (train.schema.features != model.schema.features) throw ShapeError("training data does not match the model schema");
    const Matrix relaxed = relaxed_matrix(train);
    Matrix val_relaxed;
    if (val && val->rows() > 0) val_relaxed = relaxed_matrix(*val);

    ParameterSet params = ae_parameters(model);
    Adam adam({model.config.learning_rate}, params.size());
    Rng rng(seed);
    TrainCurve curve;
    std::vector<double> grads;
    const std::size_t n = train.rows();
    const std::size_t batch = std::min(model.config.batch_size, n);
    for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double total = 0.0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < n; start += batch, ++b) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
            const Matrix xb = gather_rows(relaxed, idx);
            const Matrix cb = gather_rows(train.cells, idx);
            const double loss = ae_batch_gradient(model, xb, cb, grads);
            if (!std::isfinite(loss))
                throw TrainingError("autoencoder: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(b + 1));
            adam.step(params.views(), grads);
            total += loss * static_cast<double>(idx.size());
        }
        curve.train_loss.push_back(total / static_cast<double>(n));
        if (val_relaxed.rows() > 0) {
            const Matrix out = model.heads.activate(model.decoder.predict(encode_relaxed(model, val_relaxed)));
            curve.val_loss.push_back(model.heads.loss(out, val->cells));
        }
    }
    return curve;
}

Matrix encode_relaxed(const AEModel& model, const Matrix& relaxed) {
    return encoder_forward(model, relaxed).trunk.output();
}

Matrix encode(const AEModel& model, const Dataset& data) {
    if (data.schema.features != model.schema.features) throw ShapeError("data does not match the autoencoder schema");
    return encode_relaxed(model, relaxed_matrix(data));
}

Matrix decode_outputs(const AEModel& model, const Matrix& latents) {
    if (static_cast<std::size_t>(latents.cols()) != model.latent_dim())
        throw ShapeError("latent batch has " + std::to_string(latents.cols()) + " columns, expected " +
                         std::to_string(model.latent_dim()));
    return model.heads.activate(model.decoder.predict(latents));
}

Dataset decode(const AEModel& model, const Matrix& latents, Rng* rng) {
    Dataset out;
    out.schema = model.schema;
    out.schema.label_column.clear();
    out.schema.class_labels.clear();
    out.stage = DataStage::encoded;
    out.cells = model.heads.decode(decode_outputs(model, latents), model.config.stochastic_decode, rng);
    return out;
}

void fit_latent_norm(AEModel& model, const Dataset& train) {
    const Matrix z = encode(model, train);
    if (z.rows() == 0) throw FitError("latent normalisation needs training rows");
    model.latent_mean = z.colwise().mean();
    model.latent_std.resize(z.cols());
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
        const double var = (z.col(k).array() - model.latent_mean(k)).square().mean();
        const double s = std::sqrt(var);
        if (!(s >= 1e-12)) throw NumericError("latent dimension " + std::to_string(k) + " collapsed (std " + std::to_string(s) + ")");
        model.latent_std(k) = s;
    }
}

Matrix normalize_latents(const AEModel& model, const Matrix& latents) {
    if (!model.latent_fitted()) throw FitError("latent normalisation has not been fitted");
    if (latents.cols() != model.latent_mean.size()) throw ShapeError("latent batch has the wrong width");
    return (latents.rowwise() - model.latent_mean).array().rowwise() / model.latent_std.array();
}

Matrix denormalize_latents(const AEModel& model, const Matrix& latents) {
    if (!model.latent_fitted()) throw FitError("latent normalisation has not been fitted");
    if (latents.cols() != model.latent_mean.size()) throw ShapeError("latent batch has the wrong width");
    Matrix out = latents.array().rowwise() * model.latent_std.array();
    return out.rowwise() + model.latent_mean;
}

void to_json(json& j, const AEConfig& c) {
    j = {{"numeric_widths", c.numeric_widths},
         {"categorical_widths", c.categorical_widths},
         {"shared_width", c.shared_width},
         {"decoder_widths", c.decoder_widths},
         {"latent_dim", c.latent_dim},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"stochastic_decode", c.stochastic_decode}};
}

void from_json(const json& j, AEConfig& c) {
    const AEConfig d = c;
    c.numeric_widths = j.value("numeric_widths", d.numeric_widths);
    c.categorical_widths = j.value("categorical_widths", d.categorical_widths);
    c.shared_width = j.value("shared_width", d.shared_width);
    c.decoder_widths = j.value("decoder_widths", d.decoder_widths);
    c.latent_dim = j.value("latent_dim", d.latent_dim);
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.stochastic_decode = j.value("stochastic_decode", d.stochastic_decode);
}

namespace {

json optional_net(const DenseNet& net) { return net.empty() ? json(nullptr) : json(net); }

DenseNet read_optional_net(const json& j) { return j.is_null() ? DenseNet{} : j.get<DenseNet>(); }

std::vector<double> to_vector(const RowVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RowVector to_row(const std::vector<double>& v) {
    RowVector r(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<Eigen::Index>(i)) = v[i];
    return r;
}

}  // namespace

void to_json(json& j, const AEModel& m) {
    j = {{"schema", m.schema},
         {"config", m.config},
         {"numeric_branch", optional_net(m.numeric_branch)},
         {"categorical_branch", optional_net(m.categorical_branch)},
         {"encoder_trunk", m.encoder_trunk},
         {"decoder", m.decoder},
         {"latent_mean", to_vector(m.latent_mean)},
         {"latent_std", to_vector(m.latent_std)}};
}

void from_json(const json& j, AEModel& m) {
    m = {};
    m.schema = j.at("schema").get<TableSchema>();
    m.config = j.at("config").get<AEConfig>();
    m.numeric_branch = read_optional_net(j.at("numeric_branch"));
    m.categorical_branch = read_optional_net(j.at("categorical_branch"));
    m.encoder_trunk = j.at("encoder_trunk").get<DenseNet>();
    m.decoder = j.at("decoder").get<DenseNet>();
    m.heads = MixedHeads(m.schema);
    m.latent_mean = to_row(j.at("latent_mean").get<std::vector<double>>());
    m.latent_std = to_row(j.at("latent_std").get<std::vector<double>>());
    if (m.decoder.output_dim() != m.heads.output_width()) throw ShapeError("stored decoder does not match its schema");
}

}  // namespace netsynth
