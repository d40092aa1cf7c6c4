#include "netsynth/diffusion.hpp"

#include <cmath>

#include "netsynth/errors.hpp"

namespace netsynth {

DiffusionSchedule linear_schedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps == 0) throw ConfigError("diffusion needs at least one step");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ConfigError("noise schedule needs 0 < beta_start <= beta_end < 1");
    DiffusionSchedule s;
    s.steps = steps;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    double running = 1.0;
    for (std::size_t t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        s.beta.push_back(b);
        s.alpha.push_back(1.0 - b);
        running *= 1.0 - b;
        s.alpha_bar.push_back(running);
    }
    return s;
}

namespace {

void check_step(std::size_t t, const DiffusionSchedule& s) {
    if (t < 1 || t > s.steps)
        throw DomainError("diffusion step " + std::to_string(t) + " outside 1.." + std::to_string(s.steps));
}

}  // namespace

Matrix forward_diffuse(const Matrix& z0, std::size_t t, const Matrix& noise, const DiffusionSchedule& schedule) {
    check_step(t, schedule);
    if (z0.rows() != noise.rows() || z0.cols() != noise.cols()) throw ShapeError("noise shape does not match the data");
    const double ab = schedule.alpha_bar_at(t);
    return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * noise;
}

RowVector time_embedding(std::size_t t, std::size_t dim) {
    if (dim == 0 || dim % 2 != 0) throw ConfigError("time embedding dimension must be even and positive");
    RowVector e(static_cast<Eigen::Index>(dim));
    const double td = static_cast<double>(t);
    for (std::size_t i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
        e(static_cast<Eigen::Index>(2 * i)) = std::sin(td * freq);
        e(static_cast<Eigen::Index>(2 * i + 1)) = std::cos(td * freq);
    }
    return e;
}

std::string_view to_string(Parameterization p) {
    return p == Parameterization::predict_noise ? "predict_noise" : "predict_clean";
}

Parameterization parameterization_from_string(std::string_view s) {
    if (s == "predict_noise") return Parameterization::predict_noise;
    if (s == "predict_clean") return Parameterization::predict_clean;
    throw ConfigError("unknown parameterization '" + std::string(s) + "'");
}

// --------------------------------------------------------------- denoiser ----

Denoiser::Denoiser(std::size_t data_dim, const DenoiserConfig& config, std::uint64_t seed)
    : data_dim_(data_dim), config_(config) {
    if (data_dim == 0) throw ConfigError("denoiser data dimension must be positive");
    if (config.hidden_width == 0 || config.depth == 0) throw ConfigError("denoiser width and depth must be positive");
    if (config.time_dim == 0 || config.time_dim % 2 != 0) throw ConfigError("time embedding dimension must be even");
    Rng rng(seed);
    const std::vector<LayerSpec> time_layers{{config.time_dim, Activation::relu}, {config.time_dim, Activation::identity}};
    time_mlp_ = DenseNet::make(config.time_dim, time_layers, rng);
    std::vector<LayerSpec> body(config.depth, LayerSpec{config.hidden_width, Activation::relu});
    body.push_back({data_dim, Activation::identity});
    backbone_ = DenseNet::make(data_dim + config.time_dim, body, rng);
}

Matrix Denoiser::embed(std::span<const std::size_t> steps) const {
    Matrix e(static_cast<Eigen::Index>(steps.size()), static_cast<Eigen::Index>(config_.time_dim));
    for (std::size_t i = 0; i < steps.size(); ++i) e.row(static_cast<Eigen::Index>(i)) = time_embedding(steps[i], config_.time_dim);
    return e;
}

Matrix Denoiser::predict(const Matrix& z_t, std::span<const std::size_t> steps) const {
    if (static_cast<std::size_t>(z_t.cols()) != data_dim_) throw ShapeError("denoiser input has the wrong width");
    if (steps.size() != static_cast<std::size_t>(z_t.rows())) throw ShapeError("one step per row is required");
    const Matrix temb = time_mlp_.predict(embed(steps));
    Matrix input(z_t.rows(), z_t.cols() + temb.cols());
    input << z_t, temb;
    return backbone_.predict(input);
}

Matrix Denoiser::predict(const Matrix& z_t, std::size_t t) const {
    if (static_cast<std::size_t>(z_t.cols()) != data_dim_) throw ShapeError("denoiser input has the wrong width");
    const std::size_t one[] = {t};
    const Matrix temb = time_mlp_.predict(embed(one));
    const auto& layers = backbone_.layers();
    const auto d = static_cast<Eigen::Index>(data_dim_);
    const DenseLayer& first = layers.front();
    const RowVector shift = temb * first.weight.bottomRows(first.weight.rows() - d) + first.bias;
    Matrix h = z_t * first.weight.topRows(d);
    h.rowwise() += shift;
    h = activate(first.activation, h);
    for (std::size_t l = 1; l < layers.size(); ++l) {
        Matrix pre = h * layers[l].weight;
        pre.rowwise() += layers[l].bias;
        h = activate(layers[l].activation, pre);
    }
    return h;
}

double Denoiser::loss_and_gradient(const Matrix& z_t, std::span<const std::size_t> steps, const Matrix& target,
                                   std::vector<double>& grads) const {
    const ForwardTrace tt = time_mlp_.forward(embed(steps));
    Matrix input(z_t.rows(), z_t.cols() + tt.output().cols());
    input << z_t, tt.output();
    const ForwardTrace bt = backbone_.forward(input);
    const LossResult loss = loss_and_grad(LossKind::mse, bt.output(), target);
    Matrix input_grad;
    const Gradients backbone_grads = backbone_.backward(bt, loss.gradient, &input_grad);
    const Gradients time_grads = time_mlp_.backward(tt, input_grad.rightCols(tt.output().cols()));
    grads.clear();
    append_gradients(time_grads, grads);
    append_gradients(backbone_grads, grads);
    return loss.value;
}

ParameterSet Denoiser::parameters() {
    ParameterSet p;
    p.add(time_mlp_);
    p.add(backbone_);
    return p;
}

std::vector<double> train_denoiser(Denoiser& model, const Matrix& data, const DiffusionSchedule& schedule,
                                   const DiffusionTrainConfig& config, std::uint64_t seed) {
    if (static_cast<std::size_t>(data.cols()) != model.data_dim()) throw ShapeError("training data has the wrong width");
    if (data.rows() == 0) throw FitError("denoiser training set is empty");
    if (!data.allFinite()) throw DomainError("denoiser training data contains non-finite values");
    if (config.batch_size == 0) throw ConfigError("batch size must be positive");

    ParameterSet params = model.parameters();
    Adam adam({config.learning_rate}, params.size());
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> step_dist(1, schedule.steps);
    const auto n = static_cast<std::size_t>(data.rows());
    const std::size_t batch = std::min(config.batch_size, n);
    const bool clean = model.config().parameterization == Parameterization::predict_clean;
    std::vector<double> curve;
    std::vector<double> grads;
    std::vector<std::size_t> steps;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
            const Matrix z0 = gather_rows(data, idx);
            const Matrix eps = standard_normal(z0.rows(), z0.cols(), rng);
            steps.resize(idx.size());
            Matrix z_t(z0.rows(), z0.cols());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                steps[i] = step_dist(rng);
                const double ab = schedule.alpha_bar_at(steps[i]);
                const auto r = static_cast<Eigen::Index>(i);
                z_t.row(r) = std::sqrt(ab) * z0.row(r) + std::sqrt(1.0 - ab) * eps.row(r);
            }
            const double loss = model.loss_and_gradient(z_t, steps, clean ? z0 : eps, grads);
            if (!std::isfinite(loss))
                throw TrainingError("denoiser: non-finite loss at epoch " + std::to_string(epoch + 1));
            if (config.clip_norm > 0.0) clip_gradients(grads, config.clip_norm);
            adam.step(params.views(), grads);
            total += loss * static_cast<double>(idx.size());
        }
        curve.push_back(total / static_cast<double>(n));
    }
    return curve;
}

// ---------------------------------------------------------------- reverse ----

Matrix noise_from_clean(const Matrix& z_t, const Matrix& clean, std::size_t t, const DiffusionSchedule& schedule) {
    check_step(t, schedule);
    const double ab = schedule.alpha_bar_at(t);
    return (z_t - std::sqrt(ab) * clean) / std::sqrt(1.0 - ab);
}

Matrix reverse_mean(const Matrix& z_t, const Matrix& noise_estimate, std::size_t t, const DiffusionSchedule& schedule) {
    check_step(t, schedule);
    const double a = schedule.alpha_at(t);
    const double ab = schedule.alpha_bar_at(t);
    return (z_t - ((1.0 - a) / std::sqrt(1.0 - ab)) * noise_estimate) / std::sqrt(a);
}

double reverse_sigma(std::size_t t, const DiffusionSchedule& schedule, ReverseVariance variance) {
    check_step(t, schedule);
    if (t == 1) return 0.0;
    const double b = schedule.beta_at(t);
    if (variance == ReverseVariance::beta) return std::sqrt(b);
    return std::sqrt(b * (1.0 - schedule.alpha_bar_at(t - 1)) / (1.0 - schedule.alpha_bar_at(t)));
}

Matrix reverse_step_from_prediction(const Matrix& z_t, const Matrix& prediction, Parameterization parameterization,
                                    std::size_t t, const DiffusionSchedule& schedule, const Matrix& noise,
                                    ReverseVariance variance) {
    const Matrix eps = parameterization == Parameterization::predict_noise ? prediction
                                                                           : noise_from_clean(z_t, prediction, t, schedule);
    Matrix out = reverse_mean(z_t, eps, t, schedule);
    const double sigma = reverse_sigma(t, schedule, variance);
    if (sigma > 0.0) {
        if (noise.rows() != z_t.rows() || noise.cols() != z_t.cols()) throw ShapeError("reverse-step noise has the wrong shape");
        out += sigma * noise;
    }
    return out;
}

Matrix reverse_step(const Denoiser& model, const Matrix& z_t, std::size_t t, const DiffusionSchedule& schedule,
                    const Matrix& noise) {
    check_step(t, schedule);
    return reverse_step_from_prediction(z_t, model.predict(z_t, t), model.config().parameterization, t, schedule, noise,
                                        model.config().variance);
}

Matrix sample(const Denoiser& model, const DiffusionSchedule& schedule, std::size_t n, std::uint64_t seed) {
    const auto rows = static_cast<Eigen::Index>(n);
    const auto d = static_cast<Eigen::Index>(model.data_dim());
    Rng rng(seed);
    Matrix z = standard_normal(rows, d, rng);
    if (n == 0) return z;
    Matrix noise;
    for (std::size_t t = schedule.steps; t >= 1; --t) {
        noise = t > 1 ? standard_normal(rows, d, rng) : Matrix();
        z = reverse_step(model, z, t, schedule, noise);
        if (!z.allFinite()) throw SamplingError("non-finite sample state at diffusion step " + std::to_string(t));
    }
    return z;
}

// ------------------------------------------------------------------- json ----

void to_json(json& j, const DenoiserConfig& c) {
    j = {{"hidden_width", c.hidden_width},
         {"depth", c.depth},
         {"time_dim", c.time_dim},
         {"parameterization", to_string(c.parameterization)},
         {"variance", c.variance == ReverseVariance::beta ? "beta" : "posterior"}};
}

void from_json(const json& j, DenoiserConfig& c) {
    const DenoiserConfig d = c;
    c.hidden_width = j.value("hidden_width", d.hidden_width);
    c.depth = j.value("depth", d.depth);
    c.time_dim = j.value("time_dim", d.time_dim);
    c.parameterization = parameterization_from_string(j.value("parameterization", std::string(to_string(d.parameterization))));
    const std::string v = j.value("variance", std::string(d.variance == ReverseVariance::beta ? "beta" : "posterior"));
    if (v != "beta" && v != "posterior") throw ConfigError("unknown reverse variance '" + v + "'");
    c.variance = v == "beta" ? ReverseVariance::beta : ReverseVariance::posterior;
}

void to_json(json& j, const DiffusionTrainConfig& c) {
    j = {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}, {"clip_norm", c.clip_norm}};
}

void from_json(const json& j, DiffusionTrainConfig& c) {
    const DiffusionTrainConfig d = c;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.clip_norm = j.value("clip_norm", d.clip_norm);
}

void to_json(json& j, const DiffusionSchedule& s) {
    j = {{"steps", s.steps}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}};
}

void from_json(const json& j, DiffusionSchedule& s) {
    s = linear_schedule(j.at("steps").get<std::size_t>(), j.at("beta_start").get<double>(), j.at("beta_end").get<double>());
}

void to_json(json& j, const Denoiser& d) {
    j = {{"data_dim", d.data_dim_}, {"config", d.config_}, {"time_mlp", d.time_mlp_}, {"backbone", d.backbone_}};
}

void from_json(const json& j, Denoiser& d) {
    d.data_dim_ = j.at("data_dim").get<std::size_t>();
    d.config_ = j.at("config").get<DenoiserConfig>();
    d.time_mlp_ = j.at("time_mlp").get<DenseNet>();
    d.backbone_ = j.at("backbone").get<DenseNet>();
    if (d.backbone_.input_dim() != d.data_dim_ + d.config_.time_dim || d.backbone_.output_dim() != d.data_dim_)
        throw ShapeError("stored denoiser does not match its data dimension");
}

}  // namespace netsynth
