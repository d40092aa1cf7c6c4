#include "netsynth/generators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "netsynth/errors.hpp"

namespace netsynth {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::smote: return "smote";
        case Variant::vae: return "vae";
        case Variant::gan: return "gan";
        case Variant::dm: return "dm";
        case Variant::ldm: return "ldm";
    }
    return {};
}

Variant variant_from_string(const std::string& name) {
    for (auto v : all_variants())
        if (to_string(v) == name) return v;
    throw ConfigError("unknown generator '" + name + "' (valid: smote, vae, gan, dm, ldm)");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::smote, Variant::vae, Variant::gan, Variant::dm, Variant::ldm};
    return v;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> p{"default", "ddos", "mirai", "mitm"};
    return p;
}

// ---------------------------------------------------------------- presets ----

namespace {

struct AttackPreset {
    std::size_t vae_latent;
    double vae_lr, vae_kl, vae_clip;
    std::size_t gan_noise;
    double gan_g_lr, gan_d_lr, gan_smoothing;
    std::size_t dm_steps, dm_depth;
    double dm_lr;
    std::size_t ldm_latent;
    double ldm_ae_lr;
    std::size_t ldm_steps, ldm_depth;
    double ldm_lr;
};

const std::map<std::string, AttackPreset>& attack_presets() {
    static const std::map<std::string, AttackPreset> p{
        {"ddos", {5, 0.95e-3, 9.77e-2, 4.22, 13, 4.53e-4, 4.90e-4, 0.80, 200, 5, 3.36e-4, 13, 2.22e-3, 782, 2, 2.31e-4}},
        {"mirai", {11, 1.72e-3, 1.31e-2, 4.71, 15, 1.41e-4, 0.98e-4, 0.80, 200, 8, 0.61e-4, 16, 0.46e-3, 461, 5, 0.89e-4}},
        {"mitm", {14, 1.40e-3, 1.01e-2, 0.06, 12, 2.03e-4, 1.16e-4, 0.91, 200, 8, 3.00e-4, 11, 2.66e-3, 200, 5, 0.52e-4}},
    };
    return p;
}

void check_positive(std::size_t v, const std::string& what) {
    if (v == 0) throw ConfigError(what + " must be positive");
}

void check_widths(const std::vector<std::size_t>& widths, const std::string& what) {
    if (widths.empty()) throw ConfigError(what + " needs at least one layer");
    for (auto w : widths) check_positive(w, what + " width");
}

}  // namespace

GenConfig resolve_config(Variant variant, const std::string& preset, const TableSchema& schema) {
    GenConfig c;
    c.variant = variant;
    c.preset = preset;
    if (preset != "default") {
        const auto it = attack_presets().find(preset);
        if (it == attack_presets().end()) {
            std::string valid;
            for (const auto& name : preset_names()) valid += (valid.empty() ? "" : ", ") + name;
            throw ConfigError("unknown preset '" + preset + "' (valid: " + valid + ")");
        }
        const AttackPreset& p = it->second;
        c.vae.latent_dim = p.vae_latent;
        c.vae.learning_rate = p.vae_lr;
        c.vae.kl_weight = p.vae_kl;
        c.vae.clip_norm = p.vae_clip;
        c.gan.noise_dim = p.gan_noise;
        c.gan.generator_lr = p.gan_g_lr;
        c.gan.discriminator_lr = p.gan_d_lr;
        c.gan.real_label = p.gan_smoothing;
        c.dm.steps = p.dm_steps;
        c.dm.denoiser.depth = p.dm_depth;
        c.dm.train.learning_rate = p.dm_lr;
        c.ldm.ae.latent_dim = p.ldm_latent;
        c.ldm.ae.learning_rate = p.ldm_ae_lr;
        c.ldm.diffusion.steps = p.ldm_steps;
        c.ldm.diffusion.denoiser.depth = p.ldm_depth;
        c.ldm.diffusion.train.learning_rate = p.ldm_lr;
    }
    finalize_config(c, schema);
    return c;
}

void finalize_config(GenConfig& c, const TableSchema& schema) {
    const std::size_t quarter = default_latent_dim(schema);
    if (c.vae.latent_dim == 0) c.vae.latent_dim = quarter;
    if (c.gan.noise_dim == 0) c.gan.noise_dim = quarter;
    if (c.ldm.ae.latent_dim == 0) c.ldm.ae.latent_dim = quarter;

    check_positive(c.smote.k, "smote k");
    if (c.smote.hamming_weight < 0.0) throw ConfigError("smote hamming weight must be non-negative");
    check_widths(c.vae.encoder_widths, "vae encoder");
    check_widths(c.vae.decoder_widths, "vae decoder");
    check_positive(c.vae.batch_size, "vae batch size");
    if (c.vae.kl_weight < 0.0) throw ConfigError("vae KL weight must be non-negative");
    check_widths(c.gan.generator_widths, "gan generator");
    check_widths(c.gan.discriminator_widths, "gan discriminator");
    check_positive(c.gan.batch_size, "gan batch size");
    if (!(c.gan.real_label > 0.0 && c.gan.real_label <= 1.0)) throw ConfigError("gan real label must lie in (0, 1]");
    for (const DmConfig* d : {&c.dm, &c.ldm.diffusion}) {
        check_positive(d->steps, "diffusion steps");
        check_positive(d->denoiser.depth, "denoiser depth");
        check_positive(d->denoiser.hidden_width, "denoiser width");
        check_positive(d->train.batch_size, "diffusion batch size");
    }
    if (c.variant == Variant::ldm && c.ldm.ae.latent_dim >= schema.feature_count())
        throw ConfigError("ldm latent dimension " + std::to_string(c.ldm.ae.latent_dim) +
                          " must be smaller than the feature count " + std::to_string(schema.feature_count()));
}

// ------------------------------------------------------------------ smote ----

SmoteModel smote_fit(const Dataset& train, const SmoteConfig& config) {
    const std::size_t n = train.rows();
    if (n < config.k + 1)
        throw FitError("smote needs at least k + 1 = " + std::to_string(config.k + 1) + " rows, got " + std::to_string(n));
    const auto cont = train.schema.continuous_indices();
    const auto disc = train.schema.discrete_indices();
    SmoteModel m;
    m.cells = train.cells;
    m.neighbors.resize(n);
    std::vector<std::pair<double, std::size_t>> dist(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ri = static_cast<Eigen::Index>(i);
        std::size_t slot = 0;
        for (std::size_t o = 0; o < n; ++o) {
            if (o == i) continue;
            const auto ro = static_cast<Eigen::Index>(o);
            double sq = 0.0;
            for (auto j : cont) {
                const double diff = train.cells(ri, static_cast<Eigen::Index>(j)) - train.cells(ro, static_cast<Eigen::Index>(j));
                sq += diff * diff;
            }
            double ham = 0.0;
            for (auto j : disc)
                if (train.cells(ri, static_cast<Eigen::Index>(j)) != train.cells(ro, static_cast<Eigen::Index>(j))) ham += 1.0;
            dist[slot++] = {std::sqrt(sq) + config.hamming_weight * ham, o};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(config.k), dist.end());
        for (std::size_t q = 0; q < config.k; ++q) m.neighbors[i].push_back(dist[q].second);
    }
    return m;
}

Matrix smote_sample(const SmoteModel& model, const TableSchema& schema, const SmoteConfig& config, std::size_t n,
                    std::uint64_t seed) {
    if (n == 0) throw DomainError("smote sample count must be positive");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> base_dist(0, static_cast<std::size_t>(model.cells.rows()) - 1);
    std::uniform_int_distribution<std::size_t> nb_dist(0, config.k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto cont = schema.continuous_indices();
    const auto disc = schema.discrete_indices();
    Matrix out(static_cast<Eigen::Index>(n), model.cells.cols());
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const std::size_t base = base_dist(rng);
        const std::size_t nb = model.neighbors[base][nb_dist(rng)];
        const double u = unit(rng);
        const auto b = static_cast<Eigen::Index>(base);
        const auto o = static_cast<Eigen::Index>(nb);
        for (auto j : cont) {
            const auto c = static_cast<Eigen::Index>(j);
            out(r, c) = model.cells(b, c) + u * (model.cells(o, c) - model.cells(b, c));
        }
        for (auto j : disc) {
            const auto c = static_cast<Eigen::Index>(j);
            out(r, c) = unit(rng) < u ? model.cells(o, c) : model.cells(b, c);
        }
    }
    return out;
}

// -------------------------------------------------------------------- vae ----

namespace {

std::vector<LayerSpec> relu_stack(const std::vector<std::size_t>& widths, std::size_t out_width) {
    std::vector<LayerSpec> specs;
    for (auto w : widths) specs.push_back({w, Activation::relu});
    specs.push_back({out_width, Activation::identity});
    return specs;
}

void require_finite(double loss, const std::string& what, std::size_t epoch, std::size_t batch) {
    if (!std::isfinite(loss))
        throw TrainingError(what + ": non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch + 1));
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double gaussian_kl(const Matrix& mu, const Matrix& logvar, Matrix* grad_mu, Matrix* grad_logvar) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) throw ShapeError("mean and log variance differ in shape");
    if (mu.rows() == 0) return 0.0;
    const double inv_n = 1.0 / static_cast<double>(mu.rows());
    const Matrix var = logvar.array().exp().matrix();
    const double kl = 0.5 * (mu.array().square() + var.array() - 1.0 - logvar.array()).sum() * inv_n;
    if (grad_mu) *grad_mu = mu * inv_n;
    if (grad_logvar) *grad_logvar = 0.5 * (var.array() - 1.0).matrix() * inv_n;
    return kl;
}

double vae_batch_gradient(VaeModel& model, const Matrix& relaxed, const Matrix& cells, const Matrix& noise,
                          double kl_weight, std::vector<double>& grads) {
    const auto dz = static_cast<Eigen::Index>(model.latent_dim);
    const ForwardTrace enc = model.encoder.forward(relaxed);
    const Matrix mu = enc.output().leftCols(dz);
    const Matrix logvar = enc.output().rightCols(dz);
    const Matrix stdev = (0.5 * logvar.array()).exp().matrix();
    const Matrix z = mu + stdev.cwiseProduct(noise);
    const ForwardTrace dec = model.decoder.forward(z);
    const Matrix outputs = model.heads.activate(dec.output());
    Matrix g_mu, g_logvar;
    const double loss = model.heads.loss(outputs, cells) + kl_weight * gaussian_kl(mu, logvar, &g_mu, &g_logvar);

    Matrix z_grad;
    const Gradients dec_grads = model.decoder.backward(dec, model.heads.logit_gradient(outputs, cells), &z_grad);
    Matrix enc_out_grad(relaxed.rows(), 2 * dz);
    enc_out_grad.leftCols(dz) = z_grad + kl_weight * g_mu;
    enc_out_grad.rightCols(dz) =
        (0.5 * z_grad.array() * noise.array() * stdev.array()).matrix() + kl_weight * g_logvar;
    const Gradients enc_grads = model.encoder.backward(enc, enc_out_grad);
    grads.clear();
    append_gradients(enc_grads, grads);
    append_gradients(dec_grads, grads);
    return loss;
}

VaeModel vae_fit(const Dataset& train, const VaeConfig& config, std::uint64_t seed, FitReport* report) {
    if (train.rows() == 0) throw FitError("vae training set is empty");
    VaeModel m;
    m.heads = MixedHeads(train.schema);
    m.latent_dim = config.latent_dim == 0 ? default_latent_dim(train.schema) : config.latent_dim;
    Rng rng(seed);
    m.encoder = DenseNet::make(train.schema.relaxed_width(), relu_stack(config.encoder_widths, 2 * m.latent_dim), rng);
    m.decoder = DenseNet::make(m.latent_dim, relu_stack(config.decoder_widths, m.heads.output_width()), rng);

    const Matrix relaxed = relaxed_matrix(train);
    ParameterSet params;
    params.add(m.encoder);
    params.add(m.decoder);
    Adam adam({config.learning_rate}, params.size());
    std::vector<double> grads;
    const std::size_t n = train.rows();
    const std::size_t batch = std::min(config.batch_size, n);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double total = 0.0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < n; start += batch, ++b) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
            const Matrix xb = gather_rows(relaxed, idx);
            const Matrix noise = standard_normal(xb.rows(), static_cast<Eigen::Index>(m.latent_dim), rng);
            const double loss = vae_batch_gradient(m, xb, gather_rows(train.cells, idx), noise, config.kl_weight, grads);
            require_finite(loss, "vae", epoch, b);
            if (config.clip_norm > 0.0) clip_gradients(grads, config.clip_norm);
            adam.step(params.views(), grads);
            total += loss * static_cast<double>(idx.size());
        }
        if (report) report->loss.push_back(total / static_cast<double>(n));
    }
    return m;
}

Matrix vae_sample(const VaeModel& model, const VaeConfig& config, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("vae sample count must be positive");
    Rng rng(seed);
    const Matrix z = standard_normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.latent_dim), rng);
    const Matrix outputs = model.heads.activate(model.decoder.predict(z));
    if (!outputs.allFinite()) throw SamplingError("vae decoder produced non-finite values");
    return model.heads.decode(outputs, config.stochastic_decode, &rng);
}

// -------------------------------------------------------------------- gan ----

namespace {

// Binary cross-entropy on logits, averaged over rows, with its logit gradient.
double bce_with_logits(const Matrix& logits, const Matrix& targets, Matrix& grad) {
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    double loss = 0.0;
    grad.resize(logits.rows(), 1);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double l = logits(i, 0);
        const double y = targets(i, 0);
        loss += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
        grad(i, 0) = (1.0 / (1.0 + std::exp(-l)) - y) * inv_n;
    }
    return loss * inv_n;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
}

Matrix gan_fake(const GanModel& m, const Matrix& noise, ForwardTrace* trace, Matrix* outputs) {
    ForwardTrace t = m.generator.forward(noise);
    Matrix out = m.heads.activate(t.output());
    Matrix relaxed = m.heads.to_relaxed(out);
    if (trace) *trace = std::move(t);
    if (outputs) *outputs = std::move(out);
    return relaxed;
}

}  // namespace

GanModel gan_fit(const Dataset& train, const GanConfig& config, std::uint64_t seed, FitReport* report) {
    if (train.rows() == 0) throw FitError("gan training set is empty");
    GanModel m;
    m.heads = MixedHeads(train.schema);
    m.noise_dim = config.noise_dim == 0 ? default_latent_dim(train.schema) : config.noise_dim;
    Rng rng(seed);
    m.generator = DenseNet::make(m.noise_dim, relu_stack(config.generator_widths, m.heads.output_width()), rng);
    m.discriminator = DenseNet::make(train.schema.relaxed_width(), relu_stack(config.discriminator_widths, 1), rng);

    const Matrix relaxed = relaxed_matrix(train);
    ParameterSet g_params, d_params;
    g_params.add(m.generator);
    d_params.add(m.discriminator);
    Adam g_adam({config.generator_lr, config.beta1}, g_params.size());
    Adam d_adam({config.discriminator_lr, config.beta1}, d_params.size());
    const double floor = 0.5 * binary_entropy(config.real_label);
    const auto noise_cols = static_cast<Eigen::Index>(m.noise_dim);
    const std::size_t n = train.rows();
    const std::size_t batch = std::min(config.batch_size, n);
    std::vector<double> grads;
    std::size_t collapsed = 0;
    bool warned = false;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double d_total = 0.0, g_total = 0.0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < n; start += batch, ++b) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
            const auto rows = static_cast<Eigen::Index>(idx.size());
            Matrix both(2 * rows, relaxed.cols());
            both.topRows(rows) = gather_rows(relaxed, idx);
            both.bottomRows(rows) = gan_fake(m, standard_normal(rows, noise_cols, rng), nullptr, nullptr);
            Matrix targets(2 * rows, 1);
            targets.topRows(rows).setConstant(config.real_label);
            targets.bottomRows(rows).setZero();
            const ForwardTrace dt = m.discriminator.forward(both);
            Matrix logit_grad;
            const double d_loss = bce_with_logits(dt.output(), targets, logit_grad);
            require_finite(d_loss, "gan discriminator", epoch, b);
            grads.clear();
            append_gradients(m.discriminator.backward(dt, logit_grad), grads);
            d_adam.step(d_params.views(), grads);
            d_total += d_loss * static_cast<double>(rows);

            if (!config.train_generator) continue;
            ForwardTrace gt;
            Matrix outputs;
            const Matrix fake = gan_fake(m, standard_normal(rows, noise_cols, rng), &gt, &outputs);
            const ForwardTrace ft = m.discriminator.forward(fake);
            const double g_loss = bce_with_logits(ft.output(), Matrix::Ones(rows, 1), logit_grad);
            require_finite(g_loss, "gan generator", epoch, b);
            Matrix fake_grad;
            m.discriminator.backward(ft, logit_grad, &fake_grad);
            const Matrix out_grad = m.heads.relaxed_grad_to_outputs(fake_grad);
            grads.clear();
            append_gradients(m.generator.backward(gt, m.heads.backward(outputs, out_grad)), grads);
            g_adam.step(g_params.views(), grads);
            g_total += g_loss * static_cast<double>(rows);
        }
        const double d_epoch = d_total / static_cast<double>(n);
        collapsed = d_epoch - floor < 1e-4 ? collapsed + 1 : 0;
        if (report) {
            report->discriminator_loss.push_back(d_epoch);
            report->loss.push_back(g_total / static_cast<double>(n));
            if (collapsed >= 50 && !warned) {
                report->warnings.push_back("gan: discriminator loss collapsed for 50 consecutive epochs (epoch " +
                                           std::to_string(epoch + 1) + "); training may have diverged");
                warned = true;
            }
        }
    }
    return m;
}

Matrix gan_sample(const GanModel& model, const GanConfig& config, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("gan sample count must be positive");
    Rng rng(seed);
    const Matrix noise = standard_normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.noise_dim), rng);
    const Matrix outputs = model.heads.activate(model.generator.predict(noise));
    if (!outputs.allFinite()) throw SamplingError("gan generator produced non-finite values");
    return model.heads.decode(outputs, config.stochastic_decode, &rng);
}

double discriminator_accuracy(const GanModel& model, const Matrix& real_relaxed, std::size_t n_fake, std::uint64_t seed) {
    Rng rng(seed);
    const Matrix fake = gan_fake(model, standard_normal(static_cast<Eigen::Index>(n_fake),
                                                        static_cast<Eigen::Index>(model.noise_dim), rng),
                                 nullptr, nullptr);
    const Matrix real_logits = model.discriminator.predict(real_relaxed);
    const Matrix fake_logits = model.discriminator.predict(fake);
    const auto correct = (real_logits.array() > 0.0).count() + (fake_logits.array() <= 0.0).count();
    const auto total = real_logits.rows() + fake_logits.rows();
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

// --------------------------------------------------------------- diffusion ----

DmModel dm_fit(const Dataset& train, const DmConfig& config, std::uint64_t seed, FitReport* report) {
    if (train.rows() == 0) throw FitError("dm training set is empty");
    const Matrix relaxed = relaxed_matrix(train);
    DmModel m;
    m.schedule = linear_schedule(config.steps, config.beta_start, config.beta_end);
    m.denoiser = Denoiser(static_cast<std::size_t>(relaxed.cols()), config.denoiser, derive_seed(seed, 1));
    auto curve = train_denoiser(m.denoiser, relaxed, m.schedule, config.train, derive_seed(seed, 2));
    if (report) report->loss = std::move(curve);
    return m;
}

Matrix dm_sample_relaxed(const DmModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("dm sample count must be positive");
    return sample(model.denoiser, model.schedule, n, seed);
}

Matrix dm_sample(const DmModel& model, const TableSchema& schema, std::size_t n, std::uint64_t seed) {
    return snap_relaxed(dm_sample_relaxed(model, n, seed), schema).cells;
}

namespace {

template <typename F>
auto staged(const char* stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.category(), std::string("ldm ") + stage + " stage: " + e.what());
    }
}

}  // namespace

LdmModel ldm_fit(const Dataset& train, const LdmConfig& config, std::uint64_t seed, FitReport* report) {
    if (train.rows() == 0) throw FitError("ldm training set is empty");
    LdmModel m;
    m.ae = staged("autoencoder", [&] { return build_ae(train.schema, config.ae, derive_seed(seed, 1)); });
    TrainCurve ae_curve = staged("autoencoder", [&] { return train_ae(m.ae, train, nullptr, derive_seed(seed, 2)); });
    const Matrix latents = staged("latent normalisation", [&] {
        fit_latent_norm(m.ae, train);
        return normalize_latents(m.ae, encode(m.ae, train));
    });
    std::vector<double> curve = staged("diffusion", [&] {
        m.schedule = linear_schedule(config.diffusion.steps, config.diffusion.beta_start, config.diffusion.beta_end);
        m.denoiser = Denoiser(m.ae.latent_dim(), config.diffusion.denoiser, derive_seed(seed, 3));
        return train_denoiser(m.denoiser, latents, m.schedule, config.diffusion.train, derive_seed(seed, 4));
    });
    if (report) {
        report->autoencoder_loss = std::move(ae_curve.train_loss);
        report->loss = std::move(curve);
    }
    return m;
}

Matrix ldm_sample(const LdmModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("ldm sample count must be positive");
    if (!model.ae.latent_fitted()) throw SamplingError("ldm latent normalisation statistics are missing");
    if (model.ae.latent_std.minCoeff() < 1e-12) throw SamplingError("ldm latent space is degenerate (zero spread)");
    const Matrix z = sample(model.denoiser, model.schedule, n, seed);
    Rng rng(derive_seed(seed, 1));
    return decode(model.ae, denormalize_latents(model.ae, z), &rng).cells;
}

// --------------------------------------------------------------- dispatch ----

std::uint64_t data_fingerprint(const Dataset& data) {
    std::uint64_t h = 14695981039346656037ull;
    TableSchema features = data.schema;
    features.label_column.clear();
    features.class_labels.clear();
    const json schema = features;
    const std::string s = schema.dump();
    h = fnv1a(s.data(), s.size(), h);
    for (Eigen::Index i = 0; i < data.cells.rows(); ++i) {
        const std::uint64_t r = row_fingerprint(data.cells, i);
        h = fnv1a(&r, sizeof r, h);
    }
    return h;
}

Generator fit_generator(const Dataset& train, GenConfig config, std::uint64_t seed) {
    if (train.stage != DataStage::encoded) throw DomainError("generators are fitted on encoded (preprocessed) rows");
    Generator g;
    if (train.labeled()) {
        const int first = train.labels.front();
        if (std::any_of(train.labels.begin(), train.labels.end(), [&](int l) { return l != first; }))
            throw FitError("a generator is fitted on the rows of a single class");
        g.class_label = first;
    }
    finalize_config(config, train.schema);
    g.config = config;
    g.schema = train.schema;
    g.provenance = {config.variant, config.preset, seed, data_fingerprint(train), train.rows()};

    const auto start = std::chrono::steady_clock::now();
    switch (config.variant) {
        case Variant::smote: g.model = smote_fit(train, config.smote); break;
        case Variant::vae: g.model = vae_fit(train, config.vae, seed, &g.report); break;
        case Variant::gan: g.model = gan_fit(train, config.gan, seed, &g.report); break;
        case Variant::dm: g.model = dm_fit(train, config.dm, seed, &g.report); break;
        case Variant::ldm: g.model = ldm_fit(train, config.ldm, seed, &g.report); break;
    }
    g.report.seconds = elapsed_seconds(start);
    return g;
}

SyntheticBatch generate(const Generator& gen, std::size_t n, std::uint64_t seed) {
    SyntheticBatch batch;
    batch.provenance = gen.provenance;
    batch.sample_seed = seed;
    batch.data.schema = gen.schema;
    batch.data.stage = DataStage::encoded;
    batch.data.cells.resize(0, static_cast<Eigen::Index>(gen.schema.feature_count()));
    if (n > 0) {
        batch.data.cells = std::visit(
            [&](const auto& m) -> Matrix {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, SmoteModel>) return smote_sample(m, gen.schema, gen.config.smote, n, seed);
                else if constexpr (std::is_same_v<T, VaeModel>) return vae_sample(m, gen.config.vae, n, seed);
                else if constexpr (std::is_same_v<T, GanModel>) return gan_sample(m, gen.config.gan, n, seed);
                else if constexpr (std::is_same_v<T, DmModel>) return dm_sample(m, gen.schema, n, seed);
                else return ldm_sample(m, n, seed);
            },
            gen.model);
    }
    if (gen.class_label) batch.data.labels.assign(n, *gen.class_label);
    return batch;
}

Dataset to_raw(const Generator& gen, const SyntheticBatch& batch) {
    if (!gen.preprocess) throw ConfigError("generator carries no preprocessing state; raw output is unavailable");
    Dataset raw = invert_preprocess(*gen.preprocess, batch.data);
    raw.labels = batch.data.labels;
    return raw;
}

// ------------------------------------------------------------------- json ----

namespace {

json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ShapeError("stored matrix has the wrong size");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace

void to_json(json& j, const SmoteConfig& c) { j = {{"k", c.k}, {"hamming_weight", c.hamming_weight}}; }

void from_json(const json& j, SmoteConfig& c) {
    c.k = j.value("k", c.k);
    c.hamming_weight = j.value("hamming_weight", c.hamming_weight);
}

void to_json(json& j, const VaeConfig& c) {
    j = {{"encoder_widths", c.encoder_widths}, {"decoder_widths", c.decoder_widths}, {"latent_dim", c.latent_dim},
         {"kl_weight", c.kl_weight},           {"clip_norm", c.clip_norm},           {"learning_rate", c.learning_rate},
         {"epochs", c.epochs},                 {"batch_size", c.batch_size},         {"stochastic_decode", c.stochastic_decode}};
}

void from_json(const json& j, VaeConfig& c) {
    c.encoder_widths = j.value("encoder_widths", c.encoder_widths);
    c.decoder_widths = j.value("decoder_widths", c.decoder_widths);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.stochastic_decode = j.value("stochastic_decode", c.stochastic_decode);
}

void to_json(json& j, const GanConfig& c) {
    j = {{"generator_widths", c.generator_widths},
         {"discriminator_widths", c.discriminator_widths},
         {"noise_dim", c.noise_dim},
         {"generator_lr", c.generator_lr},
         {"discriminator_lr", c.discriminator_lr},
         {"beta1", c.beta1},
         {"real_label", c.real_label},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"train_generator", c.train_generator},
         {"stochastic_decode", c.stochastic_decode}};
}

void from_json(const json& j, GanConfig& c) {
    c.generator_widths = j.value("generator_widths", c.generator_widths);
    c.discriminator_widths = j.value("discriminator_widths", c.discriminator_widths);
    c.noise_dim = j.value("noise_dim", c.noise_dim);
    c.generator_lr = j.value("generator_lr", c.generator_lr);
    c.discriminator_lr = j.value("discriminator_lr", c.discriminator_lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.real_label = j.value("real_label", c.real_label);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.train_generator = j.value("train_generator", c.train_generator);
    c.stochastic_decode = j.value("stochastic_decode", c.stochastic_decode);
}

void to_json(json& j, const DmConfig& c) {
    j = {{"steps", c.steps},
         {"beta_start", c.beta_start},
         {"beta_end", c.beta_end},
         {"denoiser", c.denoiser},
         {"train", c.train}};
}

void from_json(const json& j, DmConfig& c) {
    c.steps = j.value("steps", c.steps);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    if (j.contains("denoiser")) from_json(j.at("denoiser"), c.denoiser);
    if (j.contains("train")) from_json(j.at("train"), c.train);
}

void to_json(json& j, const GenConfig& c) {
    j = {{"variant", to_string(c.variant)},
         {"preset", c.preset},
         {"smote", c.smote},
         {"vae", c.vae},
         {"gan", c.gan},
         {"dm", c.dm},
         {"ldm", {{"ae", c.ldm.ae}, {"diffusion", c.ldm.diffusion}}}};
}

void from_json(const json& j, GenConfig& c) {
    if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.preset = j.value("preset", c.preset);
    if (j.contains("smote")) from_json(j.at("smote"), c.smote);
    if (j.contains("vae")) from_json(j.at("vae"), c.vae);
    if (j.contains("gan")) from_json(j.at("gan"), c.gan);
    if (j.contains("dm")) from_json(j.at("dm"), c.dm);
    if (j.contains("ldm")) {
        const json& l = j.at("ldm");
        if (l.contains("ae")) from_json(l.at("ae"), c.ldm.ae);
        if (l.contains("diffusion")) from_json(l.at("diffusion"), c.ldm.diffusion);
    }
}

namespace {

json model_to_json(const GeneratorModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SmoteModel>) return {{"cells", matrix_to_json(m.cells)}, {"neighbors", m.neighbors}};
            else if constexpr (std::is_same_v<T, VaeModel>)
                return {{"encoder", m.encoder}, {"decoder", m.decoder}, {"latent_dim", m.latent_dim}};
            else if constexpr (std::is_same_v<T, GanModel>)
                return {{"generator", m.generator}, {"discriminator", m.discriminator}, {"noise_dim", m.noise_dim}};
            else if constexpr (std::is_same_v<T, DmModel>) return {{"schedule", m.schedule}, {"denoiser", m.denoiser}};
            else return {{"autoencoder", m.ae}, {"schedule", m.schedule}, {"denoiser", m.denoiser}};
        },
        model);
}

GeneratorModel model_from_json(const json& j, Variant v, const TableSchema& schema) {
    switch (v) {
        case Variant::smote: {
            SmoteModel m;
            m.cells = matrix_from_json(j.at("cells"));
            m.neighbors = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
            return m;
        }
        case Variant::vae: {
            VaeModel m;
            m.encoder = j.at("encoder").get<DenseNet>();
            m.decoder = j.at("decoder").get<DenseNet>();
            m.latent_dim = j.at("latent_dim").get<std::size_t>();
            m.heads = MixedHeads(schema);
            return m;
        }
        case Variant::gan: {
            GanModel m;
            m.generator = j.at("generator").get<DenseNet>();
            m.discriminator = j.at("discriminator").get<DenseNet>();
            m.noise_dim = j.at("noise_dim").get<std::size_t>();
            m.heads = MixedHeads(schema);
            return m;
        }
        case Variant::dm: {
            DmModel m;
            m.schedule = j.at("schedule").get<DiffusionSchedule>();
            m.denoiser = j.at("denoiser").get<Denoiser>();
            return m;
        }
        case Variant::ldm: {
            LdmModel m;
            m.ae = j.at("autoencoder").get<AEModel>();
            m.schedule = j.at("schedule").get<DiffusionSchedule>();
            m.denoiser = j.at("denoiser").get<Denoiser>();
            return m;
        }
    }
    throw ConfigError("unknown generator variant");
}

}  // namespace

void to_json(json& j, const Generator& g) {
    j = {{"format", "netsynth-generator"},
         {"version", 1},
         {"config", g.config},
         {"schema", g.schema},
         {"class_label", g.class_label ? json(*g.class_label) : json(nullptr)},
         {"preprocess", g.preprocess ? json(*g.preprocess) : json(nullptr)},
         {"provenance",
          {{"variant", to_string(g.provenance.variant)},
           {"preset", g.provenance.preset},
           {"fit_seed", g.provenance.fit_seed},
           {"fit_fingerprint", g.provenance.fit_fingerprint},
           {"fit_rows", g.provenance.fit_rows}}},
         {"report",
          {{"loss", g.report.loss},
           {"autoencoder_loss", g.report.autoencoder_loss},
           {"discriminator_loss", g.report.discriminator_loss},
           {"warnings", g.report.warnings}}},
         {"model", model_to_json(g.model)}};
}

void from_json(const json& j, Generator& g) {
    if (j.value("format", std::string()) != "netsynth-generator") throw ConfigError("file is not a generator container");
    g = Generator{};
    from_json(j.at("config"), g.config);
    g.schema = j.at("schema").get<TableSchema>();
    if (!j.at("class_label").is_null()) g.class_label = j.at("class_label").get<int>();
    if (!j.at("preprocess").is_null()) g.preprocess = j.at("preprocess").get<PreprocessState>();
    const json& p = j.at("provenance");
    g.provenance.variant = variant_from_string(p.at("variant").get<std::string>());
    g.provenance.preset = p.at("preset").get<std::string>();
    g.provenance.fit_seed = p.at("fit_seed").get<std::uint64_t>();
    g.provenance.fit_fingerprint = p.at("fit_fingerprint").get<std::uint64_t>();
    g.provenance.fit_rows = p.at("fit_rows").get<std::size_t>();
    const json& r = j.at("report");
    g.report.loss = r.at("loss").get<std::vector<double>>();
    g.report.autoencoder_loss = r.at("autoencoder_loss").get<std::vector<double>>();
    g.report.discriminator_loss = r.at("discriminator_loss").get<std::vector<double>>();
    g.report.warnings = r.at("warnings").get<std::vector<std::string>>();
    g.model = model_from_json(j.at("model"), g.config.variant, g.schema);
}

namespace {

bool wants_text(const std::string& path) {
    return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

}  // namespace

void save_generator(const Generator& gen, const std::string& path) {
    const json j = gen;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write generator to " + path);
    if (wants_text(path)) {
        out << j.dump(1);
    } else {
        const auto bytes = json::to_cbor(j);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw IngestionError("failed writing generator to " + path);
}

Generator load_generator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open generator file " + path);
    json j;
    try {
        if (wants_text(path)) {
            j = json::parse(in);
        } else {
            const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            j = json::from_cbor(bytes);
        }
    } catch (const json::exception& e) {
        throw IngestionError("generator file " + path + " is corrupt: " + e.what());
    }
    return j.get<Generator>();
}

}  // namespace netsynth
