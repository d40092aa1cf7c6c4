#include <cmath>
#include <random>

#include "doctest.h"
#include "netsynth/autoencoder.hpp"
#include "netsynth/errors.hpp"
#include "oracles.hpp"

using namespace netsynth;

namespace {

TableSchema mixed_schema(std::size_t continuous, std::vector<std::size_t> cards) {
    TableSchema s;
    for (std::size_t j = 0; j < continuous; ++j) s.features.push_back({"c" + std::to_string(j), FeatureKind::continuous, 0});
    for (std::size_t j = 0; j < cards.size(); ++j)
        s.features.push_back({"d" + std::to_string(j), FeatureKind::discrete, cards[j]});
    return s;
}

// Two latent groups; the discrete columns follow the group, the continuous
// columns are noisy linear functions of a group-dependent factor.
Dataset mixed_encoded(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Dataset d;
    d.schema = mixed_schema(3, {2, 3});
    d.stage = DataStage::encoded;
    d.cells.resize(static_cast<Eigen::Index>(rows), 5);
    for (Eigen::Index i = 0; i < d.cells.rows(); ++i) {
        const bool grp = coin(rng);
        const double f = g(rng) + (grp ? 1.5 : -1.5);
        d.cells(i, 0) = f + 0.1 * g(rng);
        d.cells(i, 1) = -0.5 * f + 0.1 * g(rng);
        d.cells(i, 2) = g(rng) * 0.3 + (grp ? 1.0 : -1.0);
        d.cells(i, 3) = grp ? 1.0 : 0.0;
        d.cells(i, 4) = grp ? 2.0 : (coin(rng) ? 0.0 : 1.0);
    }
    return d;
}

Matrix random_logits(Eigen::Index rows, Eigen::Index cols, Rng& rng) { return standard_normal(rows, cols, rng); }

}  // namespace

TEST_CASE("head layout follows the schema") {
    const MixedHeads h(mixed_schema(2, {2, 4, 1}));
    CHECK(h.output_width() == 2 + 1 + 4 + 1);
    CHECK(h.relaxed_width() == 2 + 2 + 4 + 1);
    CHECK(h.blocks()[0].sigmoid());
    CHECK_FALSE(h.blocks()[1].sigmoid());
    CHECK(h.blocks()[2].sigmoid());
}

TEST_CASE("perfect reconstruction has zero loss in both terms") {
    const TableSchema s = mixed_schema(2, {2, 3});
    Matrix cells(2, 4);
    cells << 0.5, -1.0, 1, 2, 1.5, 2.0, 0, 0;
    Matrix outputs(2, 2 + 1 + 3);
    outputs << 0.5, -1.0, 1, 0, 0, 1, 1.5, 2.0, 0, 1, 0, 0;
    ReconstructionParts parts;
    CHECK(ae_loss(outputs, cells, s, &parts) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(parts.continuous == 0.0);
    CHECK(parts.discrete < 1e-10);
}

TEST_CASE("binary predictions of one half cost ln 2") {
    const TableSchema s = mixed_schema(1, {2, 2});
    Matrix cells(3, 3);
    cells << 0.3, 0, 1, -0.7, 1, 1, 2.0, 0, 0;
    Matrix outputs(3, 3);
    outputs << 0.3, 0.5, 0.5, -0.7, 0.5, 0.5, 2.0, 0.5, 0.5;
    ReconstructionParts parts;
    CHECK(ae_loss(outputs, cells, s, &parts) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(parts.continuous == 0.0);
}

TEST_CASE("probabilities outside the unit interval are rejected") {
    const TableSchema s = mixed_schema(0, {2});
    Matrix cells(1, 1);
    cells << 1;
    Matrix outputs(1, 1);
    outputs << 1.2;
    CHECK_THROWS_AS(ae_loss(outputs, cells, s), NumericError);
}

TEST_CASE("fused logit gradient matches finite differences of the loss") {
    const MixedHeads h(mixed_schema(2, {2, 4}));
    Rng rng(1);
    Matrix logits = random_logits(6, static_cast<Eigen::Index>(h.output_width()), rng);
    Matrix cells(6, 4);
    std::uniform_int_distribution<int> b(0, 1), c(0, 3);
    for (Eigen::Index i = 0; i < 6; ++i) cells.row(i) << rng() % 7 * 0.3 - 1.0, 0.25 * i, b(rng), c(rng);
    const Matrix analytic = h.logit_gradient(h.activate(logits), cells);
    std::span<double> params(logits.data(), static_cast<std::size_t>(logits.size()));
    const auto numeric = oracle::finite_difference([&] { return h.loss(h.activate(logits), cells); }, params);
    std::span<const double> a(analytic.data(), static_cast<std::size_t>(analytic.size()));
    CHECK(oracle::max_relative_error(a, numeric, 1e-6) < 1e-4);
}

TEST_CASE("head backward matches finite differences through sigmoid and softmax") {
    const MixedHeads h(mixed_schema(1, {2, 3}));
    Rng rng(2);
    Matrix logits = random_logits(4, static_cast<Eigen::Index>(h.output_width()), rng);
    const Matrix weights = random_logits(4, static_cast<Eigen::Index>(h.output_width()), rng);
    auto objective = [&] { return (h.activate(logits).array() * weights.array()).sum(); };
    const Matrix analytic = h.backward(h.activate(logits), weights);
    std::span<double> params(logits.data(), static_cast<std::size_t>(logits.size()));
    const auto numeric = oracle::finite_difference(objective, params);
    std::span<const double> a(analytic.data(), static_cast<std::size_t>(analytic.size()));
    CHECK(oracle::max_relative_error(a, numeric, 1e-6) < 1e-4);
}

TEST_CASE("relaxed gradient mapping is the adjoint of the relaxed view") {
    const MixedHeads h(mixed_schema(2, {2, 3}));
    Rng rng(3);
    const Matrix outputs = h.activate(random_logits(5, static_cast<Eigen::Index>(h.output_width()), rng));
    const Matrix rg = random_logits(5, static_cast<Eigen::Index>(h.relaxed_width()), rng);
    const Matrix delta = 1e-6 * random_logits(5, static_cast<Eigen::Index>(h.output_width()), rng);
    // to_relaxed is affine, so the first-order change is exact
    const double lhs = ((h.to_relaxed(outputs + delta) - h.to_relaxed(outputs)).array() * rg.array()).sum();
    const double rhs = (delta.array() * h.relaxed_grad_to_outputs(rg).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
}

TEST_CASE("stochastic head decoding follows the probabilities") {
    const MixedHeads h(mixed_schema(0, {2, 3}));
    Matrix outputs(20000, 4);
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) outputs.row(i) << 0.3, 0.2, 0.5, 0.3;
    Rng rng(4);
    const Matrix cells = h.decode(outputs, true, &rng);
    CHECK((cells.col(0).array() == 1.0).cast<double>().mean() == doctest::Approx(0.3).epsilon(0.05));
    CHECK((cells.col(1).array() == 1.0).cast<double>().mean() == doctest::Approx(0.5).epsilon(0.05));
    CHECK((cells.col(1).array() == 2.0).cast<double>().mean() == doctest::Approx(0.3).epsilon(0.05));
    const Matrix det = h.decode(outputs, false, nullptr);
    CHECK(det(0, 0) == 0.0);
    CHECK(det(0, 1) == 1.0);
}

TEST_CASE("autoencoder layer shapes for four continuous and two binary features") {
    AEConfig config;
    config.latent_dim = 3;
    const AEModel m = build_ae(mixed_schema(4, {2, 2}), config, 1);
    CHECK(m.numeric_branch.input_dim() == 4);
    CHECK(m.categorical_branch.input_dim() == 4);
    CHECK(m.numeric_branch.output_dim() == 32);
    CHECK(m.categorical_branch.output_dim() == 16);
    CHECK(m.encoder_trunk.input_dim() == 48);
    CHECK(m.encoder_trunk.layers()[0].output_dim() == 32);
    CHECK(m.encoder_trunk.output_dim() == 3);
    CHECK(m.encoder_trunk.layers().back().activation == Activation::identity);
    CHECK(m.decoder.input_dim() == 3);
    CHECK(m.decoder.layers()[0].output_dim() == 32);
    CHECK(m.decoder.layers()[1].output_dim() == 64);
    CHECK(m.decoder.output_dim() == 4 + 1 + 1);
}

TEST_CASE("continuous-only schema has no categorical branch") {
    AEConfig config;
    config.latent_dim = 2;
    const AEModel m = build_ae(mixed_schema(5, {}), config, 1);
    CHECK(m.categorical_branch.empty());
    CHECK(m.heads.discrete_count() == 0);
    CHECK(m.decoder.output_dim() == 5);
    CHECK(m.encoder_trunk.input_dim() == 32);
}

TEST_CASE("latent dimension must compress") {
    AEConfig config;
    config.latent_dim = 4;
    CHECK_THROWS_AS(build_ae(mixed_schema(2, {2, 2}), config, 1), ConfigError);
    config.latent_dim = 0;
    CHECK(build_ae(mixed_schema(6, {2, 3}), config, 1).latent_dim() == 2);
}

TEST_CASE("autoencoder parameter gradients match finite differences") {
    AEConfig config;
    config.latent_dim = 2;
    config.numeric_widths = {6, 5};
    config.categorical_widths = {4, 3};
    config.shared_width = 5;
    config.decoder_widths = {5, 6};
    AEModel m = build_ae(mixed_schema(3, {2, 3}), config, 7);
    // zero initial biases put exact relu kinks under the finite-difference probe
    Rng rng(6);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto* net : {&m.numeric_branch, &m.categorical_branch, &m.encoder_trunk, &m.decoder})
        for (auto& layer : net->layers())
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = u(rng);
    const Dataset d = mixed_encoded(9, 8);
    const Matrix relaxed = relaxed_matrix(d);
    std::vector<double> analytic;
    ae_batch_gradient(m, relaxed, d.cells, analytic);

    ParameterSet params = ae_parameters(m);
    std::vector<double> numeric;
    std::vector<double> scratch;
    for (auto view : params.views()) {
        const auto g = oracle::finite_difference([&] { return ae_batch_gradient(m, relaxed, d.cells, scratch); }, view);
        numeric.insert(numeric.end(), g.begin(), g.end());
    }
    REQUIRE(numeric.size() == analytic.size());
    CHECK(oracle::max_relative_error(analytic, numeric, 1e-6) < 1e-4);
}

TEST_CASE("a one-dimensional linear manifold is reconstructed through a single latent") {
    Rng rng(9);
    auto line = [&](std::size_t n) {
        Dataset d;
        d.schema = mixed_schema(2, {});
        d.stage = DataStage::encoded;
        d.cells = standard_normal(static_cast<Eigen::Index>(n), 2, rng);
        d.cells.col(1) = 3.0 * d.cells.col(0);
        return d;
    };
    const Dataset train = line(2000);
    const Dataset val = line(400);
    AEConfig config;
    config.latent_dim = 1;
    AEModel m = build_ae(train.schema, config, 10);
    const TrainCurve curve = train_ae(m, train, &val, 11);
    REQUIRE(curve.val_loss.size() == 200);
    CHECK(curve.val_loss.back() < 0.01);
    CHECK(curve.train_loss.back() <= curve.train_loss.front());
}

TEST_CASE("autoencoder training is seed-deterministic") {
    const Dataset d = mixed_encoded(300, 12);
    AEConfig config;
    config.epochs = 5;
    config.latent_dim = 2;
    AEModel a = build_ae(d.schema, config, 13);
    AEModel b = build_ae(d.schema, config, 13);
    train_ae(a, d, nullptr, 14);
    train_ae(b, d, nullptr, 14);
    CHECK(ae_parameters(a).snapshot() == ae_parameters(b).snapshot());
}

TEST_CASE("trained autoencoder reconstructs, decodes legal categories and normalises latents") {
    const Dataset train = mixed_encoded(2000, 15);
    const Dataset val = mixed_encoded(400, 16);
    AEConfig config;
    config.latent_dim = 2;
    config.epochs = 60;
    AEModel m = build_ae(train.schema, config, 17);
    const TrainCurve curve = train_ae(m, train, &val, 18);
    CHECK(curve.train_loss.back() < curve.train_loss.front());

    // per-row reconstruction loss of held-out rows stays inside the training spread
    const auto train_rows = m.heads.row_losses(decode_outputs(m, encode(m, train)), train.cells);
    double mean = 0, sq = 0;
    for (double v : train_rows) mean += v;
    mean /= static_cast<double>(train_rows.size());
    for (double v : train_rows) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(train_rows.size()));
    const auto val_rows = m.heads.row_losses(decode_outputs(m, encode(m, val)), val.cells);
    double val_mean = 0;
    for (double v : val_rows) val_mean += v;
    val_mean /= static_cast<double>(val_rows.size());
    CHECK(val_mean < mean + 3 * sd);

    CHECK(encode(m, val) == encode(m, val));

    fit_latent_norm(m, train);
    const Matrix z = encode(m, train);
    // two-pass oracle for the latent statistics
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
        double mu = 0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) mu += z(i, k);
        mu /= static_cast<double>(z.rows());
        double var = 0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) var += (z(i, k) - mu) * (z(i, k) - mu);
        var /= static_cast<double>(z.rows());
        CHECK(m.latent_mean(k) == doctest::Approx(mu).epsilon(1e-12));
        CHECK(m.latent_std(k) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    }
    const Matrix zn = normalize_latents(m, z);
    for (Eigen::Index k = 0; k < zn.cols(); ++k) {
        const double mu = zn.col(k).mean();
        CHECK(std::abs(mu) < 1e-9);
        CHECK(std::abs(std::sqrt((zn.col(k).array() - mu).square().mean()) - 1.0) < 1e-9);
    }
    CHECK((denormalize_latents(m, zn) - z).cwiseAbs().maxCoeff() < 1e-12);

    Rng rng(19);
    const Matrix noise = 3.0 * standard_normal(5000, 2, rng);
    for (bool stochastic : {false, true}) {
        m.config.stochastic_decode = stochastic;
        const Dataset out = decode(m, noise, &rng);
        CHECK_NOTHROW(out.validate());
    }
    CHECK_THROWS_AS(decode(m, Matrix::Zero(3, 3)), ShapeError);
}

TEST_CASE("collapsed latent dimension is a hard error") {
    const Dataset d = mixed_encoded(200, 20);
    AEConfig config;
    config.latent_dim = 2;
    AEModel m = build_ae(d.schema, config, 21);
    auto& last = m.encoder_trunk.layers().back();
    last.weight.col(1).setZero();
    last.bias(1) = 0.25;
    CHECK_THROWS_AS(fit_latent_norm(m, d), NumericError);
}

TEST_CASE("autoencoder survives serialisation") {
    const Dataset d = mixed_encoded(200, 22);
    AEConfig config;
    config.latent_dim = 2;
    config.epochs = 2;
    AEModel m = build_ae(d.schema, config, 23);
    train_ae(m, d, nullptr, 24);
    fit_latent_norm(m, d);
    const json j = m;
    const auto back = json::from_cbor(json::to_cbor(j)).get<AEModel>();
    CHECK(encode(back, d) == encode(m, d));
    CHECK(back.latent_std == m.latent_std);
    CHECK(decode_outputs(back, encode(m, d)) == decode_outputs(m, encode(m, d)));
}
