#include <cmath>
#include <set>

#include "doctest.h"
#include "netsynth/diffusion.hpp"
#include "netsynth/errors.hpp"
#include "netsynth/fixtures.hpp"
#include "oracles.hpp"

using namespace netsynth;

namespace {

DenoiserConfig small_config(Parameterization p, std::size_t width = 64, std::size_t depth = 2) {
    DenoiserConfig c;
    c.hidden_width = width;
    c.depth = depth;
    c.time_dim = 16;
    c.parameterization = p;
    return c;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("single-step schedule") {
    const auto s = linear_schedule(1);
    REQUIRE(s.beta.size() == 1);
    CHECK(s.beta_at(1) == 1e-4);
    CHECK(s.alpha_bar_at(1) == doctest::Approx(0.9999).epsilon(1e-15));
}

TEST_CASE("200-step schedule endpoints and running product") {
    const auto s = linear_schedule(200);
    CHECK(s.beta_at(1) == 1e-4);
    CHECK(s.beta_at(200) == doctest::Approx(0.02).epsilon(1e-15));
    double running = 1.0;
    for (std::size_t t = 1; t <= 200; ++t) {
        running *= 1.0 - (1e-4 + (0.02 - 1e-4) * static_cast<double>(t - 1) / 199.0);
        CHECK(std::abs(s.alpha_bar_at(t) - running) < 1e-12);
        CHECK(s.alpha_at(t) > 0.0);
        CHECK(s.alpha_at(t) < 1.0);
        if (t > 1) CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
    }
    CHECK(s.alpha_bar_at(1) == s.alpha_at(1));
}

TEST_CASE("schedule bounds are validated") {
    CHECK_THROWS_AS(linear_schedule(0), ConfigError);
    CHECK_THROWS_AS(linear_schedule(10, 0.1, 0.01), ConfigError);
    CHECK_THROWS_AS(linear_schedule(10, 1e-4, 1.0), ConfigError);
    CHECK_THROWS_AS(linear_schedule(10, 0.0, 0.5), ConfigError);
}

TEST_CASE("zero noise scales the clean sample") {
    const auto s = linear_schedule(50);
    Matrix z0(2, 3);
    z0 << 1, -2, 3, 0.5, 0, -1;
    const Matrix zt = forward_diffuse(z0, 17, Matrix::Zero(2, 3), s);
    CHECK((zt - std::sqrt(s.alpha_bar_at(17)) * z0).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(forward_diffuse(z0, 0, Matrix::Zero(2, 3), s), DomainError);
    CHECK_THROWS_AS(forward_diffuse(z0, 51, Matrix::Zero(2, 3), s), DomainError);
}

TEST_CASE("composed single steps agree in distribution with the closed form") {
    const auto s = linear_schedule(200);
    const std::size_t t = 60;
    const double z0 = 2.0;
    Rng rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> chain, closed;
    for (int trial = 0; trial < 10000; ++trial) {
        double z = z0;
        for (std::size_t k = 1; k <= t; ++k) z = std::sqrt(s.alpha_at(k)) * z + std::sqrt(s.beta_at(k)) * g(rng);
        chain.push_back(z);
        Matrix m(1, 1), e(1, 1);
        m << z0;
        e << g(rng);
        closed.push_back(forward_diffuse(m, t, e, s)(0, 0));
    }
    CHECK(oracle::relative_error(mean_of(chain), mean_of(closed)) < 0.05);
    CHECK(oracle::relative_error(var_of(chain), var_of(closed)) < 0.05);
    CHECK(oracle::relative_error(mean_of(closed), std::sqrt(s.alpha_bar_at(t)) * z0) < 0.05);
    CHECK(oracle::relative_error(var_of(closed), 1.0 - s.alpha_bar_at(t)) < 0.05);
}

TEST_CASE("late steps approach a standard normal") {
    const auto s = linear_schedule(1000);
    REQUIRE(s.alpha_bar_at(1000) < 1e-3);
    Rng rng(2);
    const Matrix z0 = Matrix::Constant(10000, 1, 3.0);
    const Matrix zt = forward_diffuse(z0, 1000, standard_normal(10000, 1, rng), s);
    const std::vector<double> v(zt.data(), zt.data() + zt.size());
    CHECK(std::abs(mean_of(v)) < 0.05);
    CHECK(std::abs(var_of(v) - 1.0) < 0.05);
}

TEST_CASE("time embeddings are bounded, deterministic and distinct") {
    std::set<std::vector<double>> seen;
    for (std::size_t t = 1; t <= 10000; ++t) {
        const RowVector e = time_embedding(t);
        CHECK(e.size() == 128);
        REQUIRE(e.cwiseAbs().maxCoeff() <= 1.0);
        seen.insert(std::vector<double>(e.data(), e.data() + e.size()));
    }
    CHECK(seen.size() == 10000);
    CHECK(time_embedding(37) == time_embedding(37));
    const RowVector e = time_embedding(5, 8);
    CHECK(e(0) == doctest::Approx(std::sin(5.0)));
    CHECK(e(1) == doctest::Approx(std::cos(5.0)));
    CHECK(e(2) == doctest::Approx(std::sin(5.0 / 10.0)));
    CHECK_THROWS_AS(time_embedding(3, 7), ConfigError);
}

TEST_CASE("denoiser shapes") {
    DenoiserConfig config;
    config.depth = 3;
    const Denoiser m(5, config, 1);
    CHECK(m.backbone().input_dim() == 5 + 128);
    CHECK(m.backbone().output_dim() == 5);
    CHECK(m.backbone().depth() == 4);
    CHECK(m.backbone().layers()[0].output_dim() == 256);
    CHECK(m.time_mlp().input_dim() == 128);
    CHECK(m.time_mlp().output_dim() == 128);
    CHECK(m.time_mlp().depth() == 2);
}

TEST_CASE("shared-step prediction equals per-row prediction") {
    const Denoiser m(3, small_config(Parameterization::predict_noise), 2);
    Rng rng(3);
    const Matrix z = standard_normal(7, 3, rng);
    const std::vector<std::size_t> steps(7, 42);
    CHECK((m.predict(z, 42) - m.predict(z, steps)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("denoiser gradients match finite differences") {
    Denoiser m(3, small_config(Parameterization::predict_noise, 8, 2), 4);
    Rng rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto* net : {&m.time_mlp(), &m.backbone()})
        for (auto& layer : net->layers())
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = u(rng);
    const Matrix z = standard_normal(6, 3, rng);
    const Matrix target = standard_normal(6, 3, rng);
    const std::vector<std::size_t> steps{1, 5, 9, 13, 40, 77};
    std::vector<double> analytic, scratch, numeric;
    m.loss_and_gradient(z, steps, target, analytic);
    ParameterSet params = m.parameters();
    for (auto view : params.views()) {
        const auto g = oracle::finite_difference([&] { return m.loss_and_gradient(z, steps, target, scratch); }, view);
        numeric.insert(numeric.end(), g.begin(), g.end());
    }
    REQUIRE(numeric.size() == analytic.size());
    CHECK(oracle::max_relative_error(analytic, numeric, 1e-6) < 1e-4);
}

TEST_CASE("exact noise at the first step recovers the clean sample") {
    const auto s = linear_schedule(200);
    Rng rng(6);
    const Matrix z0 = standard_normal(20, 4, rng);
    const Matrix eps = standard_normal(20, 4, rng);
    const Matrix z1 = forward_diffuse(z0, 1, eps, s);
    const Matrix back = reverse_step_from_prediction(z1, eps, Parameterization::predict_noise, 1, s, Matrix());
    CHECK((back - z0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("clean-sample reverse step matches a hand-computed mean") {
    const auto s = linear_schedule(200);
    Matrix z(1, 2);
    z << 0.7, -1.3;
    const std::size_t t = 90;
    const Matrix out = reverse_step_from_prediction(z, z, Parameterization::predict_clean, t, s, Matrix::Zero(1, 2));
    const double a = s.alpha_at(t), ab = s.alpha_bar_at(t);
    for (Eigen::Index k = 0; k < 2; ++k) {
        const double eps = (z(0, k) - std::sqrt(ab) * z(0, k)) / std::sqrt(1.0 - ab);
        const double mu = (z(0, k) - (1.0 - a) / std::sqrt(1.0 - ab) * eps) / std::sqrt(a);
        CHECK(std::abs(out(0, k) - mu) < 1e-12);
    }
}

TEST_CASE("both parameterizations give the same reverse step") {
    const auto s = linear_schedule(300);
    Rng rng(7);
    const Matrix z = standard_normal(9, 3, rng);
    const Matrix clean = standard_normal(9, 3, rng);
    const Matrix noise = standard_normal(9, 3, rng);
    for (std::size_t t : {1u, 2u, 150u, 300u}) {
        const Matrix a = reverse_step_from_prediction(z, clean, Parameterization::predict_clean, t, s, noise);
        const Matrix b = reverse_step_from_prediction(z, noise_from_clean(z, clean, t, s), Parameterization::predict_noise,
                                                      t, s, noise);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("reverse step noise has variance beta_t") {
    const auto s = linear_schedule(200);
    const std::size_t t = 120;
    Rng rng(8);
    Matrix z = Matrix::Constant(10000, 1, 0.4);
    const Matrix pred = Matrix::Constant(10000, 1, -0.1);
    const Matrix out = reverse_step_from_prediction(z, pred, Parameterization::predict_noise, t, s, standard_normal(10000, 1, rng));
    const std::vector<double> v(out.data(), out.data() + out.size());
    CHECK(oracle::relative_error(var_of(v), s.beta_at(t)) < 0.05);
    CHECK(reverse_sigma(1, s, ReverseVariance::beta) == 0.0);
    CHECK(reverse_sigma(t, s, ReverseVariance::posterior) < reverse_sigma(t, s, ReverseVariance::beta));
}

TEST_CASE("clean-target training on all-zero data predicts zero") {
    const auto s = linear_schedule(50);
    Denoiser m(2, small_config(Parameterization::predict_clean, 32, 2), 9);
    DiffusionTrainConfig tc;
    tc.epochs = 200;
    tc.learning_rate = 1e-3;
    const auto curve = train_denoiser(m, Matrix::Zero(512, 2), s, tc, 10);
    CHECK(curve.back() < curve.front());
    Rng rng(11);
    const Matrix z = standard_normal(1000, 2, rng);
    std::uniform_int_distribution<std::size_t> step(1, 50);
    std::vector<std::size_t> steps(1000);
    for (auto& t : steps) t = step(rng);
    CHECK(m.predict(z, steps).squaredNorm() / 2000.0 < 0.01);
}

TEST_CASE("point-mass training learns the closed-form optimal noise and samples the point") {
    const auto s = linear_schedule(50, 0.01, 0.2);
    Matrix data(1024, 2);
    data.col(0).setConstant(1.0);
    data.col(1).setConstant(-2.0);
    Denoiser m(2, small_config(Parameterization::predict_noise, 64, 2), 12);
    DiffusionTrainConfig tc;
    tc.epochs = 150;
    tc.learning_rate = 2e-3;
    train_denoiser(m, data, s, tc, 13);

    Rng rng(14);
    std::uniform_int_distribution<std::size_t> step(1, 50);
    const Matrix eps = standard_normal(2000, 2, rng);
    Matrix zt(2000, 2), optimal(2000, 2);
    std::vector<std::size_t> steps(2000);
    for (Eigen::Index i = 0; i < 2000; ++i) {
        steps[static_cast<std::size_t>(i)] = step(rng);
        const double ab = s.alpha_bar_at(steps[static_cast<std::size_t>(i)]);
        zt.row(i) = std::sqrt(ab) * data.row(0) + std::sqrt(1.0 - ab) * eps.row(i);
        optimal.row(i) = (zt.row(i) - std::sqrt(ab) * data.row(0)) / std::sqrt(1.0 - ab);
    }
    const double rms = std::sqrt((m.predict(zt, steps) - optimal).squaredNorm() / 4000.0);
    CHECK(rms < 0.1);

    const Matrix x = sample(m, s, 1000, 15);
    const double sample_rms = std::sqrt((x.rowwise() - data.row(0)).squaredNorm() / 2000.0);
    CHECK(sample_rms < 0.2);
}

TEST_CASE("sampling is seed-deterministic and shaped") {
    const auto s = linear_schedule(20);
    const Denoiser m(3, small_config(Parameterization::predict_clean), 16);
    const Matrix a = sample(m, s, 50, 17);
    const Matrix b = sample(m, s, 50, 17);
    CHECK(a == b);
    CHECK(a.rows() == 50);
    CHECK(a.cols() == 3);
    CHECK(a.allFinite());
    CHECK(sample(m, s, 0, 1).rows() == 0);
}

TEST_CASE("two-moons training loss drops and samples hug the manifold") {
    const Dataset moons = two_moons(2000, 18);
    const auto s = linear_schedule(200);
    DenoiserConfig config = small_config(Parameterization::predict_noise, 128, 3);
    config.time_dim = 128;
    Denoiser m(2, config, 19);
    DiffusionTrainConfig tc;
    tc.epochs = 150;
    const auto curve = train_denoiser(m, moons.cells, s, tc, 20);
    CHECK(curve.back() < curve.front());
    const Matrix x = sample(m, s, 500, 21);
    std::size_t close = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) close += oracle::two_moons_distance(x(i, 0), x(i, 1), 1000) < 0.3;
    CHECK(static_cast<double>(close) / 500.0 > 0.9);
}

TEST_CASE("denoiser and schedule survive serialisation") {
    const auto s = linear_schedule(77, 2e-4, 0.03);
    const Denoiser m(3, small_config(Parameterization::predict_clean), 22);
    const json j = {{"schedule", s}, {"model", m}};
    const auto j2 = json::from_cbor(json::to_cbor(j));
    const auto s2 = j2.at("schedule").get<DiffusionSchedule>();
    const auto m2 = j2.at("model").get<Denoiser>();
    CHECK(s2.alpha_bar == s.alpha_bar);
    CHECK(m2.config().parameterization == Parameterization::predict_clean);
    CHECK(sample(m2, s2, 10, 3) == sample(m, s, 10, 3));
}
