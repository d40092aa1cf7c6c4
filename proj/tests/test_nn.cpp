#include "doctest.h"

#include <cmath>
#include <sstream>

#include "netsynth/common.hpp"
#include "netsynth/errors.hpp"
#include "netsynth/nn.hpp"
#include "oracles.hpp"

using namespace netsynth;

namespace {

DenseNet random_net(std::size_t in, std::vector<LayerSpec> specs, std::uint64_t seed) {
    Rng rng(seed);
    DenseNet net = DenseNet::make(in, specs, rng);
    // non-zero biases so the bias gradients are exercised
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& l : net.layers())
        for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias(j) = u(rng);
    return net;
}

// Straight-line forward recomputation with explicit loops.
std::vector<std::vector<double>> loop_forward(const DenseNet& net, const Matrix& x) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::vector<double> a(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) a[c] = x(r, c);
        for (const auto& l : net.layers()) {
            std::vector<double> z(l.output_dim());
            for (std::size_t o = 0; o < l.output_dim(); ++o) {
                double s = l.bias(o);
                for (std::size_t i = 0; i < l.input_dim(); ++i) s += a[i] * l.weight(i, o);
                z[o] = s;
            }
            if (l.activation == Activation::relu)
                for (auto& v : z) v = v > 0 ? v : 0;
            if (l.activation == Activation::sigmoid)
                for (auto& v : z) v = 1.0 / (1.0 + std::exp(-v));
            if (l.activation == Activation::softmax) {
                double m = *std::max_element(z.begin(), z.end()), s = 0;
                for (auto& v : z) s += (v = std::exp(v - m));
                for (auto& v : z) v /= s;
            }
            a = z;
        }
        rows.push_back(a);
    }
    return rows;
}

}  // namespace

TEST_CASE("identity layer passes input through") {
    DenseLayer l{Matrix::Identity(2, 2), RowVector::Zero(2), Activation::identity};
    DenseNet net({l});
    Matrix x(1, 2);
    x << 1, 2;
    const Matrix y = net.predict(x);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 2.0);
}

TEST_CASE("relu layer clamps negatives") {
    DenseNet net({DenseLayer{Matrix::Identity(2, 2), RowVector::Zero(2), Activation::relu}});
    Matrix x(1, 2);
    x << -1, 3;
    const Matrix y = net.predict(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 3.0);
}

TEST_CASE("forward matches a hand-rolled loop oracle") {
    const DenseNet net = random_net(5, {{7, Activation::relu}, {3, Activation::softmax}}, 11);
    Rng rng(3);
    const Matrix x = standard_normal(9, 5, rng);
    const Matrix y = net.predict(x);
    const auto expected = loop_forward(net, x);
    for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < y.cols(); ++c) CHECK(std::abs(y(r, c) - expected[r][c]) < 1e-12);
}

TEST_CASE("shape errors") {
    const DenseNet net = random_net(3, {{4, Activation::relu}}, 1);
    CHECK_THROWS_AS(net.forward(Matrix::Zero(2, 4)), ShapeError);

    std::vector<DenseLayer> broken{{Matrix::Zero(3, 4), RowVector::Zero(4), Activation::relu},
                                   {Matrix::Zero(5, 2), RowVector::Zero(2), Activation::identity}};
    CHECK_THROWS_AS(DenseNet{broken}, ShapeError);

    std::vector<DenseLayer> inner_softmax{{Matrix::Zero(3, 4), RowVector::Zero(4), Activation::softmax},
                                          {Matrix::Zero(4, 2), RowVector::Zero(2), Activation::identity}};
    CHECK_THROWS_AS(DenseNet{inner_softmax}, ConfigError);

    const DenseNet other = random_net(3, {{5, Activation::relu}}, 2);
    const auto trace = other.forward(Matrix::Zero(2, 3));
    CHECK_THROWS_AS(net.backward(trace, Matrix::Zero(2, 4)), ShapeError);
}

TEST_CASE("softmax rows are a probability simplex") {
    const DenseNet net = random_net(4, {{6, Activation::relu}, {5, Activation::softmax}}, 5);
    Rng rng(8);
    const Matrix y = net.predict(standard_normal(50, 4, rng) * 10.0);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        CHECK(y.row(r).minCoeff() >= 0.0);
        CHECK(std::abs(y.row(r).sum() - 1.0) < 1e-9);
    }
}

TEST_CASE("mse and bce closed forms") {
    Matrix p(2, 2);
    p << 0.1, 0.2, 0.3, 0.4;
    const auto mse = loss_and_grad(LossKind::mse, p, p);
    CHECK(mse.value == 0.0);
    CHECK(mse.gradient.isZero(0.0));

    Matrix half(1, 1), one(1, 1);
    half << 0.5;
    one << 1.0;
    const auto bce = loss_and_grad(LossKind::binary_cross_entropy, half, one);
    CHECK(bce.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cce gradient through softmax matches finite differences") {
    Rng rng(21);
    Matrix logits = standard_normal(6, 4, rng);
    Matrix target(6, 1);
    target << 0, 3, 1, 2, 2, 0;

    auto loss_at = [&]() { return loss_and_grad(LossKind::categorical_cross_entropy, softmax_rows(logits), target).value; };

    // analytic: softmax backward applied to dL/dp
    DenseNet head({DenseLayer{Matrix::Identity(4, 4), RowVector::Zero(4), Activation::softmax}});
    const auto trace = head.forward(logits);
    const auto lg = loss_and_grad(LossKind::categorical_cross_entropy, trace.output(), target);
    Matrix dlogits;
    head.backward(trace, lg.gradient, &dlogits);

    std::span<double> params(logits.data(), static_cast<std::size_t>(logits.size()));
    const auto fd = oracle::finite_difference(loss_at, params, 1e-5);
    std::vector<double> analytic(dlogits.data(), dlogits.data() + dlogits.size());
    CHECK(oracle::max_relative_error(analytic, fd) < 1e-5);

    // direct gradient w.r.t. the probabilities too
    Matrix probs = softmax_rows(logits);
    auto loss_probs = [&]() { return loss_and_grad(LossKind::categorical_cross_entropy, probs, target).value; };
    const auto direct = loss_and_grad(LossKind::categorical_cross_entropy, probs, target);
    std::span<double> pp(probs.data(), static_cast<std::size_t>(probs.size()));
    const auto fdp = oracle::finite_difference(loss_probs, pp, 1e-7);
    std::vector<double> ap(direct.gradient.data(), direct.gradient.data() + direct.gradient.size());
    CHECK(oracle::max_relative_error(ap, fdp) < 1e-5);
}

TEST_CASE("cce rejects invalid category index") {
    Matrix p = Matrix::Constant(2, 3, 1.0 / 3.0);
    Matrix t(2, 1);
    t << 0, 3;
    CHECK_THROWS_AS(loss_and_grad(LossKind::categorical_cross_entropy, p, t), DomainError);
    t << 0, 1.5;
    CHECK_THROWS_AS(loss_and_grad(LossKind::categorical_cross_entropy, p, t), DomainError);
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
    const DenseNet net = random_net(3, {{4, Activation::relu}, {2, Activation::identity}}, 4);
    Rng rng(1);
    const auto trace = net.forward(standard_normal(5, 3, rng));
    const auto grads = net.backward(trace, Matrix::Zero(5, 2));
    for (const auto& g : grads) {
        CHECK(g.weight.isZero(0.0));
        CHECK(g.bias.isZero(0.0));
    }
}

TEST_CASE("linear net with mse has the closed-form gradient") {
    DenseNet net = random_net(3, {{1, Activation::identity}}, 9);
    Rng rng(2);
    const Matrix x = standard_normal(8, 3, rng);
    const Matrix y = standard_normal(8, 1, rng);
    const auto trace = net.forward(x);
    const auto loss = loss_and_grad(LossKind::mse, trace.output(), y);
    const auto grads = net.backward(trace, loss.gradient);
    const Matrix expected = x.transpose() * (trace.output() - y) * (2.0 / 8.0);
    CHECK((grads[0].weight - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("random 3-layer nets: backward matches central finite differences") {
    const std::vector<std::pair<std::vector<LayerSpec>, LossKind>> cases{
        {{{8, Activation::relu}, {6, Activation::relu}, {3, Activation::identity}}, LossKind::mse},
        {{{8, Activation::relu}, {6, Activation::relu}, {2, Activation::sigmoid}}, LossKind::binary_cross_entropy},
        {{{8, Activation::relu}, {6, Activation::relu}, {4, Activation::softmax}}, LossKind::categorical_cross_entropy},
    };
    std::uint64_t seed = 100;
    for (const auto& [specs, kind] : cases) {
        DenseNet net = random_net(5, specs, seed++);
        Rng rng(seed);
        const Matrix x = standard_normal(7, 5, rng);
        Matrix target;
        if (kind == LossKind::mse) target = standard_normal(7, 3, rng);
        if (kind == LossKind::binary_cross_entropy)
            target = (standard_normal(7, 2, rng).array() > 0).cast<double>().matrix();
        if (kind == LossKind::categorical_cross_entropy) {
            target.resize(7, 1);
            for (int i = 0; i < 7; ++i) target(i, 0) = i % 4;
        }
        const auto trace = net.forward(x);
        const auto loss = loss_and_grad(kind, trace.output(), target);
        std::vector<double> analytic;
        append_gradients(net.backward(trace, loss.gradient), analytic);

        ParameterSet params;
        params.add(net);
        std::vector<double> fd;
        for (auto view : params.views()) {
            auto f = [&]() { return loss_and_grad(kind, net.predict(x), target).value; };
            const auto part = oracle::finite_difference(f, view);
            fd.insert(fd.end(), part.begin(), part.end());
        }
        CHECK(oracle::max_relative_error(analytic, fd, 1e-6) < 1e-4);
    }
}

TEST_CASE("input gradient matches finite differences") {
    const DenseNet net = random_net(4, {{6, Activation::relu}, {3, Activation::identity}}, 77);
    Rng rng(6);
    Matrix x = standard_normal(3, 4, rng);
    const Matrix target = standard_normal(3, 3, rng);
    const auto trace = net.forward(x);
    const auto loss = loss_and_grad(LossKind::mse, trace.output(), target);
    Matrix dx;
    net.backward(trace, loss.gradient, &dx);
    auto f = [&]() { return loss_and_grad(LossKind::mse, net.predict(x), target).value; };
    const auto fd = oracle::finite_difference(f, std::span<double>(x.data(), x.size()));
    CHECK(oracle::max_relative_error(std::vector<double>(dx.data(), dx.data() + dx.size()), fd, 1e-6) < 1e-4);
}

TEST_CASE("adam: zero gradients are a fixed point") {
    std::vector<double> p{1.0, -2.0, 3.0};
    std::vector<std::span<double>> views{std::span<double>(p)};
    Adam adam({}, 3);
    std::vector<double> g(3, 0.0);
    for (int i = 0; i < 10; ++i) adam.step(views, g);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(adam.steps() == 10);
}

TEST_CASE("adam: first step moves by the learning rate") {
    std::vector<double> p{0.0};
    std::vector<std::span<double>> views{std::span<double>(p)};
    Adam adam({.learning_rate = 0.1}, 1);
    CHECK(adam.first_moment()[0] == 0.0);
    CHECK(adam.second_moment()[0] == 0.0);
    std::vector<double> g{1.0};
    adam.step(views, g);
    CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(adam.steps() == 1);
}

TEST_CASE("adam: 100 steps on x^2 follow the reference update rule") {
    // reference: the textbook rule written out on scalars
    double x_ref = 1.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 100; ++t) {
        const double g = 2.0 * x_ref;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        x_ref -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    }

    std::vector<double> p{1.0};
    std::vector<std::span<double>> views{std::span<double>(p)};
    Adam adam({.learning_rate = 0.1}, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> g{2.0 * p[0]};
        adam.step(views, g);
    }
    CHECK(std::abs(p[0]) < 0.5);
    CHECK(std::abs(p[0] - x_ref) < 1e-12);
}

TEST_CASE("adam rejects non-finite gradients") {
    std::vector<double> p{1.0};
    std::vector<std::span<double>> views{std::span<double>(p)};
    Adam adam({}, 1);
    std::vector<double> g{std::nan("")};
    CHECK_THROWS_AS(adam.step(views, g), TrainingError);
}

TEST_CASE("gradient clipping") {
    std::vector<double> small{0.3, 0.4};
    clip_gradients(small, 1.0);
    CHECK(small == std::vector<double>{0.3, 0.4});

    std::vector<double> big{6.0, 8.0};
    CHECK(clip_gradients(big, 1.0) == doctest::Approx(10.0));
    CHECK(big[0] == doctest::Approx(0.6));
    CHECK(big[1] == doctest::Approx(0.8));

    Rng rng(12);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix g = standard_normal(1, 1 + trial % 17, rng) * scale(rng);
        std::vector<double> grads(g.data(), g.data() + g.size());
        const std::vector<double> before = grads;
        const double max_norm = scale(rng) / 10.0;
        clip_gradients(grads, max_norm);
        CHECK(global_norm(grads) <= max_norm + 1e-12);
        // direction preserved: grads is a non-negative multiple of before
        const double ratio = grads[0] / before[0];
        CHECK(ratio > 0.0);
        for (std::size_t i = 0; i < grads.size(); ++i) CHECK(std::abs(grads[i] - ratio * before[i]) < 1e-12);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto train = [](std::uint64_t seed) {
        Rng rng(seed);
        DenseNet net = DenseNet::make(3, std::vector<LayerSpec>{{8, Activation::relu}, {1, Activation::identity}}, rng);
        ParameterSet params;
        params.add(net);
        Adam adam({.learning_rate = 1e-2}, params.size());
        const Matrix x = standard_normal(32, 3, rng);
        const Matrix y = x.rowwise().sum();
        for (int s = 0; s < 50; ++s) {
            const auto trace = net.forward(x);
            const auto loss = loss_and_grad(LossKind::mse, trace.output(), y);
            std::vector<double> flat;
            append_gradients(net.backward(trace, loss.gradient), flat);
            adam.step(params.views(), flat);
        }
        return params.snapshot();
    };
    CHECK(train(5) == train(5));
    CHECK(train(5) != train(6));
}

TEST_CASE("serialization round trip is bit-exact") {
    const DenseNet net = random_net(4, {{5, Activation::relu}, {3, Activation::softmax}}, 31);
    const json j = net;
    const auto bytes = json::to_cbor(j);
    const DenseNet back = json::from_cbor(bytes).get<DenseNet>();
    const DenseNet back_text = json::parse(j.dump()).get<DenseNet>();
    REQUIRE(back.depth() == net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
        CHECK(back.layers()[i].weight == net.layers()[i].weight);
        CHECK(back.layers()[i].bias == net.layers()[i].bias);
        CHECK(back.layers()[i].activation == net.layers()[i].activation);
        CHECK(back_text.layers()[i].weight == net.layers()[i].weight);
    }
}
