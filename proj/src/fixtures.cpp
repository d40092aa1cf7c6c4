#include "netsynth/fixtures.hpp"

#include <cmath>
#include <numbers>

#include "netsynth/common.hpp"
#include "netsynth/errors.hpp"

namespace netsynth {

FixtureKind fixture_from_string(const std::string& name) {
    if (name == "two_moons") return FixtureKind::two_moons;
    if (name == "mixed_clusters") return FixtureKind::mixed_clusters;
    if (name == "imbalanced_ids") return FixtureKind::imbalanced_ids;
    throw ConfigError("unknown fixture '" + name + "' (valid: two_moons, mixed_clusters, imbalanced_ids)");
}

std::string to_string(FixtureKind kind) {
    switch (kind) {
        case FixtureKind::two_moons: return "two_moons";
        case FixtureKind::mixed_clusters: return "mixed_clusters";
        case FixtureKind::imbalanced_ids: return "imbalanced_ids";
    }
    return {};
}

Dataset two_moons(std::size_t n, std::uint64_t seed, double noise) {
    Rng rng(seed);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, noise);
    Dataset d;
    d.schema.features = {{"x", FeatureKind::continuous, 0}, {"y", FeatureKind::continuous, 0}};
    d.cells.resize(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < d.cells.rows(); ++i) {
        const double a = angle(rng);
        if (i % 2 == 0) {
            d.cells(i, 0) = std::cos(a);
            d.cells(i, 1) = std::sin(a);
        } else {
            d.cells(i, 0) = 1.0 - std::cos(a);
            d.cells(i, 1) = 0.5 - std::sin(a);
        }
        d.cells(i, 0) += jitter(rng);
        d.cells(i, 1) += jitter(rng);
    }
    return d;
}

std::array<std::array<double, 4>, 2> mixed_cluster_centers() {
    return {{{-2.0, 0.0, 1.0, 5.0}, {2.0, 3.0, -1.0, 8.0}}};
}

Dataset mixed_clusters(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto centers = mixed_cluster_centers();
    const std::array<double, 3> protocols{6.0, 17.0, 1.0};
    const std::array<std::array<double, 3>, 2> protocol_probs{{{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}};
    Dataset d;
    d.schema.features = {{"a", FeatureKind::continuous, 0}, {"b", FeatureKind::continuous, 0},
                         {"c", FeatureKind::continuous, 0}, {"e", FeatureKind::continuous, 0},
                         {"flag", FeatureKind::discrete, 2},    {"proto", FeatureKind::discrete, 3}};
    d.cells.resize(static_cast<Eigen::Index>(n), 6);
    for (Eigen::Index i = 0; i < d.cells.rows(); ++i) {
        const int c = u(rng) < 0.5 ? 0 : 1;
        const auto& mu = centers[static_cast<std::size_t>(c)];
        const double e0 = g(rng);
        d.cells(i, 0) = mu[0] + e0;
        d.cells(i, 1) = mu[1] + 0.6 * e0 + 0.8 * g(rng);
        d.cells(i, 2) = mu[2] + 0.7 * g(rng);
        d.cells(i, 3) = mu[3] + g(rng);
        d.cells(i, 4) = u(rng) < (c == 1 ? 0.85 : 0.15) ? 1.0 : 0.0;
        const double r = u(rng);
        const auto& p = protocol_probs[static_cast<std::size_t>(c)];
        d.cells(i, 5) = r < p[0] ? protocols[0] : (r < p[0] + p[1] ? protocols[1] : protocols[2]);
    }
    return d;
}

namespace {

struct FlowModel {
    std::array<std::array<double, 3>, 12> loadings;
    std::array<double, 12> scales;
    std::array<std::array<double, 3>, 4> flag_loadings;
    std::array<std::array<double, 3>, 3> proto_loadings;
};

// Fixed structure shared by every call; only the row draws depend on the seed.
FlowModel flow_model() {
    FlowModel m{};
    Rng rng(0x5eedf10e);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& row : m.loadings)
        for (auto& v : row) v = g(rng) / std::sqrt(3.0);
    for (std::size_t j = 0; j < m.scales.size(); ++j) m.scales[j] = std::pow(10.0, static_cast<double>(j % 4));
    for (auto& row : m.flag_loadings)
        for (auto& v : row) v = g(rng);
    for (auto& row : m.proto_loadings)
        for (auto& v : row) v = g(rng);
    return m;
}

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

Dataset imbalanced_ids(std::size_t n, std::uint64_t seed) {
    const FlowModel model = flow_model();
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const auto n_attack = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 6.5));
    const std::array<std::array<double, 3>, 3> benign_modes{{{0.0, 0.0, 0.0}, {1.5, -1.0, 0.5}, {-1.0, 1.5, -1.0}}};
    const std::array<double, 3> benign_weights{0.5, 0.3, 0.2};
    const std::array<double, 3> attack_mode{1.0, -0.5, 0.8};
    const std::array<double, 3> protocols{6.0, 17.0, 1.0};

    Dataset d;
    for (std::size_t j = 0; j < 12; ++j) d.schema.features.push_back({"stat" + std::to_string(j), FeatureKind::continuous, 0});
    for (std::size_t j = 0; j < 4; ++j) d.schema.features.push_back({"flag" + std::to_string(j), FeatureKind::discrete, 2});
    d.schema.features.push_back({"protocol", FeatureKind::discrete, 3});
    d.schema.label_column = "label";
    d.schema.class_labels = {"attack", "benign"};
    d.cells.resize(static_cast<Eigen::Index>(n), 17);
    d.labels.resize(n);

    const auto order = shuffled_indices(n, rng);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        const bool attack = k < n_attack;
        std::array<double, 3> z{};
        if (attack) {
            for (std::size_t a = 0; a < 3; ++a) z[a] = attack_mode[a] + 0.5 * g(rng);
        } else {
            const double r = u(rng);
            const std::size_t mode = r < benign_weights[0] ? 0 : (r < benign_weights[0] + benign_weights[1] ? 1 : 2);
            for (std::size_t a = 0; a < 3; ++a) z[a] = benign_modes[mode][a] + 0.7 * g(rng);
        }
        for (std::size_t j = 0; j < 12; ++j) {
            const double s = dot3(model.loadings[j], z);
            d.cells(i, static_cast<Eigen::Index>(j)) =
                j < 8 ? std::round(model.scales[j] * std::exp(1.0 + 0.8 * s + 0.25 * g(rng)) * 1000.0) / 1000.0
                      : s + 0.5 * g(rng);
        }
        for (std::size_t f = 0; f < 4; ++f) {
            const double p = 1.0 / (1.0 + std::exp(-(2.0 * dot3(model.flag_loadings[f], z) - 0.5)));
            d.cells(i, static_cast<Eigen::Index>(12 + f)) = u(rng) < p ? 1.0 : 0.0;
        }
        std::array<double, 3> w{};
        double total = 0.0;
        for (std::size_t c = 0; c < 3; ++c) total += w[c] = std::exp(dot3(model.proto_loadings[c], z));
        const double r = u(rng) * total;
        d.cells(i, 16) = r < w[0] ? protocols[0] : (r < w[0] + w[1] ? protocols[1] : protocols[2]);
        d.labels[static_cast<std::size_t>(i)] = attack ? 0 : 1;
    }
    return d;
}

Dataset make_fixture(FixtureKind kind, std::size_t n, std::uint64_t seed) {
    switch (kind) {
        case FixtureKind::two_moons: return two_moons(n, seed);
        case FixtureKind::mixed_clusters: return mixed_clusters(n, seed);
        case FixtureKind::imbalanced_ids: return imbalanced_ids(n, seed);
    }
    throw ConfigError("unknown fixture kind");
}

}  // namespace netsynth
