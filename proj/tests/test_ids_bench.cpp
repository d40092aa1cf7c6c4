#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "netsynth/errors.hpp"
#include "netsynth/fixtures.hpp"
#include "netsynth/ids_bench.hpp"
#include "oracles.hpp"

using namespace netsynth;

namespace {

Dataset encoded(const Matrix& cells, std::vector<std::size_t> cards = {}) {
    Dataset d;
    const auto n_cont = cells.cols() - static_cast<Eigen::Index>(cards.size());
    for (Eigen::Index j = 0; j < n_cont; ++j) d.schema.features.push_back({"c" + std::to_string(j), FeatureKind::continuous, 0});
    for (std::size_t j = 0; j < cards.size(); ++j)
        d.schema.features.push_back({"d" + std::to_string(j), FeatureKind::discrete, cards[j]});
    d.cells = cells;
    d.stage = DataStage::encoded;
    return d;
}

Dataset gaussian_block(std::size_t n, double shift, std::uint64_t seed, std::size_t d = 4) {
    Rng rng(seed);
    return encoded((standard_normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng).array() + shift).matrix());
}

Dataset empty_like(const Dataset& d) {
    Dataset e = d;
    e.cells.resize(0, d.cells.cols());
    e.labels.clear();
    return e;
}

oracle::Rows rows_of(const Matrix& m) {
    oracle::Rows out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).data(), m.row(i).data() + m.cols());
    return out;
}

std::set<std::uint64_t> prints_of(const Dataset& d) {
    std::set<std::uint64_t> s;
    for (Eigen::Index i = 0; i < d.cells.rows(); ++i) s.insert(row_fingerprint(d.cells, i));
    return s;
}

json fast_overrides() {
    const json small_dm = {{"steps", 50},
                           {"denoiser", {{"hidden_width", 64}, {"depth", 2}, {"time_dim", 16}}},
                           {"train", {{"epochs", 40}}}};
    return {{"vae", {{"epochs", 40}}},
            {"gan", {{"epochs", 40}}},
            {"dm", small_dm},
            {"ldm", {{"ae", {{"epochs", 40}}}, {"diffusion", small_dm}}}};
}

}  // namespace

TEST_CASE("partition sends a rounded fraction of each class to test") {
    const IdsPartition p = partition_rows(103, 17, 0.2, 4);
    CHECK(p.benign_test.size() == 21);
    CHECK(p.benign_train.size() == 82);
    CHECK(p.attack_test.size() == 3);
    CHECK(p.attack_train.size() == 14);
    std::set<std::size_t> all(p.benign_train.begin(), p.benign_train.end());
    all.insert(p.benign_test.begin(), p.benign_test.end());
    CHECK(all.size() == 103);
    CHECK(partition_rows(103, 17, 0.2, 4).benign_test == p.benign_test);
    CHECK_THROWS_AS(partition_rows(10, 10, 1.0, 0), ConfigError);
}

TEST_CASE("synthetic rows bring the training ratio to the target") {
    const Dataset benign = gaussian_block(500, 0.0, 1);
    const Dataset attack = gaussian_block(80, 2.0, 2);
    const Dataset synth = gaussian_block(1000, 2.0, 3);
    const IdsSplit s = make_ids_split(benign, attack, synth, 1.0, 9);
    CHECK(s.benign_train == 400);
    CHECK(s.attack_real_train == 64);
    CHECK(s.synthetic_train == synthetic_needed(400, 64, 1.0));
    CHECK(s.achieved_ratio == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s.warnings.empty());
    CHECK(s.train.rows() == 800);
    CHECK(s.test.rows() == 116);
    for (Eigen::Index i = 464; i < 800; ++i) CHECK(s.train.labels[static_cast<std::size_t>(i)] == kAttack);

    const IdsSplit half = make_ids_split(benign, attack, synth, 0.5, 9);
    CHECK(half.achieved_ratio == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("baseline split keeps the natural imbalance") {
    const Dataset benign = gaussian_block(500, 0.0, 1);
    const Dataset attack = gaussian_block(80, 2.0, 2);
    const IdsSplit s = make_ids_split(benign, attack, empty_like(benign), 1.0, 9);
    CHECK(s.synthetic_train == 0);
    CHECK(s.achieved_ratio == doctest::Approx(64.0 / 400.0));
    CHECK(s.warnings.empty());
}

TEST_CASE("too few synthetic rows warns with the achieved ratio") {
    const Dataset benign = gaussian_block(500, 0.0, 1);
    const Dataset attack = gaussian_block(80, 2.0, 2);
    const IdsSplit s = make_ids_split(benign, attack, gaussian_block(100, 2.0, 3), 1.0, 9);
    CHECK(s.synthetic_train == 100);
    CHECK(s.achieved_ratio == doctest::Approx(164.0 / 400.0));
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("achieved ratio") != std::string::npos);
}

TEST_CASE("test rows never appear in the training side") {
    const Dataset benign = gaussian_block(300, 0.0, 1);
    const Dataset attack = gaussian_block(60, 2.0, 2);
    const IdsPartition p = partition_rows(300, 60, 0.2, 5);
    // synthetic rows that copy test rows and a test row that copies a training row
    Dataset synth = concat_rows(attack.select_rows(p.attack_test), gaussian_block(400, 2.0, 3));
    Dataset benign_test = benign.select_rows(p.benign_test);
    benign_test.cells.row(0) = benign.cells.row(static_cast<Eigen::Index>(p.benign_train[0]));
    const IdsSplit s = assemble_split(benign.select_rows(p.benign_train), attack.select_rows(p.attack_train), benign_test,
                                      attack.select_rows(p.attack_test), synth, 1.0);
    CHECK(s.synthetic_dropped == p.attack_test.size());
    CHECK(s.test_duplicates_dropped == 1);
    const auto train = prints_of(s.train), test = prints_of(s.test);
    for (auto f : test) CHECK(train.count(f) == 0);
}

TEST_CASE("mismatched schemas are rejected") {
    const Dataset benign = gaussian_block(100, 0.0, 1, 4);
    const Dataset attack = gaussian_block(30, 2.0, 2, 3);
    CHECK_THROWS_AS(make_ids_split(benign, attack, empty_like(benign), 1.0, 0), ShapeError);
}

TEST_CASE("knn matches a brute-force oracle") {
    Rng rng(7);
    const Matrix train = standard_normal(200, 5, rng);
    const Matrix query = standard_normal(300, 5, rng);
    std::vector<int> labels(200);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = train(static_cast<Eigen::Index>(i), 0) + train(static_cast<Eigen::Index>(i), 1) > 0.3 ? 1 : 0;
    const std::vector<Eigen::Index> cols{0, 1, 2, 3, 4};
    for (std::size_t k : {1u, 4u, 5u}) {
        const auto got = knn_predict(train, labels, query, k, cols);
        CHECK(got == oracle::knn_vote(rows_of(train), labels, rows_of(query), k));
    }
    const std::vector<Eigen::Index> sub{1, 3};
    const Matrix train_sub = train(Eigen::all, sub), query_sub = query(Eigen::all, sub);
    CHECK(knn_predict(train, labels, query, 5, sub) == oracle::knn_vote(rows_of(train_sub), labels, rows_of(query_sub), 5));
    CHECK_THROWS_AS(knn_predict(train, labels, query, 201, cols), ConfigError);
}

TEST_CASE("single full-subspace learner equals plain knn") {
    const Dataset benign = gaussian_block(300, 0.0, 1);
    const Dataset attack = gaussian_block(60, 1.0, 2);
    const IdsSplit s = make_ids_split(benign, attack, empty_like(benign), 1.0, 3);
    const SubspaceEnsemble m = train_subspace_ensemble(s.train, {1, 4, 5, true}, 11);
    REQUIRE(m.columns.size() == 1);
    CHECK(m.columns[0].size() == 4);
    const Matrix train = to_metric_space(m.space, s.train), test = to_metric_space(m.space, s.test);
    CHECK(predict(m, s.test) == oracle::knn_vote(rows_of(train), s.train.labels, rows_of(test), 5));
}

TEST_CASE("subspaces cover the one-hot block of a chosen discrete feature") {
    Rng rng(3);
    Matrix cells(120, 3);
    cells.leftCols(2) = standard_normal(120, 2, rng);
    for (Eigen::Index i = 0; i < 120; ++i) cells(i, 2) = static_cast<double>(i % 3);
    Dataset d = encoded(cells, {3});
    d.labels.resize(120);
    for (std::size_t i = 0; i < 120; ++i) d.labels[i] = i % 2 == 0 ? kAttack : kBenign;
    const SubspaceEnsemble m = train_subspace_ensemble(d, {40, 0, 3, true}, 2);
    CHECK(m.config.subspace_dim == 2);
    for (std::size_t c = 0; c < m.subsets.size(); ++c) {
        const bool has_discrete = std::find(m.subsets[c].begin(), m.subsets[c].end(), 2u) != m.subsets[c].end();
        CHECK(m.columns[c].size() == (has_discrete ? 4u : 2u));
    }
}

TEST_CASE("ensemble separates well-separated classes") {
    const Dataset benign = gaussian_block(600, 0.0, 1, 6);
    const Dataset attack = gaussian_block(100, 4.0, 2, 6);
    const IdsSplit s = make_ids_split(benign, attack, empty_like(benign), 1.0, 4);
    const SubspaceEnsemble m = train_subspace_ensemble(s.train, {30, 0, 5, true}, 8);
    const auto pred = predict(m, s.train);
    std::size_t right = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) right += pred[i] == s.train.labels[i] ? 1 : 0;
    CHECK(static_cast<double>(right) / static_cast<double>(pred.size()) > 0.99);
    CHECK(f1_score(s.test.labels, predict(m, s.test)) > 0.95);
}

TEST_CASE("ensemble training is deterministic and needs both classes") {
    const Dataset benign = gaussian_block(200, 0.0, 1);
    const Dataset attack = gaussian_block(40, 1.0, 2);
    const IdsSplit s = make_ids_split(benign, attack, empty_like(benign), 1.0, 3);
    const SubspaceEnsemble a = train_subspace_ensemble(s.train, {20, 2, 5, true}, 6);
    const SubspaceEnsemble b = train_subspace_ensemble(s.train, {20, 2, 5, true}, 6);
    CHECK(a.subsets == b.subsets);
    CHECK(attack_votes(a, s.test) == attack_votes(b, s.test));
    Dataset one = s.train.with_label(kBenign);
    CHECK_THROWS_AS(train_subspace_ensemble(one, {}, 0), FitError);
    CHECK_THROWS_AS(train_subspace_ensemble(s.train, {10, 5, 5, true}, 0), ConfigError);
}

TEST_CASE("confusion matrix and f1 on known predictions") {
    const std::vector<int> truth{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    const auto perfect = confusion_matrix(truth, truth);
    CHECK(perfect[0][0] == 100.0);
    CHECK(perfect[1][1] == 100.0);
    CHECK(f1_score(truth, truth) == 1.0);

    const std::vector<int> benign_only(10, 0);
    const auto cm = confusion_matrix(truth, benign_only);
    CHECK(cm[1][0] == 100.0);
    CHECK(cm[1][1] == 0.0);
    CHECK(f1_score(truth, benign_only) == 0.0);

    // TP 3, FN 1, FP 2, TN 4: precision 0.6, recall 0.75
    const std::vector<int> pred{1, 1, 0, 0, 0, 0, 1, 1, 1, 0};
    const auto m = confusion_matrix(truth, pred);
    CHECK(m[0][0] == doctest::Approx(400.0 / 6.0));
    CHECK(m[0][1] == doctest::Approx(200.0 / 6.0));
    CHECK(m[1][0] == doctest::Approx(25.0));
    CHECK(m[1][1] == doctest::Approx(75.0));
    CHECK(f1_score(truth, pred) == doctest::Approx(2.0 * 0.6 * 0.75 / 1.35));

    const auto no_attack = confusion_matrix({0, 0}, {0, 1});
    CHECK(no_attack[1][0] == 0.0);
    CHECK(no_attack[1][1] == 0.0);
    CHECK_THROWS_AS(f1_score({0, 1}, {0}), ShapeError);
}

TEST_CASE("duplicating attack rows does not lower attack recall") {
    const Dataset benign = gaussian_block(800, 0.0, 1);
    const Dataset attack = gaussian_block(60, 1.2, 2);
    const IdsPartition p = partition_rows(800, 60, 0.2, 6);
    const Dataset at = attack.select_rows(p.attack_train);
    double last = -1.0;
    for (int copies : {0, 2, 6}) {
        Dataset synth = empty_like(at);
        for (int c = 0; c < copies; ++c) synth = concat_rows(synth, at);
        const IdsSplit s = assemble_split(benign.select_rows(p.benign_train), at, benign.select_rows(p.benign_test),
                                          attack.select_rows(p.attack_test), synth, 10.0);
        const SubspaceEnsemble m = train_subspace_ensemble(s.train, {1, 4, 5, true}, 0);
        const auto cm = confusion_matrix(s.test.labels, predict(m, s.test));
        CHECK(cm[1][1] >= last);
        last = cm[1][1];
    }
}

TEST_CASE("fixture split is imbalanced as described") {
    const Dataset raw = imbalanced_ids(6500, 1);
    const auto attack = std::count(raw.labels.begin(), raw.labels.end(), 0);
    CHECK(attack == 1000);
    CHECK(static_cast<double>(raw.rows() - static_cast<std::size_t>(attack)) / static_cast<double>(attack) ==
          doctest::Approx(5.5).epsilon(0.02));
    const Dataset again = imbalanced_ids(6500, 1);
    CHECK(again.cells == raw.cells);
    CHECK(again.labels == raw.labels);
}

TEST_CASE("full experiment reports every condition on one test set") {
    const Dataset raw = imbalanced_ids(3250, 2);
    const Dataset benign = raw.with_label(1), attack = raw.with_label(0);
    IdsConfig cfg;
    cfg.ensemble.cycles = 15;
    cfg.generator_overrides = fast_overrides();
    cfg.seed = 5;
    const IdsReport r = run_experiment(benign, attack, cfg);
    std::vector<std::string> names;
    for (const auto& c : r.conditions) names.push_back(c.name);
    CHECK(names == std::vector<std::string>{"baseline", "smote", "vae", "gan", "dm", "ldm"});
    CHECK(r.test_benign == 550);
    CHECK(r.test_attack == 100);
    const double baseline = r.condition("baseline").f1;
    for (const auto& c : r.conditions) {
        MESSAGE(c.name << " f1 " << c.f1);
        CHECK(c.cm[0][0] + c.cm[0][1] == doctest::Approx(100.0));
        CHECK(c.cm[1][0] + c.cm[1][1] == doctest::Approx(100.0));
        if (c.name == "baseline") continue;
        CHECK(c.achieved_ratio == doctest::Approx(1.0).epsilon(0.01));
        REQUIRE(c.metrics.has_value());
        CHECK(std::isfinite(c.metrics->mmd));
    }
    CHECK(r.condition("smote").f1 >= baseline);
    CHECK_THROWS_AS(r.condition("nope"), ConfigError);

    const json j = r;
    CHECK(j.at("conditions").size() == 6);
    std::ostringstream csv;
    write_report_csv(csv, r);
    CHECK(csv.str().rfind("condition,metric,value\n", 0) == 0);
    CHECK(format_ids_table(r).find("baseline") != std::string::npos);
}

TEST_CASE("experiment config round trips through json") {
    IdsConfig c;
    c.variants = {Variant::dm, Variant::smote};
    c.ensemble.cycles = 7;
    c.preset = "mirai";
    c.seed = 99;
    IdsConfig back;
    from_json(json(c), back);
    CHECK(back.variants == c.variants);
    CHECK(back.ensemble.cycles == 7);
    CHECK(back.preset == "mirai");
    CHECK(back.seed == 99);
    IdsConfig bad;
    CHECK_THROWS_AS(from_json(json{{"variants", {"nope"}}}, bad), ConfigError);
}
