#include "netsynth/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "netsynth/dataio.hpp"
#include "netsynth/fixtures.hpp"
#include "netsynth/generators.hpp"
#include "netsynth/ids_bench.hpp"
#include "netsynth/metrics.hpp"

namespace netsynth {

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return kExitConfig;
        case ErrorCategory::data: return kExitData;
        case ErrorCategory::numeric: return kExitNumeric;
    }
    return kExitOther;
}

void to_json(json& j, const RunConfig& c) {
    j = {{"command", c.command}, {"params", c.params}, {"resolved", c.resolved}};
}

void from_json(const json& j, RunConfig& c) {
    c.command = j.at("command").get<std::string>();
    c.params = j.value("params", json::object());
    c.resolved = j.value("resolved", json::object());
}

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 0;

    // fixture
    std::string kind;
    std::size_t n = 1000;

    // shared paths
    std::string in, out, out_dir, train, state, model_path, real, synth, data, split_dir, projection;
    std::vector<std::string> models;

    // preprocess
    std::string label;
    double skew_cutoff = 2.0;
    std::size_t discrete_max_distinct = 10;
    bool no_outliers = false;

    // fit / bench
    std::string variant;
    std::string preset = "default";
    std::string overrides = "{}";
    std::string class_name;
    std::string attack_class;
    std::vector<std::string> variants{"smote", "vae", "gan", "dm", "ldm"};

    // generate
    bool raw = false;

    // metrics
    std::size_t kl_bins = 50, mi_bins = 20, k = 5, cap = 5000;
    double bandwidth = 0.0;
    bool no_metrics = false;

    // ids
    std::size_t cycles = 100, subspace_dim = 0;
    double target_ratio = 1.0, test_fraction = 0.2;

    // timing
    std::vector<std::size_t> sizes{100, 1000, 10000};
    std::size_t repeats = 5;
};

struct Commands {
    CLI::App* fixture;
    CLI::App* preprocess;
    CLI::App* fit;
    CLI::App* generate;
    CLI::App* evaluate;
    CLI::App* bench_ids;
    CLI::App* bench_time;
};

void common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "Run configuration JSON written by an earlier run");
    sub->add_option("--seed", o.seed, "Seed for every random choice");
}

void metric_options(CLI::App* sub, Options& o) {
    sub->add_option("--kl-bins", o.kl_bins, "Bins for continuous marginals");
    sub->add_option("--mi-bins", o.mi_bins, "Equal-frequency bins for mutual information");
    sub->add_option("--k", o.k, "Neighbours for precision/recall and the ensemble");
    sub->add_option("--cap", o.cap, "Row cap for the kernel distance");
    sub->add_option("--bandwidth", o.bandwidth, "Kernel bandwidth (0 picks the median heuristic)");
}

Commands build(CLI::App& app, Options& o, bool enforce_required) {
    Commands c{};
    app.require_subcommand(1);

    c.fixture = app.add_subcommand("fixture", "Write a seeded synthetic dataset as CSV");
    common(c.fixture, o);
    c.fixture->add_option("--kind", o.kind, "two_moons, mixed_clusters or imbalanced_ids")->required(enforce_required);
    c.fixture->add_option("--n", o.n, "Row count");
    c.fixture->add_option("--out", o.out, "Output CSV")->required(enforce_required);

    c.preprocess = app.add_subcommand("preprocess", "Clean, split 80/10/10 and encode a raw CSV");
    common(c.preprocess, o);
    c.preprocess->add_option("--in", o.in, "Raw CSV")->required(enforce_required);
    c.preprocess->add_option("--out-dir", o.out_dir, "Output directory")->required(enforce_required);
    c.preprocess->add_option("--label", o.label, "Label column, if any");
    c.preprocess->add_option("--skew-cutoff", o.skew_cutoff, "Absolute skewness above which log1p is applied");
    c.preprocess->add_option("--discrete-max-distinct", o.discrete_max_distinct,
                             "Columns with at most this many distinct values are discrete");
    c.preprocess->add_flag("--no-outliers", o.no_outliers, "Skip gap-based outlier removal");

    c.fit = app.add_subcommand("fit", "Fit a generator on encoded rows of one class");
    common(c.fit, o);
    c.fit->add_option("variant,--variant", o.variant, "smote, vae, gan, dm or ldm")->required(enforce_required);
    c.fit->add_option("--train", o.train, "Encoded training CSV")->required(enforce_required);
    c.fit->add_option("--state", o.state, "Preprocessing state JSON")->required(enforce_required);
    c.fit->add_option("--class", o.class_name, "Class to fit on when the rows are labeled");
    c.fit->add_option("--preset", o.preset, "Hyperparameter preset");
    c.fit->add_option("--set", o.overrides, "JSON overlay on the resolved generator config");
    c.fit->add_option("--out", o.out, "Generator container (.json for text, anything else for binary)")->required(enforce_required);

    c.generate = app.add_subcommand("generate", "Sample rows from a generator container");
    common(c.generate, o);
    c.generate->add_option("--model", o.model_path, "Generator container")->required(enforce_required);
    c.generate->add_option("--n", o.n, "Row count")->required(enforce_required);
    c.generate->add_flag("--raw", o.raw, "Invert preprocessing to raw units");
    c.generate->add_option("--out", o.out, "Output CSV")->required(enforce_required);

    c.evaluate = app.add_subcommand("evaluate", "Compare synthetic rows with real rows");
    common(c.evaluate, o);
    c.evaluate->add_option("--real", o.real, "Encoded real CSV")->required(enforce_required);
    c.evaluate->add_option("--synth", o.synth, "Encoded synthetic CSV")->required(enforce_required);
    c.evaluate->add_option("--state", o.state, "Preprocessing state JSON")->required(enforce_required);
    c.evaluate->add_option("--class", o.class_name, "Keep only rows of this class");
    metric_options(c.evaluate, o);
    c.evaluate->add_option("--projection", o.projection, "Also write a two-component PCA projection CSV");
    c.evaluate->add_option("--out", o.out, "Report JSON")->required(enforce_required);

    c.bench_ids = app.add_subcommand("bench-ids", "Downstream detection benchmark");
    common(c.bench_ids, o);
    c.bench_ids->add_option("--data", o.data, "Raw labeled CSV; every generator is fitted in-process");
    c.bench_ids->add_option("--split-dir", o.split_dir, "Output of preprocess; used with --model");
    c.bench_ids->add_option("--model", o.models, "Generator containers fitted on the split's attack rows");
    c.bench_ids->add_option("--label", o.label, "Label column of --data");
    c.bench_ids->add_option("--attack-class", o.attack_class, "Attack class; every other class is benign")->required(enforce_required);
    c.bench_ids->add_option("--variants", o.variants, "Generators fitted with --data");
    c.bench_ids->add_option("--preset", o.preset, "Hyperparameter preset for --data");
    c.bench_ids->add_option("--set", o.overrides, "JSON overlay on every generator config");
    c.bench_ids->add_option("--cycles", o.cycles, "Ensemble learners");
    c.bench_ids->add_option("--subspace-dim", o.subspace_dim, "Features per learner (0 picks half)");
    c.bench_ids->add_option("--target-ratio", o.target_ratio, "Attack:benign ratio after augmentation");
    c.bench_ids->add_option("--test-fraction", o.test_fraction, "Held-out fraction per class for --data");
    c.bench_ids->add_flag("--no-metrics", o.no_metrics, "Skip sample-quality metrics");
    metric_options(c.bench_ids, o);
    c.bench_ids->add_option("--out", o.out, "Report JSON; a flat CSV is written alongside")->required(enforce_required);

    c.bench_time = app.add_subcommand("bench-time", "Time sampling for generator containers");
    common(c.bench_time, o);
    c.bench_time->add_option("--model", o.models, "Generator containers")->required(enforce_required);
    c.bench_time->add_option("--sizes", o.sizes, "Sample sizes");
    c.bench_time->add_option("--repeats", o.repeats, "Repeats per size");
    c.bench_time->add_option("--out", o.out, "Report JSON")->required(enforce_required);
    return c;
}

json params_of(const std::string& command, const Options& o) {
    json p = {{"seed", o.seed}};
    auto metrics = [&] {
        p["kl-bins"] = o.kl_bins;
        p["mi-bins"] = o.mi_bins;
        p["k"] = o.k;
        p["cap"] = o.cap;
        p["bandwidth"] = o.bandwidth;
    };
    if (command == "fixture") {
        p.update({{"kind", o.kind}, {"n", o.n}, {"out", o.out}});
    } else if (command == "preprocess") {
        p.update({{"in", o.in},
                  {"out-dir", o.out_dir},
                  {"label", o.label},
                  {"skew-cutoff", o.skew_cutoff},
                  {"discrete-max-distinct", o.discrete_max_distinct},
                  {"no-outliers", o.no_outliers}});
    } else if (command == "fit") {
        p.update({{"variant", o.variant},
                  {"train", o.train},
                  {"state", o.state},
                  {"class", o.class_name},
                  {"preset", o.preset},
                  {"set", o.overrides},
                  {"out", o.out}});
    } else if (command == "generate") {
        p.update({{"model", o.model_path}, {"n", o.n}, {"raw", o.raw}, {"out", o.out}});
    } else if (command == "evaluate") {
        p.update({{"real", o.real}, {"synth", o.synth}, {"state", o.state}, {"class", o.class_name}, {"projection", o.projection}, {"out", o.out}});
        metrics();
    } else if (command == "bench-ids") {
        p.update({{"data", o.data},
                  {"split-dir", o.split_dir},
                  {"model", o.models},
                  {"label", o.label},
                  {"attack-class", o.attack_class},
                  {"variants", o.variants},
                  {"preset", o.preset},
                  {"set", o.overrides},
                  {"cycles", o.cycles},
                  {"subspace-dim", o.subspace_dim},
                  {"target-ratio", o.target_ratio},
                  {"test-fraction", o.test_fraction},
                  {"no-metrics", o.no_metrics},
                  {"out", o.out}});
        metrics();
    } else if (command == "bench-time") {
        p.update({{"model", o.models}, {"sizes", o.sizes}, {"repeats", o.repeats}, {"out", o.out}});
    }
    return p;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

// Command-line arguments for every config entry the user did not give explicitly.
std::vector<std::string> config_arguments(const CLI::App& sub, const RunConfig& rc) {
    std::vector<std::string> extra;
    for (const auto& [key, value] : rc.params.items()) {
        const CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) throw ConfigError("run configuration has an unknown parameter '" + key + "'");
        if (opt->count() > 0) continue;
        if (value.is_array()) {
            for (const auto& v : value) extra.push_back("--" + key + "=" + scalar_text(v));
        } else if (!(value.is_string() && value.get<std::string>().empty())) {
            extra.push_back("--" + key + "=" + scalar_text(value));
        }
    }
    return extra;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot read run configuration '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("run configuration '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return j.get<RunConfig>();
    } catch (const json::exception& e) {
        throw ConfigError("run configuration '" + path + "' is malformed: " + e.what());
    }
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

void check_outputs(const std::vector<std::string>& inputs, const std::string& output) {
    namespace fs = std::filesystem;
    for (const auto& in : inputs) {
        if (in.empty()) continue;
        std::error_code ec;
        if (fs::exists(output, ec) && fs::equivalent(in, output, ec))
            throw ConfigError("output '" + output + "' would overwrite input '" + in + "'");
    }
}

PreprocessState load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot read preprocessing state '" + path + "'");
    try {
        json j;
        in >> j;
        return j.get<PreprocessState>();
    } catch (const json::exception& e) {
        throw IngestionError("preprocessing state '" + path + "' is malformed: " + e.what());
    }
}

int class_index(const TableSchema& schema, const std::string& name) {
    for (std::size_t i = 0; i < schema.class_labels.size(); ++i)
        if (schema.class_labels[i] == name) return static_cast<int>(i);
    std::string valid;
    for (const auto& c : schema.class_labels) valid += (valid.empty() ? "" : ", ") + c;
    throw ConfigError("unknown class '" + name + "' (classes: " + valid + ")");
}

Dataset rows_of_class(const Dataset& d, const std::string& name) {
    if (name.empty()) return d;
    if (!d.labeled()) throw ConfigError("--class needs labeled rows");
    return d.with_label(class_index(d.schema, name));
}

// Attack rows and everything else, with labels removed.
std::pair<Dataset, Dataset> benign_attack(const Dataset& d, const std::string& attack_class) {
    if (!d.labeled()) throw ConfigError("benchmark rows need a label column");
    const int attack = class_index(d.schema, attack_class);
    std::vector<std::size_t> b, a;
    for (std::size_t i = 0; i < d.labels.size(); ++i) (d.labels[i] == attack ? a : b).push_back(i);
    auto strip = [](Dataset x) {
        x.labels.clear();
        x.schema.label_column.clear();
        x.schema.class_labels.clear();
        return x;
    };
    return {strip(d.select_rows(b)), strip(d.select_rows(a))};
}

MetricConfig metric_config(const Options& o) {
    MetricConfig m;
    m.kl_bins = o.kl_bins;
    m.mi_bins = o.mi_bins;
    m.k = o.k;
    m.cap = o.cap;
    m.bandwidth = o.bandwidth;
    m.seed = o.seed;
    return m;
}

json parse_overrides(const std::string& text) {
    try {
        json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("--set must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("--set is not valid JSON: ") + e.what());
    }
}

// ------------------------------------------------------------- commands ----

void cmd_fixture(const Options& o, RunConfig& rc, std::ostream& out) {
    const FixtureKind kind = fixture_from_string(o.kind);
    const Dataset d = make_fixture(kind, o.n, o.seed);
    save_csv(o.out, d);
    write_json(o.out + ".run.json", rc);
    out << "wrote " << d.rows() << " rows of " << to_string(kind) << " to " << o.out << '\n';
}

void cmd_preprocess(const Options& o, RunConfig& rc, std::ostream& out, std::ostream& err) {
    namespace fs = std::filesystem;
    SchemaConfig sc;
    sc.label_column = o.label;
    sc.discrete_max_distinct = o.discrete_max_distinct;
    LoadStats stats;
    const Dataset loaded = load_csv(o.in, sc, &stats);
    const auto constant = constant_features(loaded);
    Dataset data = drop_constant(loaded);
    std::size_t outliers = 0;
    json outlier_info = nullptr;
    if (!o.no_outliers) {
        const ThresholdCalibration cal = calibrate_gap_threshold(data);
        data = remove_outliers(data, cal.bounds, &outliers);
        outlier_info = {{"threshold", cal.threshold}, {"within_grid", cal.within_grid}};
    }
    const SplitResult s = split(data, {0.8, 0.1, 0.1}, o.seed);
    PreprocessConfig pc;
    pc.skew_cutoff = o.skew_cutoff;
    const PreprocessState state = fit_preprocess(s.train, pc);
    std::size_t dropped_val = 0, dropped_test = 0;
    const Dataset train = apply_preprocess(state, s.train);
    const Dataset val = apply_preprocess(state, s.val, true, &dropped_val);
    const Dataset test = apply_preprocess(state, s.test, true, &dropped_test);

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    save_csv((dir / "train.csv").string(), train);
    save_csv((dir / "val.csv").string(), val);
    save_csv((dir / "test.csv").string(), test);
    write_json((dir / "preprocess.json").string(), json(state));

    const std::size_t total = stats.rows_read;
    const std::size_t discarded = stats.rows_dropped_missing + outliers + dropped_val + dropped_test;
    const double rate = total ? static_cast<double>(discarded) / static_cast<double>(total) : 0.0;
    std::vector<std::string> dropped_names;
    for (auto j : constant) dropped_names.push_back(loaded.schema.features[j].name);
    rc.resolved = {{"rows_read", total},
                   {"rows_missing", stats.rows_dropped_missing},
                   {"rows_outliers", outliers},
                   {"rows_unseen_categories", dropped_val + dropped_test},
                   {"discard_rate", rate},
                   {"constant_features_dropped", dropped_names},
                   {"outliers", outlier_info},
                   {"split_rows", {train.rows(), val.rows(), test.rows()}}};
    write_json((dir / "run_config.json").string(), rc);
    char buf[160];
    std::snprintf(buf, sizeof buf, "discarded %zu of %zu rows (%.3f%%)\n", discarded, total, 100.0 * rate);
    out << buf;
    out << "train " << train.rows() << ", val " << val.rows() << ", test " << test.rows() << " rows written to " << o.out_dir
        << '\n';
    if (rate >= 0.01) err << "warning: discard rate is at least 1%\n";
}

void cmd_fit(const Options& o, RunConfig& rc, std::ostream& out) {
    check_outputs({o.train, o.state}, o.out);
    const PreprocessState state = load_state(o.state);
    const Dataset all = load_csv_with_schema(o.train, state.encoded_schema, DataStage::encoded);
    const Dataset train = rows_of_class(all, o.class_name);
    const Variant v = variant_from_string(o.variant);
    GenConfig gc = resolve_config(v, o.preset, train.schema);
    from_json(parse_overrides(o.overrides), gc);
    gc.variant = v;
    finalize_config(gc, train.schema);
    rc.resolved = {{"generator", gc}, {"rows", train.rows()}};
    Generator g = fit_generator(train, gc, o.seed);
    g.preprocess = state;
    save_generator(g, o.out);
    write_json(o.out + ".run.json", rc);
    out << "fitted " << to_string(v) << " (preset " << o.preset << ") on " << train.rows() << " rows in " << g.report.seconds
        << " s\n";
    if (v == Variant::dm) out << "diffusion steps: " << gc.dm.steps << '\n';
    if (v == Variant::ldm)
        out << "diffusion steps: " << gc.ldm.diffusion.steps << ", latent dimension: " << gc.ldm.ae.latent_dim << '\n';
    for (const auto& w : g.report.warnings) out << "warning: " << w << '\n';
}

void cmd_generate(const Options& o, RunConfig& rc, std::ostream& out) {
    check_outputs({o.model_path}, o.out);
    const Generator g = load_generator(o.model_path);
    const SyntheticBatch batch = generate(g, o.n, o.seed);
    save_csv(o.out, o.raw ? to_raw(g, batch) : batch.data);
    rc.resolved = {{"variant", to_string(g.variant())}, {"provenance", {{"fit_seed", g.provenance.fit_seed}, {"fit_rows", g.provenance.fit_rows}}}};
    write_json(o.out + ".run.json", rc);
    out << "wrote " << batch.data.rows() << (o.raw ? " raw" : " encoded") << " rows to " << o.out << '\n';
}

void cmd_evaluate(const Options& o, RunConfig& rc, std::ostream& out) {
    check_outputs({o.real, o.synth, o.state}, o.out);
    const PreprocessState state = load_state(o.state);
    TableSchema synth_schema = state.encoded_schema;
    const Dataset real = rows_of_class(load_csv_with_schema(o.real, state.encoded_schema, DataStage::encoded), o.class_name);
    Dataset synth;
    {
        // synthetic files may or may not carry the label column
        std::ifstream probe(o.synth);
        std::string header;
        std::getline(probe, header);
        if (synth_schema.label_column.empty() || header.find(synth_schema.label_column) == std::string::npos) {
            synth_schema.label_column.clear();
            synth_schema.class_labels.clear();
        }
        synth = load_csv_with_schema(o.synth, synth_schema, DataStage::encoded);
        if (synth.labeled() && !o.class_name.empty()) synth = rows_of_class(synth, o.class_name);
    }
    const MetricConfig mc = metric_config(o);
    MetricReport r = evaluate(real, synth, mc);
    r.label = std::filesystem::path(o.synth).stem().string();
    write_json(o.out, json(r));
    if (!o.projection.empty()) {
        const MetricSpace space = fit_metric_space(real);
        const Projection p = project_2d(to_metric_space(space, real), to_metric_space(space, synth));
        std::ofstream f(o.projection);
        if (!f) throw IngestionError("cannot write '" + o.projection + "'");
        write_projection_csv(f, p);
    }
    rc.resolved = {{"metrics", mc}};
    write_json(o.out + ".run.json", rc);
    out << format_metric_table({r});
}

void cmd_bench_ids(const Options& o, RunConfig& rc, std::ostream& out) {
    namespace fs = std::filesystem;
    IdsConfig cfg;
    cfg.test_fraction = o.test_fraction;
    cfg.target_ratio = o.target_ratio;
    cfg.ensemble.cycles = o.cycles;
    cfg.ensemble.subspace_dim = o.subspace_dim;
    cfg.ensemble.k = o.k;
    cfg.preset = o.preset;
    cfg.generator_overrides = parse_overrides(o.overrides);
    cfg.compute_metrics = !o.no_metrics;
    cfg.metrics = metric_config(o);
    cfg.seed = o.seed;
    cfg.variants.clear();
    for (const auto& v : o.variants) cfg.variants.push_back(variant_from_string(v));

    IdsReport report;
    if (!o.data.empty() == !o.split_dir.empty()) throw ConfigError("bench-ids needs exactly one of --data and --split-dir");
    if (!o.data.empty()) {
        if (!o.models.empty()) throw ConfigError("--model is used with --split-dir; --data fits generators in-process");
        if (o.label.empty()) throw ConfigError("--data needs --label");
        check_outputs({o.data}, o.out);
        SchemaConfig sc;
        sc.label_column = o.label;
        const Dataset d = load_csv(o.data, sc);
        const auto [benign, attack] = benign_attack(d, o.attack_class);
        report = run_experiment(benign, attack, cfg);
    } else {
        const fs::path dir(o.split_dir);
        const PreprocessState state = load_state((dir / "preprocess.json").string());
        if (state.encoded_schema.label_column.empty()) throw ConfigError("the split in '" + o.split_dir + "' is unlabeled");
        const Dataset train = load_csv_with_schema((dir / "train.csv").string(), state.encoded_schema, DataStage::encoded);
        const Dataset test = load_csv_with_schema((dir / "test.csv").string(), state.encoded_schema, DataStage::encoded);
        const auto [benign_train, attack_train] = benign_attack(train, o.attack_class);
        const auto [benign_test, attack_test] = benign_attack(test, o.attack_class);
        std::vector<Generator> gens;
        for (const auto& path : o.models) gens.push_back(load_generator(path));
        std::vector<const Generator*> ptrs;
        for (auto& g : gens) ptrs.push_back(&g);
        report = run_with_generators(benign_train, attack_train, benign_test, attack_test, ptrs, cfg);
    }
    write_json(o.out, json(report));
    {
        std::ofstream csv(o.out + ".csv");
        if (!csv) throw IngestionError("cannot write '" + o.out + ".csv'");
        write_report_csv(csv, report);
    }
    rc.resolved = {{"ids", report.config}};
    write_json(o.out + ".run.json", rc);
    out << format_ids_table(report);
    std::vector<MetricReport> metrics;
    for (const auto& c : report.conditions)
        if (c.metrics) metrics.push_back(*c.metrics);
    if (!metrics.empty()) out << format_metric_table(metrics);
    for (const auto& c : report.conditions)
        for (const auto& w : c.warnings) out << "warning (" << c.name << "): " << w << '\n';
}

void cmd_bench_time(const Options& o, RunConfig& rc, std::ostream& out) {
    check_outputs(o.models, o.out);
    std::vector<Generator> gens;
    for (const auto& path : o.models) gens.push_back(load_generator(path));
    std::vector<const Generator*> ptrs;
    for (auto& g : gens) ptrs.push_back(&g);
    const TimingReport r = time_benchmark(ptrs, o.sizes, o.repeats, o.seed);
    write_json(o.out, json(r));
    write_json(o.out + ".run.json", rc);
    out << format_timing_table(r);
}

std::vector<const char*> argv_of(const std::vector<std::string>& args) {
    static const char* program = "netsynth";
    std::vector<const char*> argv{program};
    for (const auto& a : args) argv.push_back(a.c_str());
    return argv;
}

const CLI::App* chosen(const CLI::App& app) {
    const auto subs = app.get_subcommands();
    return subs.empty() ? nullptr : subs.front();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        // The first pass only locates the subcommand and --config; required
        // options are checked once values from the config file are merged in.
        Options o;
        CLI::App probe("", "netsynth");
        build(probe, o, false);
        std::vector<std::string> full = args;
        auto parse = [&](CLI::App& app) -> int {
            try {
                auto argv = argv_of(full);
                app.parse(static_cast<int>(argv.size()), argv.data());
                return -1;
            } catch (const CLI::ParseError& e) {
                const int code = app.exit(e, out, err);
                return code == 0 ? kExitOk : kExitConfig;
            }
        };
        if (const int code = parse(probe); code >= 0) return code;
        if (!o.config.empty()) {
            const CLI::App* sub = chosen(probe);
            const RunConfig loaded = load_run_config(o.config);
            if (loaded.command != sub->get_name())
                throw ConfigError("run configuration is for '" + loaded.command + "', not '" + sub->get_name() + "'");
            const auto extra = config_arguments(*sub, loaded);
            full.insert(full.end(), extra.begin(), extra.end());
        }
        o = Options{};
        CLI::App app("Synthetic network-attack rows from latent diffusion and baseline generators", "netsynth");
        build(app, o, true);
        if (const int code = parse(app); code >= 0) return code;
        const CLI::App* sub = chosen(app);

        const std::string command = sub->get_name();
        RunConfig rc;
        rc.command = command;
        rc.params = params_of(command, o);
        if (command == "fixture") cmd_fixture(o, rc, out);
        else if (command == "preprocess") cmd_preprocess(o, rc, out, err);
        else if (command == "fit") cmd_fit(o, rc, out);
        else if (command == "generate") cmd_generate(o, rc, out);
        else if (command == "evaluate") cmd_evaluate(o, rc, out);
        else if (command == "bench-ids") cmd_bench_ids(o, rc, out);
        else if (command == "bench-time") cmd_bench_time(o, rc, out);
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitOther;
    }
}

}  // namespace netsynth
