#include "netsynth/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "netsynth/common.hpp"
#include "netsynth/errors.hpp"

namespace netsynth {

// ---------------------------------------------------------------- schema ----

std::size_t TableSchema::continuous_count() const {
    return static_cast<std::size_t>(std::count_if(features.begin(), features.end(), [](const FeatureSpec& f) {
        return f.kind == FeatureKind::continuous;
    }));
}

std::size_t TableSchema::discrete_count() const { return features.size() - continuous_count(); }

std::vector<std::size_t> TableSchema::continuous_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].kind == FeatureKind::continuous) out.push_back(i);
    return out;
}

std::vector<std::size_t> TableSchema::discrete_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].kind == FeatureKind::discrete) out.push_back(i);
    return out;
}

std::size_t TableSchema::relaxed_width() const {
    std::size_t w = 0;
    for (const auto& f : features) w += f.kind == FeatureKind::continuous ? 1 : f.cardinality;
    return w;
}

std::size_t TableSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].name == name) return i;
    throw ConfigError("no feature named '" + name + "'");
}

// --------------------------------------------------------------- dataset ----

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.schema = schema;
    out.stage = stage;
    out.cells = gather_rows(cells, rows);
    if (labeled()) {
        out.labels.reserve(rows.size());
        for (auto r : rows) out.labels.push_back(labels[r]);
    }
    return out;
}

Dataset Dataset::with_label(int label) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) keep.push_back(i);
    return select_rows(keep);
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(cells.cols()) != schema.feature_count())
        throw ShapeError("dataset has " + std::to_string(cells.cols()) + " columns but schema declares " +
                         std::to_string(schema.feature_count()));
    if (labeled() && labels.size() != rows()) throw ShapeError("dataset label count does not match rows");
    for (std::size_t j = 0; j < schema.feature_count(); ++j) {
        const auto& f = schema.features[j];
        for (Eigen::Index i = 0; i < cells.rows(); ++i) {
            const double v = cells(i, static_cast<Eigen::Index>(j));
            if (!std::isfinite(v))
                throw DomainError("non-finite cell at row " + std::to_string(i) + ", feature '" + f.name + "'");
            if (stage == DataStage::encoded && f.kind == FeatureKind::discrete) {
                if (v < 0 || v != std::floor(v) || v >= static_cast<double>(f.cardinality))
                    throw DomainError("invalid category index " + std::to_string(v) + " at row " +
                                      std::to_string(i) + ", feature '" + f.name + "'");
            }
        }
    }
}

Dataset concat_rows(const Dataset& a, const Dataset& b) {
    if (a.schema.features != b.schema.features) throw ShapeError("concat_rows: schemas differ");
    if (a.stage != b.stage) throw ShapeError("concat_rows: datasets are at different stages");
    Dataset out;
    out.schema = a.schema;
    out.stage = a.stage;
    out.cells.resize(a.cells.rows() + b.cells.rows(), a.cells.cols());
    if (a.cells.rows() > 0) out.cells.topRows(a.cells.rows()) = a.cells;
    if (b.cells.rows() > 0) out.cells.bottomRows(b.cells.rows()) = b.cells;
    if (a.labeled() != b.labeled() && a.rows() > 0 && b.rows() > 0)
        throw ShapeError("concat_rows: cannot mix labeled and unlabeled data");
    if (a.labeled() || b.labeled()) {
        // union of class labels, a's order first
        out.schema.class_labels = a.schema.class_labels;
        std::vector<int> remap;
        for (const auto& name : b.schema.class_labels) {
            auto it = std::find(out.schema.class_labels.begin(), out.schema.class_labels.end(), name);
            if (it == out.schema.class_labels.end()) {
                out.schema.class_labels.push_back(name);
                it = out.schema.class_labels.end() - 1;
            }
            remap.push_back(static_cast<int>(it - out.schema.class_labels.begin()));
        }
        out.labels = a.labels;
        for (int l : b.labels) out.labels.push_back(remap.at(static_cast<std::size_t>(l)));
        if (out.schema.label_column.empty()) out.schema.label_column = b.schema.label_column;
    }
    return out;
}

// ------------------------------------------------------------------- csv ----

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

enum class CellParse { ok, missing, invalid };

CellParse parse_cell(const std::string& raw, double& value) {
    const std::string s = trim(raw);
    if (s.empty()) return CellParse::missing;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        std::string lower = s;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lower == "nan" || lower == "inf" || lower == "-inf" || lower == "infinity" || lower == "-infinity")
            return CellParse::missing;
        return CellParse::invalid;
    }
    if (!std::isfinite(value)) return CellParse::missing;
    return CellParse::ok;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct RawTable {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
};

RawTable parse_table(std::istream& in, const std::string& label_column, const std::string& source, LoadStats* stats) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError(source + ": missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    std::ptrdiff_t label_idx = -1;
    if (!label_column.empty()) {
        auto it = std::find(header.begin(), header.end(), label_column);
        if (it == header.end()) throw ConfigError(source + ": label column '" + label_column + "' not found");
        label_idx = it - header.begin();
    }
    RawTable table;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<std::ptrdiff_t>(c) != label_idx) table.feature_names.push_back(header[c]);

    std::size_t line_no = 1;
    LoadStats local;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw IngestionError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(header.size()));
        ++local.rows_read;
        std::vector<double> values;
        values.reserve(table.feature_names.size());
        bool missing = false;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == label_idx) continue;
            double v = 0.0;
            switch (parse_cell(cells[c], v)) {
                case CellParse::ok: values.push_back(v); break;
                case CellParse::missing: missing = true; break;
                case CellParse::invalid:
                    throw IngestionError(source + ": unparseable cell '" + cells[c] + "' at row " +
                                         std::to_string(line_no) + ", column '" + header[c] + "'");
            }
        }
        if (missing) {
            ++local.rows_dropped_missing;
            continue;
        }
        table.rows.push_back(std::move(values));
        if (label_idx >= 0) table.labels.push_back(trim(cells[static_cast<std::size_t>(label_idx)]));
    }
    if (stats) *stats = local;
    return table;
}

void assign_labels(Dataset& data, const std::vector<std::string>& raw_labels, bool sort_classes) {
    if (raw_labels.empty()) return;
    if (sort_classes) {
        std::set<std::string> unique(raw_labels.begin(), raw_labels.end());
        data.schema.class_labels.assign(unique.begin(), unique.end());
    }
    data.labels.reserve(raw_labels.size());
    for (const auto& l : raw_labels) {
        auto& classes = data.schema.class_labels;
        auto it = std::find(classes.begin(), classes.end(), l);
        if (it == classes.end()) {
            classes.push_back(l);
            it = classes.end() - 1;
        }
        data.labels.push_back(static_cast<int>(it - classes.begin()));
    }
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace

Dataset read_csv(std::istream& in, const SchemaConfig& config, const std::string& source, LoadStats* stats) {
    RawTable table = parse_table(in, config.label_column, source, stats);
    for (const auto& [name, kind] : config.kind_overrides) {
        (void)kind;
        if (std::find(table.feature_names.begin(), table.feature_names.end(), name) == table.feature_names.end())
            throw ConfigError(source + ": kind override for unknown column '" + name + "'");
    }
    Dataset data;
    data.schema.label_column = config.label_column;
    const std::size_t cols = table.feature_names.size();
    data.cells = to_matrix(table.rows, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        std::set<double> distinct;
        for (const auto& r : table.rows) distinct.insert(r[j]);
        FeatureSpec f;
        f.name = table.feature_names[j];
        f.kind = distinct.size() > config.discrete_max_distinct ? FeatureKind::continuous : FeatureKind::discrete;
        if (auto it = config.kind_overrides.find(f.name); it != config.kind_overrides.end()) f.kind = it->second;
        f.cardinality = f.kind == FeatureKind::discrete ? distinct.size() : 0;
        data.schema.features.push_back(std::move(f));
    }
    assign_labels(data, table.labels, true);
    data.stage = DataStage::raw;
    return data;
}

Dataset load_csv(const std::string& path, const SchemaConfig& config, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    return read_csv(in, config, path, stats);
}

Dataset read_csv_with_schema(std::istream& in, const TableSchema& schema, DataStage stage, const std::string& source) {
    RawTable table = parse_table(in, schema.label_column, source, nullptr);
    Dataset data;
    data.schema = schema;
    data.stage = stage;
    std::vector<std::size_t> column_of(schema.feature_count());
    for (std::size_t j = 0; j < schema.feature_count(); ++j) {
        auto it = std::find(table.feature_names.begin(), table.feature_names.end(), schema.features[j].name);
        if (it == table.feature_names.end())
            throw IngestionError(source + ": column '" + schema.features[j].name + "' missing");
        column_of[j] = static_cast<std::size_t>(it - table.feature_names.begin());
    }
    data.cells.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(schema.feature_count()));
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        for (std::size_t j = 0; j < schema.feature_count(); ++j)
            data.cells(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.rows[i][column_of[j]];
    assign_labels(data, table.labels, false);
    return data;
}

Dataset load_csv_with_schema(const std::string& path, const TableSchema& schema, DataStage stage) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    return read_csv_with_schema(in, schema, stage, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
    const bool with_labels = data.labeled() && !data.schema.label_column.empty();
    for (std::size_t j = 0; j < data.schema.feature_count(); ++j) out << (j ? "," : "") << data.schema.features[j].name;
    if (with_labels) out << (data.schema.feature_count() ? "," : "") << data.schema.label_column;
    out << '\n';
    for (Eigen::Index i = 0; i < data.cells.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cells.cols(); ++j) out << (j ? "," : "") << format_number(data.cells(i, j));
        if (with_labels)
            out << (data.cells.cols() ? "," : "")
                << data.schema.class_labels.at(static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)]));
        out << '\n';
    }
}

void save_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write '" + path + "'");
    write_csv(out, data);
}

// ------------------------------------------------------ constant features ----

std::vector<std::size_t> constant_features(const Dataset& data) {
    std::vector<std::size_t> out;
    for (Eigen::Index j = 0; j < data.cells.cols(); ++j) {
        bool varies = false;
        for (Eigen::Index i = 1; i < data.cells.rows() && !varies; ++i) varies = data.cells(i, j) != data.cells(0, j);
        if (!varies) out.push_back(static_cast<std::size_t>(j));
    }
    return out;
}

Dataset drop_constant(const Dataset& data) {
    const auto constant = constant_features(data);
    if (constant.size() == data.schema.feature_count())
        throw FitError("every feature is constant; nothing left after constant removal");
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < data.schema.feature_count(); ++j)
        if (!std::binary_search(constant.begin(), constant.end(), j)) keep.push_back(j);
    Dataset out;
    out.stage = data.stage;
    out.labels = data.labels;
    out.schema.label_column = data.schema.label_column;
    out.schema.class_labels = data.schema.class_labels;
    out.cells.resize(data.cells.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.schema.features.push_back(data.schema.features[keep[k]]);
        out.cells.col(static_cast<Eigen::Index>(k)) = data.cells.col(static_cast<Eigen::Index>(keep[k]));
    }
    return out;
}

// --------------------------------------------------------------- outliers ----

Bounds gap_outlier_bounds(std::span<const double> column, double gap_threshold, double max_tail_fraction) {
    if (column.size() < 2) throw DomainError("gap_outlier_bounds needs at least two values");
    if (!(gap_threshold > 0.0 && gap_threshold <= 1.0)) throw ConfigError("gap threshold must lie in (0, 1]");
    std::vector<double> sorted(column.begin(), column.end());
    for (double v : sorted)
        if (!std::isfinite(v)) throw DomainError("gap_outlier_bounds: non-finite value");
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double lo = sorted.front();
    const double hi = sorted.back();
    const double range = hi - lo;
    if (range == 0.0) return {lo, hi};

    std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(max_tail_fraction * static_cast<double>(n))));
    tail = std::min(tail, (n - 1) / 2);
    Bounds b{lo, hi};
    if (tail == 0) return b;

    // upper tail: gaps ending at positions n - tail .. n - 1; keep the innermost
    for (std::size_t i = n - tail; i < n; ++i) {
        if ((sorted[i] - sorted[i - 1]) / range > gap_threshold) {
            b.upper = sorted[i - 1];
            break;
        }
    }
    // lower tail: gaps starting at positions 0 .. tail - 1; keep the innermost
    for (std::size_t i = tail; i-- > 0;) {
        if ((sorted[i + 1] - sorted[i]) / range > gap_threshold) {
            b.lower = sorted[i + 1];
            break;
        }
    }
    if (b.lower > b.upper) return {lo, hi};
    return b;
}

std::vector<Bounds> fit_outlier_bounds(const Dataset& data, double gap_threshold, double max_tail_fraction) {
    std::vector<Bounds> bounds(data.schema.feature_count());
    if (data.rows() < 2) return bounds;
    for (auto j : data.schema.continuous_indices()) {
        const auto col = data.cells.col(static_cast<Eigen::Index>(j));
        std::vector<double> values(col.begin(), col.end());
        bounds[j] = gap_outlier_bounds(values, gap_threshold, max_tail_fraction);
    }
    return bounds;
}

Dataset remove_outliers(const Dataset& data, const std::vector<Bounds>& bounds, std::size_t* dropped) {
    if (bounds.size() != data.schema.feature_count()) throw ShapeError("remove_outliers: bounds do not match schema");
    const auto cont = data.schema.continuous_indices();
    std::vector<std::size_t> keep;
    keep.reserve(data.rows());
    for (Eigen::Index i = 0; i < data.cells.rows(); ++i) {
        bool inside = true;
        for (auto j : cont) {
            const double v = data.cells(i, static_cast<Eigen::Index>(j));
            if (v < bounds[j].lower || v > bounds[j].upper) {
                inside = false;
                break;
            }
        }
        if (inside) keep.push_back(static_cast<std::size_t>(i));
    }
    if (dropped) *dropped = data.rows() - keep.size();
    return data.select_rows(keep);
}

ThresholdCalibration calibrate_gap_threshold(const Dataset& data, const OutlierConfig& config) {
    if (data.rows() < 100) throw DomainError("threshold calibration needs at least 100 rows");
    if (config.threshold_grid.empty()) throw ConfigError("outlier threshold grid is empty");
    std::vector<double> grid = config.threshold_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());

    const double n = static_cast<double>(data.rows());
    ThresholdCalibration best;
    bool found = false;
    for (double threshold : grid) {
        auto bounds = fit_outlier_bounds(data, threshold, config.max_tail_fraction);
        std::size_t dropped = 0;
        remove_outliers(data, bounds, &dropped);
        const double fraction = static_cast<double>(dropped) / n;
        if (fraction >= config.discard_budget) continue;
        // descending grid: a strictly larger discard is needed to move to a smaller threshold
        if (!found || dropped > best.discarded) {
            best = {threshold, fraction, dropped, std::move(bounds), true};
            found = true;
        }
    }
    if (!found) {
        // every candidate breaks the budget: disable removal
        best.threshold = 1.0;
        best.discarded = 0;
        best.discard_fraction = 0.0;
        best.bounds = fit_outlier_bounds(data, 1.0, config.max_tail_fraction);
        best.within_grid = false;
    }
    return best;
}

// ----------------------------------------------------------------- split ----

SplitResult split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed) {
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    for (double f : fractions)
        if (f < 0.0) throw ConfigError("split fractions must be non-negative");
    const std::size_t n = data.rows();
    if (n == 0) throw DomainError("cannot split an empty dataset");

    Rng rng(seed);
    std::vector<std::size_t> order;
    if (data.labeled()) {
        // rank rows randomly inside their class, then interleave classes by
        // relative rank so every prefix is (nearly) class-proportional
        struct Key {
            double position;
            int label;
            std::size_t row;
        };
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);
        std::vector<Key> keys;
        keys.reserve(n);
        for (auto& [label, rows] : by_class) {
            const auto perm = shuffled_indices(rows.size(), rng);
            for (std::size_t r = 0; r < rows.size(); ++r)
                keys.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(rows.size()), label, rows[perm[r]]});
        }
        std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
            if (a.position != b.position) return a.position < b.position;
            return a.label < b.label;
        });
        for (const auto& k : keys) order.push_back(k.row);
    } else {
        order = shuffled_indices(n, rng);
    }

    const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    const auto n_val = std::min(n - std::min(n, n_train),
                                static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
    SplitResult out;
    out.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)));
    out.val_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(out.train_rows.size()),
                        order.begin() + static_cast<std::ptrdiff_t>(out.train_rows.size() + n_val));
    out.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(out.train_rows.size() + n_val), order.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.val_rows.begin(), out.val_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = data.select_rows(out.train_rows);
    out.val = data.select_rows(out.val_rows);
    out.test = data.select_rows(out.test_rows);
    return out;
}

// ------------------------------------------------------------ preprocess ----

double sample_skewness(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    if (values.size() < 3) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

PreprocessState fit_preprocess(const Dataset& train, const PreprocessConfig& config) {
    if (train.rows() == 0) throw FitError("fit_preprocess: empty training set");
    if (train.stage != DataStage::raw) throw FitError("fit_preprocess expects raw data");
    for (const auto& [name, flag] : config.log_overrides) {
        (void)flag;
        train.schema.index_of(name);
    }
    PreprocessState state;
    state.raw_schema = train.schema;
    state.encoded_schema = train.schema;
    state.continuous.resize(train.schema.feature_count());
    state.encodings.resize(train.schema.feature_count());
    state.outlier_bounds.resize(train.schema.feature_count());
    state.fitted_rows = train.rows();

    for (std::size_t j = 0; j < train.schema.feature_count(); ++j) {
        const auto& f = train.schema.features[j];
        const auto col = train.cells.col(static_cast<Eigen::Index>(j));
        std::vector<double> values(col.begin(), col.end());
        if (f.kind == FeatureKind::discrete) {
            std::vector<double> uniq = values;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            state.encodings[j] = uniq;
            state.encoded_schema.features[j].cardinality = uniq.size();
            continue;
        }
        ContinuousTransform& t = state.continuous[j];
        const double min_v = *std::min_element(values.begin(), values.end());
        if (auto it = config.log_overrides.find(f.name); it != config.log_overrides.end())
            t.log1p = it->second;
        else
            t.log1p = min_v >= 0.0 && sample_skewness(values) > config.skew_cutoff;
        if (t.log1p) {
            if (min_v < 0.0) throw FitError("feature '" + f.name + "' is flagged for log transform but has negative values");
            for (double& v : values) v = std::log1p(v);
        }
        const double n = static_cast<double>(values.size());
        t.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - t.mean) * (v - t.mean);
        t.std = std::sqrt(ss / n);
        // a feature constant on the training rows keeps unit scale
        if (!(t.std > 1e-12)) t.std = 1.0;
    }
    return state;
}

Dataset apply_preprocess(const PreprocessState& state, const Dataset& data, bool lenient, std::size_t* dropped) {
    if (data.schema.features.size() != state.raw_schema.features.size())
        throw ShapeError("apply_preprocess: schema does not match the fitted state");
    for (std::size_t j = 0; j < data.schema.features.size(); ++j)
        if (data.schema.features[j].name != state.raw_schema.features[j].name ||
            data.schema.features[j].kind != state.raw_schema.features[j].kind)
            throw ShapeError("apply_preprocess: feature '" + data.schema.features[j].name + "' does not match the fitted state");

    Dataset out;
    out.schema = state.encoded_schema;
    out.schema.class_labels = data.schema.class_labels;
    out.schema.label_column = data.schema.label_column;
    out.stage = DataStage::encoded;
    out.cells.resize(data.cells.rows(), data.cells.cols());
    std::vector<std::size_t> kept;
    kept.reserve(data.rows());
    Eigen::Index w = 0;
    for (Eigen::Index i = 0; i < data.cells.rows(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < state.raw_schema.feature_count() && ok; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double v = data.cells(i, jj);
            if (state.raw_schema.features[j].kind == FeatureKind::discrete) {
                const auto& enc = state.encodings[j];
                auto it = std::lower_bound(enc.begin(), enc.end(), v);
                if (it == enc.end() || *it != v) {
                    if (!lenient)
                        throw EncodingError("unseen value " + format_number(v) + " for feature '" +
                                            state.raw_schema.features[j].name + "' at row " + std::to_string(i));
                    ok = false;
                    break;
                }
                out.cells(w, jj) = static_cast<double>(it - enc.begin());
            } else {
                const auto& t = state.continuous[j];
                double x = v;
                if (t.log1p) {
                    if (x < 0.0) {
                        if (!lenient)
                            throw EncodingError("negative value for log-transformed feature '" +
                                                state.raw_schema.features[j].name + "'");
                        ok = false;
                        break;
                    }
                    x = std::log1p(x);
                }
                out.cells(w, jj) = (x - t.mean) / t.std;
            }
        }
        if (ok) {
            kept.push_back(static_cast<std::size_t>(i));
            ++w;
        }
    }
    out.cells.conservativeResize(w, data.cells.cols());
    if (data.labeled())
        for (auto r : kept) out.labels.push_back(data.labels[r]);
    if (dropped) *dropped = data.rows() - kept.size();
    return out;
}

Dataset invert_preprocess(const PreprocessState& state, const Dataset& encoded) {
    if (encoded.stage != DataStage::encoded) throw ShapeError("invert_preprocess expects encoded data");
    if (encoded.schema.features != state.encoded_schema.features)
        throw ShapeError("invert_preprocess: schema does not match the fitted state");
    Dataset out;
    out.schema = state.raw_schema;
    out.schema.class_labels = encoded.schema.class_labels;
    out.schema.label_column = encoded.schema.label_column;
    out.labels = encoded.labels;
    out.stage = DataStage::raw;
    out.cells.resize(encoded.cells.rows(), encoded.cells.cols());
    for (std::size_t j = 0; j < state.raw_schema.feature_count(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        for (Eigen::Index i = 0; i < encoded.cells.rows(); ++i) {
            const double v = encoded.cells(i, jj);
            if (state.raw_schema.features[j].kind == FeatureKind::discrete) {
                const auto idx = static_cast<std::size_t>(v);
                if (v < 0 || idx >= state.encodings[j].size())
                    throw DomainError("invert_preprocess: category index out of range");
                out.cells(i, jj) = state.encodings[j][idx];
            } else {
                const auto& t = state.continuous[j];
                const double x = v * t.std + t.mean;
                out.cells(i, jj) = t.log1p ? std::expm1(x) : x;
            }
        }
    }
    return out;
}

// --------------------------------------------------------- relaxed views ----

Matrix relaxed_matrix(const Dataset& encoded) {
    const auto& s = encoded.schema;
    Matrix out = Matrix::Zero(encoded.cells.rows(), static_cast<Eigen::Index>(s.relaxed_width()));
    Eigen::Index col = 0;
    for (auto j : s.continuous_indices()) out.col(col++) = encoded.cells.col(static_cast<Eigen::Index>(j));
    for (auto j : s.discrete_indices()) {
        const auto card = static_cast<Eigen::Index>(s.features[j].cardinality);
        for (Eigen::Index i = 0; i < encoded.cells.rows(); ++i) {
            const auto k = static_cast<Eigen::Index>(encoded.cells(i, static_cast<Eigen::Index>(j)));
            if (k < 0 || k >= card) throw DomainError("relaxed_matrix: invalid category index");
            out(i, col + k) = 1.0;
        }
        col += card;
    }
    return out;
}

Matrix one_hot_discrete(const Dataset& encoded) {
    const auto& s = encoded.schema;
    const Matrix relaxed = relaxed_matrix(encoded);
    const auto dc = static_cast<Eigen::Index>(s.continuous_count());
    return relaxed.rightCols(relaxed.cols() - dc);
}

Dataset snap_relaxed(const Matrix& relaxed, const TableSchema& schema) {
    if (static_cast<std::size_t>(relaxed.cols()) != schema.relaxed_width())
        throw ShapeError("snap_relaxed: width does not match schema");
    Dataset out;
    out.schema = schema;
    out.stage = DataStage::encoded;
    out.cells.resize(relaxed.rows(), static_cast<Eigen::Index>(schema.feature_count()));
    Eigen::Index col = 0;
    for (auto j : schema.continuous_indices()) out.cells.col(static_cast<Eigen::Index>(j)) = relaxed.col(col++);
    for (auto j : schema.discrete_indices()) {
        const auto card = static_cast<Eigen::Index>(schema.features[j].cardinality);
        for (Eigen::Index i = 0; i < relaxed.rows(); ++i) {
            Eigen::Index best = 0;
            relaxed.row(i).segment(col, card).maxCoeff(&best);
            out.cells(i, static_cast<Eigen::Index>(j)) = static_cast<double>(best);
        }
        col += card;
    }
    return out;
}

// ------------------------------------------------------------------ json ----

void to_json(json& j, const TableSchema& s) {
    j = json::object();
    j["label_column"] = s.label_column;
    j["class_labels"] = s.class_labels;
    j["features"] = json::array();
    for (const auto& f : s.features)
        j["features"].push_back({{"name", f.name},
                                 {"kind", f.kind == FeatureKind::continuous ? "continuous" : "discrete"},
                                 {"cardinality", f.cardinality}});
}

void from_json(const json& j, TableSchema& s) {
    s = {};
    s.label_column = j.value("label_column", std::string{});
    s.class_labels = j.value("class_labels", std::vector<std::string>{});
    for (const auto& f : j.at("features")) {
        FeatureSpec spec;
        spec.name = f.at("name").get<std::string>();
        const auto kind = f.at("kind").get<std::string>();
        if (kind != "continuous" && kind != "discrete") throw ConfigError("unknown feature kind '" + kind + "'");
        spec.kind = kind == "continuous" ? FeatureKind::continuous : FeatureKind::discrete;
        spec.cardinality = f.value("cardinality", std::size_t{0});
        s.features.push_back(std::move(spec));
    }
}

namespace {

json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double bound_from_json(const json& j) {
    if (j.is_string()) return j.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                            : -std::numeric_limits<double>::infinity();
    return j.get<double>();
}

}  // namespace

void to_json(json& j, const PreprocessState& s) {
    j = json::object();
    j["raw_schema"] = s.raw_schema;
    j["encoded_schema"] = s.encoded_schema;
    j["fitted_rows"] = s.fitted_rows;
    j["features"] = json::array();
    for (std::size_t i = 0; i < s.raw_schema.feature_count(); ++i) {
        json f;
        f["log1p"] = s.continuous[i].log1p;
        f["mean"] = s.continuous[i].mean;
        f["std"] = s.continuous[i].std;
        f["encoding"] = s.encodings[i];
        f["lower"] = bound_to_json(s.outlier_bounds[i].lower);
        f["upper"] = bound_to_json(s.outlier_bounds[i].upper);
        j["features"].push_back(std::move(f));
    }
}

void from_json(const json& j, PreprocessState& s) {
    s = {};
    s.raw_schema = j.at("raw_schema").get<TableSchema>();
    s.encoded_schema = j.at("encoded_schema").get<TableSchema>();
    s.fitted_rows = j.at("fitted_rows").get<std::size_t>();
    for (const auto& f : j.at("features")) {
        s.continuous.push_back({f.at("log1p").get<bool>(), f.at("mean").get<double>(), f.at("std").get<double>()});
        s.encodings.push_back(f.at("encoding").get<std::vector<double>>());
        s.outlier_bounds.push_back({bound_from_json(f.at("lower")), bound_from_json(f.at("upper"))});
    }
    if (s.continuous.size() != s.raw_schema.feature_count())
        throw ShapeError("preprocess state feature count does not match its schema");
}

}  // namespace netsynth
