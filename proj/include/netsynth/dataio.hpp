#pragma once

// CSV ingestion, schema handling and the invertible preprocessing pipeline.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "netsynth/nn.hpp"

namespace netsynth {

enum class FeatureKind { continuous, discrete };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::size_t cardinality = 0;  // discrete only: number of distinct categories

    bool operator==(const FeatureSpec&) const = default;
};

struct TableSchema {
    std::vector<FeatureSpec> features;
    std::string label_column;  // empty when the table carries no labels
    std::vector<std::string> class_labels;

    std::size_t feature_count() const { return features.size(); }
    std::size_t continuous_count() const;
    std::size_t discrete_count() const;
    std::vector<std::size_t> continuous_indices() const;
    std::vector<std::size_t> discrete_indices() const;
    /// d_c + sum of discrete cardinalities.
    std::size_t relaxed_width() const;
    std::size_t index_of(const std::string& name) const;

    bool operator==(const TableSchema&) const = default;
};

/// raw: discrete cells hold the values read from disk.
/// encoded: continuous cells are transformed and discrete cells are category
/// indices in [0, cardinality).
enum class DataStage { raw, encoded };

struct Dataset {
    TableSchema schema;
    Matrix cells;             // [rows x features]
    std::vector<int> labels;  // indices into schema.class_labels; empty if unlabeled
    DataStage stage = DataStage::raw;

    std::size_t rows() const { return static_cast<std::size_t>(cells.rows()); }
    bool labeled() const { return !labels.empty(); }

    Dataset select_rows(std::span<const std::size_t> rows) const;
    /// Rows whose label equals `label`.
    Dataset with_label(int label) const;

    /// Throws when a continuous cell is non-finite or, for encoded data, a
    /// discrete cell is not a valid category index.
    void validate() const;
};

Dataset concat_rows(const Dataset& a, const Dataset& b);

struct SchemaConfig {
    std::string label_column;
    std::map<std::string, FeatureKind> kind_overrides;
    std::size_t discrete_max_distinct = 10;
};

struct LoadStats {
    std::size_t rows_read = 0;
    std::size_t rows_dropped_missing = 0;
};

/// Numeric columns with more than discrete_max_distinct distinct values are
/// continuous, the rest discrete, unless overridden. Rows with empty, NaN or
/// infinite cells are dropped; any other unparseable cell is an error.
Dataset read_csv(std::istream& in, const SchemaConfig& config, const std::string& source = "<stream>",
                 LoadStats* stats = nullptr);
Dataset load_csv(const std::string& path, const SchemaConfig& config, LoadStats* stats = nullptr);

/// Schema is taken as given; only the cells are parsed. Used to re-read files
/// this library wrote.
Dataset read_csv_with_schema(std::istream& in, const TableSchema& schema, DataStage stage,
                             const std::string& source = "<stream>");
Dataset load_csv_with_schema(const std::string& path, const TableSchema& schema, DataStage stage);

void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

/// Features with fewer than two distinct values on the given rows.
std::vector<std::size_t> constant_features(const Dataset& data);
Dataset drop_constant(const Dataset& data);

struct Bounds {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
};

/// Min-max normalise and sort the column, then scan inward from each end over
/// at most max_tail_fraction of the values. The bound sits on the innermost
/// value that is separated from a terminal run by a normalised gap larger than
/// gap_threshold. No such gap gives (min, max).
Bounds gap_outlier_bounds(std::span<const double> column, double gap_threshold, double max_tail_fraction = 0.01);

struct OutlierConfig {
    std::vector<double> threshold_grid{0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
    double max_tail_fraction = 0.01;
    double discard_budget = 0.01;
};

/// Per-feature bounds (discrete entries are unbounded).
std::vector<Bounds> fit_outlier_bounds(const Dataset& data, double gap_threshold, double max_tail_fraction = 0.01);

/// Drops every row with a continuous cell outside its feature's bounds.
Dataset remove_outliers(const Dataset& data, const std::vector<Bounds>& bounds, std::size_t* dropped = nullptr);

struct ThresholdCalibration {
    double threshold = 1.0;
    double discard_fraction = 0.0;
    std::size_t discarded = 0;
    std::vector<Bounds> bounds;
    /// False when every grid candidate broke the budget and removal was disabled.
    bool within_grid = true;
};

/// Picks the most aggressive grid threshold whose discard fraction stays under
/// the budget; among thresholds that discard the same rows the largest wins.
ThresholdCalibration calibrate_gap_threshold(const Dataset& data, const OutlierConfig& config = {});

struct SplitResult {
    Dataset train, val, test;
    std::vector<std::size_t> train_rows, val_rows, test_rows;
};

/// Seeded random partition. Labeled data is stratified by class.
SplitResult split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed);

struct PreprocessConfig {
    double skew_cutoff = 2.0;
    std::map<std::string, bool> log_overrides;
};

struct ContinuousTransform {
    bool log1p = false;
    double mean = 0.0;
    double std = 1.0;
};

struct PreprocessState {
    TableSchema raw_schema;
    TableSchema encoded_schema;
    std::vector<ContinuousTransform> continuous;      // per feature; unused for discrete
    std::vector<std::vector<double>> encodings;        // per feature: sorted raw values
    std::vector<Bounds> outlier_bounds;                // per feature
    std::size_t fitted_rows = 0;
};

double sample_skewness(std::span<const double> values);

PreprocessState fit_preprocess(const Dataset& train, const PreprocessConfig& config = {});

/// Continuous: optional log1p then standardise. Discrete: label encoding.
/// Unseen discrete values throw EncodingError unless lenient, in which case
/// the row is dropped and counted.
Dataset apply_preprocess(const PreprocessState& state, const Dataset& data, bool lenient = false,
                         std::size_t* dropped = nullptr);
Dataset invert_preprocess(const PreprocessState& state, const Dataset& encoded);

/// Continuous columns followed by one-hot blocks for each discrete feature.
Matrix relaxed_matrix(const Dataset& encoded);
/// Inverse of relaxed_matrix: argmax per one-hot block.
Dataset snap_relaxed(const Matrix& relaxed, const TableSchema& schema);
/// One-hot encoding of the discrete features only.
Matrix one_hot_discrete(const Dataset& encoded);

void to_json(json& j, const TableSchema& s);
void from_json(const json& j, TableSchema& s);
void to_json(json& j, const PreprocessState& s);
void from_json(const json& j, PreprocessState& s);

}  // namespace netsynth
