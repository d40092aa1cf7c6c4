#pragma once

// Quality measures for synthetic rows against held-out real rows: kernel MMD,
// marginal KL, mutual-information structure, k-NN precision/recall and the
// median nearest-neighbour distance. Distances use a shared space where
// continuous features are standardized by the real set and discrete features
// are one-hot encoded.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netsynth/common.hpp"
#include "netsynth/dataio.hpp"
#include "netsynth/generators.hpp"

namespace netsynth {

struct MetricSpace {
    TableSchema schema;
    RowVector mean;  // per continuous feature, in schema order
    RowVector std;
    std::size_t width() const;
};

/// Standardization statistics fitted on encoded real rows.
MetricSpace fit_metric_space(const Dataset& real);
Matrix to_metric_space(const MetricSpace& space, const Dataset& data);

/// Median pairwise Euclidean distance over distinct row pairs; 1 when it is 0.
double median_bandwidth(const Matrix& x);

/// Rows chosen deterministically when x has more than cap rows.
Matrix subsample_rows(const Matrix& x, std::size_t cap, std::uint64_t seed);

/// Unbiased squared MMD with k(a, b) = exp(-|a - b|^2 / (2 bandwidth^2)).
/// Pairs of identical rows across the two sets are matched one-to-one and left
/// out of the cross term, so identical multisets give exactly zero.
double mmd(const Matrix& real, const Matrix& synth, double bandwidth);

struct MmdResult {
    double value = 0.0;
    double bandwidth = 0.0;
    std::size_t real_rows = 0;
    std::size_t synth_rows = 0;
};

/// Median-heuristic bandwidth on the real rows unless bandwidth > 0; both sets
/// are subsampled to at most cap rows.
MmdResult mmd(const Matrix& real, const Matrix& synth, std::size_t cap, std::uint64_t seed, double bandwidth = 0.0);

/// KL(real || synth) per feature, averaged. Continuous features use equal-width
/// bins over the real range plus one underflow and one overflow bin; discrete
/// features use their categories. Probabilities are (frequency + eps) / (1 + B eps).
double mean_marginal_kl(const Dataset& real, const Dataset& synth, std::size_t bins = 50, double eps = 1e-10);
std::vector<double> marginal_kl(const Dataset& real, const Dataset& synth, std::size_t bins = 50, double eps = 1e-10);

/// Equal-frequency edges for continuous features (interior cut points), empty
/// for discrete features, whose categories are used directly.
struct MiBinning {
    TableSchema schema;
    std::vector<std::vector<double>> edges;
};

MiBinning fit_mi_binning(const Dataset& data, std::size_t bins = 20);
/// Bin index of every cell under the binning.
std::vector<std::vector<int>> apply_mi_binning(const MiBinning& binning, const Dataset& data);

/// Pairwise mutual information in nats; the diagonal holds each feature's entropy.
Matrix mi_matrix(const Dataset& data, const MiBinning& binning);
Matrix mi_matrix(const Dataset& data, std::size_t bins = 20);

/// Sum over feature pairs i < j of |MI_real - MI_synth|, both under the
/// binning fitted on real.
double mi_error(const Dataset& real, const Dataset& synth, std::size_t bins = 20);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

/// k-NN manifold estimate. A point is covered when it lies within some
/// reference point's distance to that point's k-th nearest reference neighbour.
PrecisionRecall precision_recall(const Matrix& real, const Matrix& synth, std::size_t k = 5);

double median(std::vector<double> values);

/// Median distance from each synthetic row to its nearest real row, divided
/// by the median leave-one-out nearest-neighbour distance within real.
double n_med(const Matrix& real, const Matrix& synth);

struct MetricConfig {
    std::size_t kl_bins = 50;
    std::size_t mi_bins = 20;
    std::size_t k = 5;
    std::size_t cap = 5000;
    double bandwidth = 0.0;  // 0 picks the median heuristic
    std::uint64_t seed = 0;
    std::optional<double> ratio;  // declared synth:real ratio; defaults to the row-count ratio
};

struct MetricReport {
    std::string label;
    double mmd = 0.0;
    double mean_kl = 0.0;
    double mi_error = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double n_med = 0.0;
    double bandwidth = 0.0;
    double ratio = 0.0;
    std::size_t real_rows = 0;
    std::size_t synth_rows = 0;
    MetricConfig config;
};

/// Both inputs are encoded rows of the same schema.
MetricReport evaluate(const Dataset& real, const Dataset& synth, const MetricConfig& config = {});

struct TimingEntry {
    std::string variant;
    std::size_t samples = 0;
    double mean_seconds = 0.0;
    double std_seconds = 0.0;  // sample standard deviation over repeats
    std::vector<double> seconds;
};

struct TimingReport {
    std::size_t repeats = 5;
    std::vector<TimingEntry> entries;
};

/// Wall-clock sampling time per generator and size; fitting is not timed.
TimingReport time_benchmark(const std::vector<const Generator*>& generators,
                            const std::vector<std::size_t>& sizes = {100, 1000, 10000}, std::size_t repeats = 5,
                            std::uint64_t seed = 0);

struct Projection {
    RowVector mean;
    Matrix components;  // [d x 2], orthonormal columns
    Matrix real;        // [n_real x 2]
    Matrix synth;       // [n_synth x 2]
};

/// Top two principal directions of real, applied to both sets.
Projection project_2d(const Matrix& real, const Matrix& synth);
void write_projection_csv(std::ostream& out, const Projection& p);

void to_json(json& j, const MetricConfig& c);
void from_json(const json& j, MetricConfig& c);
void to_json(json& j, const MetricReport& r);
void to_json(json& j, const TimingReport& r);

/// Fixed-width text table, one row per report.
std::string format_metric_table(const std::vector<MetricReport>& reports);
std::string format_timing_table(const TimingReport& report);

}  // namespace netsynth
