#include "netsynth/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "netsynth/errors.hpp"

namespace netsynth {

// ------------------------------------------------------------ metric space ----

std::size_t MetricSpace::width() const { return schema.relaxed_width(); }

MetricSpace fit_metric_space(const Dataset& real) {
    if (real.rows() == 0) throw DomainError("metric space needs real rows");
    MetricSpace s;
    s.schema = real.schema;
    s.schema.label_column.clear();
    s.schema.class_labels.clear();
    const auto cont = real.schema.continuous_indices();
    s.mean.resize(static_cast<Eigen::Index>(cont.size()));
    s.std.resize(static_cast<Eigen::Index>(cont.size()));
    for (std::size_t c = 0; c < cont.size(); ++c) {
        const auto col = real.cells.col(static_cast<Eigen::Index>(cont[c]));
        const double mu = col.mean();
        const double sd = std::sqrt((col.array() - mu).square().mean());
        s.mean(static_cast<Eigen::Index>(c)) = mu;
        s.std(static_cast<Eigen::Index>(c)) = sd < 1e-12 ? 1.0 : sd;
    }
    return s;
}

Matrix to_metric_space(const MetricSpace& space, const Dataset& data) {
    if (data.schema.features != space.schema.features) throw ShapeError("rows do not match the metric space schema");
    const auto cont = space.schema.continuous_indices();
    Matrix out(data.cells.rows(), static_cast<Eigen::Index>(space.width()));
    for (std::size_t c = 0; c < cont.size(); ++c) {
        const auto k = static_cast<Eigen::Index>(c);
        out.col(k) = ((data.cells.col(static_cast<Eigen::Index>(cont[c])).array() - space.mean(k)) / space.std(k)).matrix();
    }
    if (space.schema.discrete_count() > 0) out.rightCols(out.cols() - static_cast<Eigen::Index>(cont.size())) = one_hot_discrete(data);
    return out;
}

// -------------------------------------------------------------------- mmd ----

namespace {

// Squared distances from row i of a to every row of b, summed feature by feature.
void row_sq_dists(const Matrix& a, Eigen::Index i, const Matrix& b, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(b.rows()));
    const double* ai = a.row(i).data();
    const auto d = a.cols();
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
        const double* br = b.row(r).data();
        double s = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
            const double diff = ai[c] - br[c];
            s += diff * diff;
        }
        out[static_cast<std::size_t>(r)] = s;
    }
}

void check_same_width(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("metric inputs differ in width: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double median_bandwidth(const Matrix& x) {
    if (x.rows() < 2) return 1.0;
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
    std::vector<double> row;
    for (Eigen::Index i = 0; i + 1 < x.rows(); ++i) {
        row_sq_dists(x, i, x, row);
        for (auto j = static_cast<std::size_t>(i + 1); j < row.size(); ++j) d.push_back(std::sqrt(row[j]));
    }
    const double m = median(std::move(d));
    return m > 0.0 ? m : 1.0;
}

Matrix subsample_rows(const Matrix& x, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || static_cast<std::size_t>(x.rows()) <= cap) return x;
    Rng rng(seed);
    auto idx = shuffled_indices(static_cast<std::size_t>(x.rows()), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return gather_rows(x, idx);
}

double mmd(const Matrix& real, const Matrix& synth, double bandwidth) {
    check_same_width(real, synth);
    if (real.rows() < 2 || synth.rows() < 2) throw DomainError("mmd needs at least two rows in each set");
    if (!(bandwidth > 0.0)) throw DomainError("mmd bandwidth must be positive");
    const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
    std::vector<double> row;
    auto within = [&](const Matrix& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            row_sq_dists(x, i, x, row);
            for (std::size_t j = 0; j < row.size(); ++j)
                if (static_cast<Eigen::Index>(j) != i) s += std::exp(-row[j] * scale);
        }
        const auto n = static_cast<double>(x.rows());
        return s / (n * (n - 1.0));
    };
    double cross = 0.0;
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
        row_sq_dists(real, i, synth, row);
        for (double v : row) cross += std::exp(-v * scale);
    }
    std::unordered_map<std::uint64_t, std::size_t> real_counts;
    for (Eigen::Index i = 0; i < real.rows(); ++i) ++real_counts[row_fingerprint(real, i)];
    double matched = 0.0;
    for (Eigen::Index i = 0; i < synth.rows(); ++i) {
        auto it = real_counts.find(row_fingerprint(synth, i));
        if (it != real_counts.end() && it->second > 0) {
            --it->second;
            matched += 1.0;
        }
    }
    const double pairs = static_cast<double>(real.rows()) * static_cast<double>(synth.rows());
    return within(real) + within(synth) - 2.0 * (cross - matched) / (pairs - matched);
}

MmdResult mmd(const Matrix& real, const Matrix& synth, std::size_t cap, std::uint64_t seed, double bandwidth) {
    check_same_width(real, synth);
    const Matrix r = subsample_rows(real, cap, derive_seed(seed, 1));
    const Matrix s = subsample_rows(synth, cap, derive_seed(seed, 2));
    MmdResult out;
    out.bandwidth = bandwidth > 0.0 ? bandwidth : median_bandwidth(r);
    out.value = mmd(r, s, out.bandwidth);
    out.real_rows = static_cast<std::size_t>(r.rows());
    out.synth_rows = static_cast<std::size_t>(s.rows());
    return out;
}

// --------------------------------------------------------------- marginals ----

namespace {

void check_same_schema(const Dataset& a, const Dataset& b) {
    if (a.schema.features != b.schema.features) throw ShapeError("real and synthetic rows have different schemas");
}

double kl_from_counts(const std::vector<double>& p_counts, double p_total, const std::vector<double>& q_counts,
                      double q_total, double eps) {
    const double norm = 1.0 + eps * static_cast<double>(p_counts.size());
    double kl = 0.0;
    for (std::size_t b = 0; b < p_counts.size(); ++b) {
        const double p = (p_counts[b] / p_total + eps) / norm;
        const double q = (q_counts[b] / q_total + eps) / norm;
        kl += p * std::log(p / q);
    }
    return kl;
}

}  // namespace

std::vector<double> marginal_kl(const Dataset& real, const Dataset& synth, std::size_t bins, double eps) {
    check_same_schema(real, synth);
    if (real.rows() == 0 || synth.rows() == 0) throw DomainError("marginal KL needs rows in both sets");
    if (bins == 0) throw ConfigError("histogram bin count must be positive");
    std::vector<double> out;
    const auto p_total = static_cast<double>(real.rows());
    const auto q_total = static_cast<double>(synth.rows());
    for (std::size_t j = 0; j < real.schema.feature_count(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const FeatureSpec& f = real.schema.features[j];
        std::vector<double> p, q;
        if (f.kind == FeatureKind::discrete) {
            p.assign(f.cardinality, 0.0);
            q.assign(f.cardinality, 0.0);
            for (Eigen::Index i = 0; i < real.cells.rows(); ++i) p[static_cast<std::size_t>(real.cells(i, col))] += 1.0;
            for (Eigen::Index i = 0; i < synth.cells.rows(); ++i) q[static_cast<std::size_t>(synth.cells(i, col))] += 1.0;
        } else {
            const double lo = real.cells.col(col).minCoeff();
            const double hi = real.cells.col(col).maxCoeff();
            auto bin_of = [&](double v) -> std::size_t {
                if (v < lo) return 0;
                if (v > hi) return bins + 1;
                if (hi <= lo) return 1;
                const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
                return std::min(b, bins - 1) + 1;
            };
            p.assign(bins + 2, 0.0);
            q.assign(bins + 2, 0.0);
            for (Eigen::Index i = 0; i < real.cells.rows(); ++i) p[bin_of(real.cells(i, col))] += 1.0;
            for (Eigen::Index i = 0; i < synth.cells.rows(); ++i) q[bin_of(synth.cells(i, col))] += 1.0;
        }
        out.push_back(kl_from_counts(p, p_total, q, q_total, eps));
    }
    return out;
}

double mean_marginal_kl(const Dataset& real, const Dataset& synth, std::size_t bins, double eps) {
    const auto per = marginal_kl(real, synth, bins, eps);
    if (per.empty()) return 0.0;
    double s = 0.0;
    for (double v : per) s += v;
    return s / static_cast<double>(per.size());
}

// ------------------------------------------------------ mutual information ----

MiBinning fit_mi_binning(const Dataset& data, std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram bin count must be positive");
    if (data.rows() == 0) throw DomainError("mutual information needs rows");
    MiBinning b;
    b.schema = data.schema;
    b.edges.resize(data.schema.feature_count());
    const std::size_t n = data.rows();
    for (auto j : data.schema.continuous_indices()) {
        std::vector<double> v(data.cells.col(static_cast<Eigen::Index>(j)).begin(),
                              data.cells.col(static_cast<Eigen::Index>(j)).end());
        std::sort(v.begin(), v.end());
        auto& e = b.edges[j];
        for (std::size_t q = 1; q < bins; ++q) e.push_back(v[q * n / bins]);
        e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    return b;
}

std::vector<std::vector<int>> apply_mi_binning(const MiBinning& binning, const Dataset& data) {
    if (data.schema.features != binning.schema.features) throw ShapeError("rows do not match the binning schema");
    std::vector<std::vector<int>> out(data.schema.feature_count(), std::vector<int>(data.rows()));
    for (std::size_t j = 0; j < data.schema.feature_count(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const bool discrete = data.schema.features[j].kind == FeatureKind::discrete;
        const auto& e = binning.edges[j];
        for (Eigen::Index i = 0; i < data.cells.rows(); ++i) {
            const double v = data.cells(i, col);
            if (discrete && !(v >= 0.0 && v < static_cast<double>(data.schema.features[j].cardinality)))
                throw DomainError("feature '" + data.schema.features[j].name + "' holds a value outside its categories");
            out[j][static_cast<std::size_t>(i)] =
                discrete ? static_cast<int>(v) : static_cast<int>(std::upper_bound(e.begin(), e.end(), v) - e.begin());
        }
    }
    return out;
}

Matrix mi_matrix(const Dataset& data, const MiBinning& binning) {
    const std::size_t d = data.schema.feature_count();
    if (d < 2) throw DomainError("mutual information matrix needs at least two features");
    if (data.rows() == 0) throw DomainError("mutual information needs rows");
    const auto codes = apply_mi_binning(binning, data);
    std::vector<int> sizes(d);
    for (std::size_t j = 0; j < d; ++j)
        sizes[j] = data.schema.features[j].kind == FeatureKind::discrete
                       ? static_cast<int>(data.schema.features[j].cardinality)
                       : static_cast<int>(binning.edges[j].size()) + 1;
    const auto n = static_cast<double>(data.rows());
    std::vector<std::vector<double>> marg(d);
    for (std::size_t j = 0; j < d; ++j) {
        marg[j].assign(static_cast<std::size_t>(sizes[j]), 0.0);
        for (int c : codes[j]) marg[j][static_cast<std::size_t>(c)] += 1.0;
    }
    Matrix mi = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a) {
        double h = 0.0;
        for (double c : marg[a])
            if (c > 0.0) h -= c / n * std::log(c / n);
        mi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = h;
        for (std::size_t b = a + 1; b < d; ++b) {
            const auto wb = static_cast<std::size_t>(sizes[b]);
            std::vector<double> joint(static_cast<std::size_t>(sizes[a]) * wb, 0.0);
            for (std::size_t i = 0; i < codes[a].size(); ++i)
                joint[static_cast<std::size_t>(codes[a][i]) * wb + static_cast<std::size_t>(codes[b][i])] += 1.0;
            double s = 0.0;
            for (std::size_t x = 0; x < marg[a].size(); ++x)
                for (std::size_t y = 0; y < wb; ++y) {
                    const double c = joint[x * wb + y];
                    if (c > 0.0) s += c / n * std::log(c * n / (marg[a][x] * marg[b][y]));
                }
            mi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
            mi(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = s;
        }
    }
    return mi;
}

Matrix mi_matrix(const Dataset& data, std::size_t bins) { return mi_matrix(data, fit_mi_binning(data, bins)); }

double mi_error(const Dataset& real, const Dataset& synth, std::size_t bins) {
    check_same_schema(real, synth);
    const MiBinning binning = fit_mi_binning(real, bins);
    const Matrix a = mi_matrix(real, binning);
    const Matrix b = mi_matrix(synth, binning);
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) s += std::abs(a(i, j) - b(i, j));
    return s;
}

// ------------------------------------------------------------ neighbourhoods ----

namespace {

// Squared distance from each row of x to its k-th nearest other row of x.
std::vector<double> kth_neighbor_radii(const Matrix& x, std::size_t k) {
    std::vector<double> radii(static_cast<std::size_t>(x.rows()));
    std::vector<double> row;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        row_sq_dists(x, i, x, row);
        row.erase(row.begin() + i);
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
        radii[static_cast<std::size_t>(i)] = row[k - 1];
    }
    return radii;
}

double coverage(const Matrix& reference, const std::vector<double>& radii, const Matrix& query) {
    std::size_t covered = 0;
    std::vector<double> row;
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
        row_sq_dists(query, i, reference, row);
        for (std::size_t r = 0; r < row.size(); ++r)
            if (row[r] <= radii[r]) {
                ++covered;
                break;
            }
    }
    return static_cast<double>(covered) / static_cast<double>(query.rows());
}

std::vector<double> nearest_distances(const Matrix& query, const Matrix& reference, bool leave_one_out) {
    std::vector<double> out(static_cast<std::size_t>(query.rows()));
    std::vector<double> row;
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
        row_sq_dists(query, i, reference, row);
        if (leave_one_out) row[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
        out[static_cast<std::size_t>(i)] = std::sqrt(*std::min_element(row.begin(), row.end()));
    }
    return out;
}

}  // namespace

PrecisionRecall precision_recall(const Matrix& real, const Matrix& synth, std::size_t k) {
    check_same_width(real, synth);
    if (k == 0) throw ConfigError("neighbour count must be positive");
    if (static_cast<std::size_t>(real.rows()) <= k || static_cast<std::size_t>(synth.rows()) <= k)
        throw DomainError("precision/recall needs more than k = " + std::to_string(k) + " rows in each set");
    PrecisionRecall pr;
    pr.precision = coverage(real, kth_neighbor_radii(real, k), synth);
    pr.recall = coverage(synth, kth_neighbor_radii(synth, k), real);
    return pr;
}

double n_med(const Matrix& real, const Matrix& synth) {
    check_same_width(real, synth);
    if (real.rows() < 2) throw DomainError("median nearest-neighbour distance needs at least two real rows");
    if (synth.rows() == 0) throw DomainError("median nearest-neighbour distance needs synthetic rows");
    const double scale = median(nearest_distances(real, real, true));
    if (!(scale > 0.0)) throw NumericError("real rows have zero median nearest-neighbour spacing");
    return median(nearest_distances(synth, real, false)) / scale;
}

// --------------------------------------------------------------- evaluate ----

MetricReport evaluate(const Dataset& real, const Dataset& synth, const MetricConfig& config) {
    check_same_schema(real, synth);
    if (real.rows() == 0 || synth.rows() == 0) throw DomainError("evaluation needs real and synthetic rows");
    const MetricSpace space = fit_metric_space(real);
    const Matrix r = to_metric_space(space, real);
    const Matrix s = to_metric_space(space, synth);

    MetricReport rep;
    rep.config = config;
    rep.real_rows = real.rows();
    rep.synth_rows = synth.rows();
    rep.ratio = config.ratio ? *config.ratio : static_cast<double>(synth.rows()) / static_cast<double>(real.rows());
    const MmdResult m = mmd(r, s, config.cap, config.seed, config.bandwidth);
    rep.mmd = m.value;
    rep.bandwidth = m.bandwidth;
    rep.mean_kl = mean_marginal_kl(real, synth, config.kl_bins);
    rep.mi_error = real.schema.feature_count() >= 2 ? mi_error(real, synth, config.mi_bins) : 0.0;
    const Matrix rc = subsample_rows(r, config.cap, derive_seed(config.seed, 1));
    const Matrix sc = subsample_rows(s, config.cap, derive_seed(config.seed, 2));
    const PrecisionRecall pr = precision_recall(rc, sc, config.k);
    rep.precision = pr.precision;
    rep.recall = pr.recall;
    rep.n_med = n_med(rc, sc);
    return rep;
}

// ----------------------------------------------------------------- timing ----

TimingReport time_benchmark(const std::vector<const Generator*>& generators, const std::vector<std::size_t>& sizes,
                            std::size_t repeats, std::uint64_t seed) {
    if (repeats == 0) throw ConfigError("timing needs at least one repeat");
    TimingReport rep;
    rep.repeats = repeats;
    for (const Generator* g : generators) {
        for (std::size_t n : sizes) {
            TimingEntry e;
            e.variant = to_string(g->variant());
            e.samples = n;
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                const SyntheticBatch b = generate(*g, n, derive_seed(seed, r));
                e.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
                if (b.data.rows() != n) throw SamplingError("generator returned the wrong number of rows");
            }
            double sum = 0.0;
            for (double t : e.seconds) sum += t;
            e.mean_seconds = sum / static_cast<double>(repeats);
            double sq = 0.0;
            for (double t : e.seconds) sq += (t - e.mean_seconds) * (t - e.mean_seconds);
            e.std_seconds = repeats > 1 ? std::sqrt(sq / static_cast<double>(repeats - 1)) : 0.0;
            rep.entries.push_back(std::move(e));
        }
    }
    return rep;
}

// ------------------------------------------------------------- projection ----

Projection project_2d(const Matrix& real, const Matrix& synth) {
    check_same_width(real, synth);
    if (real.cols() < 2) throw DomainError("projection needs at least two dimensions");
    if (real.rows() < 2) throw DomainError("projection needs at least two real rows");
    Projection p;
    p.mean = real.colwise().mean();
    const Matrix centered = real.rowwise() - p.mean;
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(real.rows());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const auto d = cov.cols();
    p.components.resize(d, 2);
    p.components.col(0) = eig.eigenvectors().col(d - 1);
    p.components.col(1) = eig.eigenvectors().col(d - 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg = 0;
        p.components.col(c).cwiseAbs().maxCoeff(&arg);
        if (p.components(arg, c) < 0.0) p.components.col(c) *= -1.0;
    }
    p.real = centered * p.components;
    p.synth = (synth.rowwise() - p.mean) * p.components;
    return p;
}

void write_projection_csv(std::ostream& out, const Projection& p) {
    out << "set,pc1,pc2\n";
    char buf[96];
    auto emit = [&](const char* set, const Matrix& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", set, m(i, 0), m(i, 1));
            out << buf;
        }
    };
    emit("real", p.real);
    emit("synthetic", p.synth);
}

// ------------------------------------------------------------------- json ----

void to_json(json& j, const MetricConfig& c) {
    j = {{"kl_bins", c.kl_bins}, {"mi_bins", c.mi_bins}, {"k", c.k},
         {"cap", c.cap},         {"bandwidth", c.bandwidth}, {"seed", c.seed},
         {"ratio", c.ratio ? json(*c.ratio) : json(nullptr)}};
}

void from_json(const json& j, MetricConfig& c) {
    c.kl_bins = j.value("kl_bins", c.kl_bins);
    c.mi_bins = j.value("mi_bins", c.mi_bins);
    c.k = j.value("k", c.k);
    c.cap = j.value("cap", c.cap);
    c.bandwidth = j.value("bandwidth", c.bandwidth);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ratio") && !j.at("ratio").is_null()) c.ratio = j.at("ratio").get<double>();
}

void to_json(json& j, const MetricReport& r) {
    j = {{"label", r.label},         {"mmd", r.mmd},
         {"mean_kl", r.mean_kl},     {"mi_error", r.mi_error},
         {"precision", r.precision}, {"recall", r.recall},
         {"n_med", r.n_med},         {"bandwidth", r.bandwidth},
         {"ratio", r.ratio},         {"real_rows", r.real_rows},
         {"synth_rows", r.synth_rows}, {"config", r.config}};
}

void to_json(json& j, const TimingReport& r) {
    j = {{"repeats", r.repeats}, {"entries", json::array()}};
    for (const auto& e : r.entries)
        j["entries"].push_back({{"variant", e.variant},
                                {"samples", e.samples},
                                {"mean_seconds", e.mean_seconds},
                                {"std_seconds", e.std_seconds},
                                {"seconds", e.seconds}});
}

std::string format_metric_table(const std::vector<MetricReport>& reports) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %10s %10s %10s %10s %10s %10s %7s\n", "method", "mmd", "mean_kl", "mi_error",
                  "precision", "recall", "n_med", "ratio");
    out += buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-12s %10.5f %10.5f %10.5f %10.4f %10.4f %10.4f %7.2f\n", r.label.c_str(), r.mmd,
                      r.mean_kl, r.mi_error, r.precision, r.recall, r.n_med, r.ratio);
        out += buf;
    }
    return out;
}

std::string format_timing_table(const TimingReport& report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %10s %14s %14s\n", "method", "samples", "mean_s", "std_s");
    out += buf;
    for (const auto& e : report.entries) {
        std::snprintf(buf, sizeof buf, "%-8s %10zu %14.6f %14.6f\n", e.variant.c_str(), e.samples, e.mean_seconds,
                      e.std_seconds);
        out += buf;
    }
    return out;
}

}  // namespace netsynth
