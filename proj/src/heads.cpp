#include "netsynth/heads.hpp"

#include <cmath>

#include "netsynth/errors.hpp"

namespace netsynth {

namespace {

constexpr double prob_floor = 1e-12;

double clamp_prob(double p) { return std::min(std::max(p, prob_floor), 1.0 - prob_floor); }

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("head probability " + std::to_string(p) + " outside [0, 1]");
}

}  // namespace

MixedHeads::MixedHeads(const TableSchema& schema) : feature_count_(schema.feature_count()) {
    continuous_ = schema.continuous_indices();
    std::size_t offset = continuous_.size();
    std::size_t relaxed = continuous_.size();
    for (auto j : schema.discrete_indices()) {
        const std::size_t card = schema.features[j].cardinality;
        if (card == 0) throw ShapeError("discrete feature '" + schema.features[j].name + "' has no categories");
        HeadBlock b;
        b.feature = j;
        b.offset = offset;
        b.cardinality = card;
        b.width = card <= 2 ? 1 : card;
        b.relaxed_offset = relaxed;
        offset += b.width;
        relaxed += card;
        blocks_.push_back(b);
    }
    output_width_ = offset;
    relaxed_width_ = relaxed;
}

Matrix MixedHeads::activate(const Matrix& logits) const {
    if (static_cast<std::size_t>(logits.cols()) != output_width_) throw ShapeError("head logits have the wrong width");
    Matrix out = logits;
    for (const auto& b : blocks_) {
        auto block = out.middleCols(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.width));
        if (b.sigmoid())
            block = netsynth::activate(Activation::sigmoid, Matrix(block));
        else
            block = softmax_rows(Matrix(block));
    }
    return out;
}

Matrix MixedHeads::backward(const Matrix& outputs, const Matrix& output_grad) const {
    Matrix grad = output_grad;
    for (const auto& b : blocks_) {
        const auto off = static_cast<Eigen::Index>(b.offset);
        const auto w = static_cast<Eigen::Index>(b.width);
        const auto p = outputs.middleCols(off, w).array();
        auto g = grad.middleCols(off, w);
        if (b.sigmoid()) {
            g.array() *= p * (1.0 - p);
        } else {
            const Eigen::ArrayXd dot = (g.array() * p).rowwise().sum();
            Matrix adjusted = g;
            for (Eigen::Index i = 0; i < g.rows(); ++i) adjusted.row(i).array() -= dot(i);
            g.array() = adjusted.array() * p;
        }
    }
    return grad;
}

double MixedHeads::loss(const Matrix& outputs, const Matrix& cells, ReconstructionParts* parts) const {
    check_shapes(outputs, cells);
    if (outputs.rows() == 0) throw ShapeError("reconstruction loss of an empty batch");
    ReconstructionParts acc;
    const double n = static_cast<double>(outputs.rows());
    if (!continuous_.empty()) {
        double s = 0.0;
        for (std::size_t c = 0; c < continuous_.size(); ++c)
            s += (outputs.col(static_cast<Eigen::Index>(c)) - cells.col(static_cast<Eigen::Index>(continuous_[c])))
                     .squaredNorm();
        acc.continuous = s / (n * static_cast<double>(continuous_.size()));
    }
    if (!blocks_.empty()) {
        double s = 0.0;
        for (const auto& b : blocks_) {
            for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
                const auto k = static_cast<Eigen::Index>(cells(i, static_cast<Eigen::Index>(b.feature)));
                if (b.sigmoid()) {
                    const double p = outputs(i, static_cast<Eigen::Index>(b.offset));
                    check_probability(p);
                    s -= k == 1 ? std::log(clamp_prob(p)) : std::log(clamp_prob(1.0 - p));
                } else {
                    for (std::size_t c = 0; c < b.width; ++c)
                        check_probability(outputs(i, static_cast<Eigen::Index>(b.offset + c)));
                    s -= std::log(clamp_prob(outputs(i, static_cast<Eigen::Index>(b.offset) + k)));
                }
            }
        }
        acc.discrete = s / (n * static_cast<double>(blocks_.size()));
    }
    if (parts) *parts = acc;
    return acc.total();
}

Matrix MixedHeads::logit_gradient(const Matrix& outputs, const Matrix& cells) const {
    check_shapes(outputs, cells);
    const double n = static_cast<double>(outputs.rows());
    Matrix grad = Matrix::Zero(outputs.rows(), outputs.cols());
    if (!continuous_.empty()) {
        const double scale = 2.0 / (n * static_cast<double>(continuous_.size()));
        for (std::size_t c = 0; c < continuous_.size(); ++c)
            grad.col(static_cast<Eigen::Index>(c)) =
                scale * (outputs.col(static_cast<Eigen::Index>(c)) - cells.col(static_cast<Eigen::Index>(continuous_[c])));
    }
    if (!blocks_.empty()) {
        const double scale = 1.0 / (n * static_cast<double>(blocks_.size()));
        for (const auto& b : blocks_) {
            const auto off = static_cast<Eigen::Index>(b.offset);
            for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
                const auto k = static_cast<Eigen::Index>(cells(i, static_cast<Eigen::Index>(b.feature)));
                if (b.sigmoid()) {
                    grad(i, off) = scale * (outputs(i, off) - (k == 1 ? 1.0 : 0.0));
                } else {
                    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(b.width); ++c)
                        grad(i, off + c) = scale * (outputs(i, off + c) - (c == k ? 1.0 : 0.0));
                }
            }
        }
    }
    return grad;
}

void MixedHeads::check_shapes(const Matrix& outputs, const Matrix& cells) const {
    if (static_cast<std::size_t>(outputs.cols()) != output_width_)
        throw ShapeError("head outputs have the wrong width");
    if (static_cast<std::size_t>(cells.cols()) != feature_count_ || cells.rows() != outputs.rows())
        throw ShapeError("reconstruction target does not match the head outputs");
}

std::vector<double> MixedHeads::row_losses(const Matrix& outputs, const Matrix& cells) const {
    check_shapes(outputs, cells);
    std::vector<double> out(static_cast<std::size_t>(outputs.rows()), 0.0);
    for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
        double cont = 0.0, disc = 0.0;
        for (std::size_t c = 0; c < continuous_.size(); ++c) {
            const double d = outputs(i, static_cast<Eigen::Index>(c)) - cells(i, static_cast<Eigen::Index>(continuous_[c]));
            cont += d * d;
        }
        for (const auto& b : blocks_) {
            const auto k = static_cast<Eigen::Index>(cells(i, static_cast<Eigen::Index>(b.feature)));
            if (b.sigmoid()) {
                const double p = outputs(i, static_cast<Eigen::Index>(b.offset));
                disc -= k == 1 ? std::log(clamp_prob(p)) : std::log(clamp_prob(1.0 - p));
            } else {
                disc -= std::log(clamp_prob(outputs(i, static_cast<Eigen::Index>(b.offset) + k)));
            }
        }
        if (!continuous_.empty()) cont /= static_cast<double>(continuous_.size());
        if (!blocks_.empty()) disc /= static_cast<double>(blocks_.size());
        out[static_cast<std::size_t>(i)] = cont + disc;
    }
    return out;
}

Matrix MixedHeads::to_relaxed(const Matrix& outputs) const {
    Matrix out(outputs.rows(), static_cast<Eigen::Index>(relaxed_width_));
    const auto dc = static_cast<Eigen::Index>(continuous_.size());
    out.leftCols(dc) = outputs.leftCols(dc);
    for (const auto& b : blocks_) {
        const auto off = static_cast<Eigen::Index>(b.offset);
        const auto roff = static_cast<Eigen::Index>(b.relaxed_offset);
        if (b.sigmoid()) {
            if (b.cardinality == 1) {
                out.col(roff).setOnes();
            } else {
                out.col(roff) = 1.0 - outputs.col(off).array();
                out.col(roff + 1) = outputs.col(off);
            }
        } else {
            out.middleCols(roff, static_cast<Eigen::Index>(b.width)) = outputs.middleCols(off, static_cast<Eigen::Index>(b.width));
        }
    }
    return out;
}

Matrix MixedHeads::relaxed_grad_to_outputs(const Matrix& relaxed_grad) const {
    Matrix out = Matrix::Zero(relaxed_grad.rows(), static_cast<Eigen::Index>(output_width_));
    const auto dc = static_cast<Eigen::Index>(continuous_.size());
    out.leftCols(dc) = relaxed_grad.leftCols(dc);
    for (const auto& b : blocks_) {
        const auto off = static_cast<Eigen::Index>(b.offset);
        const auto roff = static_cast<Eigen::Index>(b.relaxed_offset);
        if (b.sigmoid()) {
            if (b.cardinality == 2) out.col(off) = relaxed_grad.col(roff + 1) - relaxed_grad.col(roff);
        } else {
            out.middleCols(off, static_cast<Eigen::Index>(b.width)) =
                relaxed_grad.middleCols(roff, static_cast<Eigen::Index>(b.width));
        }
    }
    return out;
}

Matrix MixedHeads::decode(const Matrix& outputs, bool stochastic, Rng* rng) const {
    if (static_cast<std::size_t>(outputs.cols()) != output_width_) throw ShapeError("head outputs have the wrong width");
    if (stochastic && rng == nullptr) throw ConfigError("stochastic decoding needs a random generator");
    Matrix cells = Matrix::Zero(outputs.rows(), static_cast<Eigen::Index>(feature_count_));
    for (std::size_t c = 0; c < continuous_.size(); ++c)
        cells.col(static_cast<Eigen::Index>(continuous_[c])) = outputs.col(static_cast<Eigen::Index>(c));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& b : blocks_) {
        const auto off = static_cast<Eigen::Index>(b.offset);
        const auto col = static_cast<Eigen::Index>(b.feature);
        for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
            std::size_t k = 0;
            if (b.cardinality == 1) {
                k = 0;
            } else if (b.sigmoid()) {
                const double p = outputs(i, off);
                k = stochastic ? (unif(*rng) < p ? 1 : 0) : (p > 0.5 ? 1 : 0);
            } else if (stochastic) {
                const double u = unif(*rng);
                double acc = 0.0;
                k = b.width - 1;
                for (std::size_t c = 0; c < b.width; ++c) {
                    acc += outputs(i, off + static_cast<Eigen::Index>(c));
                    if (u < acc) {
                        k = c;
                        break;
                    }
                }
            } else {
                Eigen::Index best = 0;
                outputs.row(i).segment(off, static_cast<Eigen::Index>(b.width)).maxCoeff(&best);
                k = static_cast<std::size_t>(best);
            }
            cells(i, col) = static_cast<double>(k);
        }
    }
    return cells;
}

double ae_loss(const Matrix& outputs, const Matrix& cells, const TableSchema& schema, ReconstructionParts* parts) {
    return MixedHeads(schema).loss(outputs, cells, parts);
}

}  // namespace netsynth
