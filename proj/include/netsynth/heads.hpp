#pragma once

// Typed output heads for mixed tabular rows. A head layer emits one block of
// logits: identity for the continuous features, then one block per discrete
// feature (a single sigmoid unit for two categories or fewer, a softmax over
// the categories otherwise).

#include <vector>

#include "netsynth/common.hpp"
#include "netsynth/dataio.hpp"

namespace netsynth {

struct HeadBlock {
    std::size_t feature = 0;      // index into the schema
    std::size_t offset = 0;       // first column in the head output
    std::size_t width = 0;        // 1 for sigmoid heads, cardinality for softmax
    std::size_t cardinality = 0;
    std::size_t relaxed_offset = 0;

    bool sigmoid() const { return width == 1; }
};

struct ReconstructionParts {
    double continuous = 0.0;
    double discrete = 0.0;
    double total() const { return continuous + discrete; }
};

class MixedHeads {
public:
    MixedHeads() = default;
    explicit MixedHeads(const TableSchema& schema);

    std::size_t continuous_count() const { return continuous_.size(); }
    std::size_t discrete_count() const { return blocks_.size(); }
    /// Width of the logit/probability layer.
    std::size_t output_width() const { return output_width_; }
    /// Width of the relaxed view (continuous + full one-hot per discrete feature).
    std::size_t relaxed_width() const { return relaxed_width_; }
    const std::vector<HeadBlock>& blocks() const { return blocks_; }

    /// Logits to head outputs: continuous passed through, probabilities elsewhere.
    Matrix activate(const Matrix& logits) const;

    /// Given dLoss/dOutputs, returns dLoss/dLogits through the head activations.
    Matrix backward(const Matrix& outputs, const Matrix& output_grad) const;

    /// Reconstruction loss against encoded cells: mean squared error over the
    /// continuous features plus the mean over discrete features of each
    /// feature's mean cross-entropy. Throws NumericError when a probability
    /// lies outside [0, 1].
    double loss(const Matrix& outputs, const Matrix& cells, ReconstructionParts* parts = nullptr) const;

    /// dLoss/dLogits for loss(), using the fused sigmoid/softmax form.
    Matrix logit_gradient(const Matrix& outputs, const Matrix& cells) const;

    /// Per-row value of loss() (each row weighted as if it were the whole batch).
    std::vector<double> row_losses(const Matrix& outputs, const Matrix& cells) const;

    /// Head outputs to the relaxed layout; sigmoid p becomes [1 - p, p].
    Matrix to_relaxed(const Matrix& outputs) const;
    /// Gradient with respect to the relaxed view mapped back onto the outputs.
    Matrix relaxed_grad_to_outputs(const Matrix& relaxed_grad) const;

    /// Encoded cells from head outputs. Deterministic mode takes the argmax
    /// (threshold 0.5 for sigmoid heads); stochastic mode draws categories.
    Matrix decode(const Matrix& outputs, bool stochastic, Rng* rng) const;

private:
    void check_shapes(const Matrix& outputs, const Matrix& cells) const;

    std::vector<std::size_t> continuous_;  // schema indices of continuous features
    std::vector<HeadBlock> blocks_;
    std::size_t feature_count_ = 0;
    std::size_t output_width_ = 0;
    std::size_t relaxed_width_ = 0;
};

/// Reconstruction loss of head outputs against encoded cells for the schema.
double ae_loss(const Matrix& outputs, const Matrix& cells, const TableSchema& schema,
               ReconstructionParts* parts = nullptr);

}  // namespace netsynth
