#ifndef ALIGNNET_NETWORK_HPP
#define ALIGNNET_NETWORK_HPP

#include <vector>

#include "alignnet/dataio.hpp"
#include "alignnet/matrix.hpp"

namespace alignnet {

enum class Activation { Relu, Identity };

struct LayerSpec {
    std::size_t in_dim;
    std::size_t out_dim;
    Activation activation;
};

/// Layer dims for an MLP: {in, hidden..., out}. Hidden layers get ReLU,
/// the final layer is identity (softmax applied in the loss).
std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t> &dims);

struct NetworkParams {
    /// W[l] is out_dim x in_dim, b[l] has out_dim entries
    std::vector<DenseMatrix> W;
    std::vector<std::vector<double>> b;

    std::size_t layer_count() const { return W.size(); }
    std::size_t param_count() const;
};

/// Fixed backward weights B[l] for layers 1..L-1. B[l] has the shape of
/// W[l]^T and multiplies the downstream error. Layer 0 has no feedback
/// matrix (no error is propagated below layer 1), so B[0] stays empty.
struct FeedbackParams {
    std::vector<DenseMatrix> B;
};

enum class RuleKind { ExactTranspose, FixedFeedback };

struct BackwardRule {
    RuleKind kind = RuleKind::ExactTranspose;
    const FeedbackParams *feedback = nullptr; // required for FixedFeedback
};

/// Batch convention throughout: rows are samples. h[0] is the input batch,
/// pre[l] = o_{l+1}, act[l+1] = h_{l+1}, probs holds row-wise softmax.
struct ForwardCache {
    std::vector<DenseMatrix> pre;
    std::vector<DenseMatrix> act;
    DenseMatrix probs;
};

struct ParamGrads {
    std::vector<DenseMatrix> gW;
    std::vector<std::vector<double>> gb;
};

ForwardCache forward(const NetworkParams &params, const DenseMatrix &x);

/// Mean cross-entropy and the logit-space error delta_L = (p - onehot)/batch.
std::pair<double, DenseMatrix> loss_and_output_delta(const ForwardCache &cache,
                                                     const std::vector<int> &labels);

ParamGrads backward(const BackwardRule &rule, const NetworkParams &params,
                    const ForwardCache &cache, const DenseMatrix &delta_out);

/// Accuracy (argmax, ties to the lowest class index) and mean loss over a
/// dataset. Batch-size invariant: the loss sum is accumulated per sample in
/// dataset order.
std::pair<double, double> evaluate(const NetworkParams &params, const Dataset &ds,
                                   std::size_t batch_size);

} // namespace alignnet

#endif
