#include "alignnet/network.hpp"

#include <cmath>

namespace alignnet {

std::vector<LayerSpec> mlp_spec(const std::vector<std::size_t> &dims) {
    if (dims.size() < 2)
        throw InvalidArgument("mlp_spec: need at least input and output dims");
    std::vector<LayerSpec> spec;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        bool last = l + 2 == dims.size();
        spec.push_back({dims[l], dims[l + 1], last ? Activation::Identity : Activation::Relu});
    }
    return spec;
}

std::size_t NetworkParams::param_count() const {
    std::size_t p = 0;
    for (std::size_t l = 0; l < W.size(); ++l)
        p += W[l].size() + b[l].size();
    return p;
}

static DenseMatrix affine(const DenseMatrix &h, const DenseMatrix &w,
                          const std::vector<double> &bias) {
    DenseMatrix o = matmul_nt(h, w); // h (batch x in) * W^T -> batch x out
    for (std::size_t i = 0; i < o.rows; ++i) {
        double *row = o.row_ptr(i);
        for (std::size_t j = 0; j < o.cols; ++j) row[j] += bias[j];
    }
    return o;
}

static DenseMatrix softmax_rows(const DenseMatrix &logits) {
    DenseMatrix p(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double *z = logits.row_ptr(i);
        double *pr = p.row_ptr(i);
        double mx = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            pr[j] = std::exp(z[j] - mx);
            sum += pr[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) pr[j] /= sum;
    }
    return p;
}

ForwardCache forward(const NetworkParams &params, const DenseMatrix &x) {
    const std::size_t L = params.layer_count();
    if (L == 0) throw ShapeError("forward: empty network");
    if (x.cols != params.W[0].cols)
        throw ShapeError("forward: input width " + std::to_string(x.cols) +
                         " != layer-0 in_dim " + std::to_string(params.W[0].cols));
    ForwardCache cache;
    cache.act.resize(L + 1);
    cache.pre.resize(L);
    cache.act[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
        if (params.W[l].cols != cache.act[l].cols)
            throw ShapeError("forward: shape chain broken at layer " + std::to_string(l));
        cache.pre[l] = affine(cache.act[l], params.W[l], params.b[l]);
        if (l + 1 < L) {
            DenseMatrix h = cache.pre[l];
            for (double &v : h.data) v = v > 0.0 ? v : 0.0;
            cache.act[l + 1] = std::move(h);
        } else {
            cache.act[l + 1] = cache.pre[l]; // logits
        }
    }
    cache.probs = softmax_rows(cache.pre[L - 1]);
    return cache;
}

std::pair<double, DenseMatrix> loss_and_output_delta(const ForwardCache &cache,
                                                     const std::vector<int> &labels) {
    const DenseMatrix &p = cache.probs;
    if (labels.size() != p.rows)
        throw InvalidArgument("loss: label count != batch size");
    const double inv_batch = 1.0 / double(p.rows);
    double loss = 0.0;
    DenseMatrix delta = p;
    for (std::size_t i = 0; i < p.rows; ++i) {
        int y = labels[i];
        if (y < 0 || std::size_t(y) >= p.cols)
            throw InvalidArgument("loss: label " + std::to_string(y) +
                                  " out of range for " + std::to_string(p.cols) + " classes");
        loss -= std::log(std::max(p(i, y), 1e-300));
        delta(i, y) -= 1.0;
    }
    for (double &v : delta.data) v *= inv_batch;
    return {loss * inv_batch, delta};
}

ParamGrads backward(const BackwardRule &rule, const NetworkParams &params,
                    const ForwardCache &cache, const DenseMatrix &delta_out) {
    const std::size_t L = params.layer_count();
    if (rule.kind == RuleKind::FixedFeedback && rule.feedback == nullptr)
        throw InvalidArgument("backward: fixed-feedback rule without FeedbackParams");
    if (delta_out.rows != cache.act[0].rows || delta_out.cols != params.W[L - 1].rows)
        throw ShapeError("backward: delta shape mismatch");

    ParamGrads g;
    g.gW.resize(L);
    g.gb.resize(L);

    DenseMatrix delta = delta_out;
    for (std::size_t li = L; li-- > 0;) {
        g.gW[li] = matmul_tn(delta, cache.act[li]); // delta^T h -> out x in
        g.gb[li].assign(delta.cols, 0.0);
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double *row = delta.row_ptr(i);
            for (std::size_t j = 0; j < delta.cols; ++j) g.gb[li][j] += row[j];
        }
        if (li == 0) break; // no error propagated below layer 1

        DenseMatrix prev;
        if (rule.kind == RuleKind::ExactTranspose) {
            prev = matmul(delta, params.W[li]); // delta * W -> batch x in
        } else {
            const DenseMatrix &B = rule.feedback->B[li]; // in x out, shape of W^T
            if (B.rows != params.W[li].cols || B.cols != params.W[li].rows)
                throw ShapeError("backward: feedback shape mismatch at layer " +
                                 std::to_string(li));
            prev = matmul_nt(delta, B);
        }
        const DenseMatrix &o = cache.pre[li - 1];
        for (std::size_t k = 0; k < prev.data.size(); ++k)
            prev.data[k] = o.data[k] > 0.0 ? prev.data[k] : 0.0; // relu'(0) := 0
        delta = std::move(prev);
    }
    return g;
}

std::pair<double, double> evaluate(const NetworkParams &params, const Dataset &ds,
                                   std::size_t batch_size) {
    std::size_t n = ds.size();
    if (n == 0) return {0.0, 0.0};
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
        std::size_t bs = std::min(batch_size, n - start);
        DenseMatrix x(bs, ds.images.cols);
        for (std::size_t r = 0; r < bs; ++r)
            std::copy(ds.images.row_ptr(start + r),
                      ds.images.row_ptr(start + r) + ds.images.cols, x.row_ptr(r));
        ForwardCache cache = forward(params, x);
        for (std::size_t r = 0; r < bs; ++r) {
            const double *p = cache.probs.row_ptr(r);
            std::size_t arg = 0;
            for (std::size_t j = 1; j < cache.probs.cols; ++j)
                if (p[j] > p[arg]) arg = j; // ties stay with the lowest index
            if (int(arg) == ds.labels[start + r]) ++correct;
            loss_sum -= std::log(std::max(p[ds.labels[start + r]], 1e-300));
        }
    }
    return {double(correct) / double(n), loss_sum / double(n)};
}

} // namespace alignnet
