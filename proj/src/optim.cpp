#include "alignnet/optim.hpp"

#include <cmath>

namespace alignnet {

static void check_shapes(const NetworkParams &params, const ParamGrads &grads) {
    if (grads.gW.size() != params.W.size())
        throw ShapeError("optimizer: layer count mismatch");
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        if (!grads.gW[l].same_shape(params.W[l]) || grads.gb[l].size() != params.b[l].size())
            throw ShapeError("optimizer: grad shape mismatch at layer " + std::to_string(l));
    }
}

void sgd_step(NetworkParams &params, const ParamGrads &grads, double eta) {
    check_shapes(params, grads);
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        for (std::size_t k = 0; k < params.W[l].data.size(); ++k)
            params.W[l].data[k] -= eta * grads.gW[l].data[k];
        for (std::size_t k = 0; k < params.b[l].size(); ++k)
            params.b[l][k] -= eta * grads.gb[l][k];
    }
}

AdamState AdamState::like(const NetworkParams &params) {
    AdamState s;
    s.mW.resize(params.W.size());
    s.vW.resize(params.W.size());
    s.mb.resize(params.b.size());
    s.vb.resize(params.b.size());
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        s.mW[l] = DenseMatrix(params.W[l].rows, params.W[l].cols);
        s.vW[l] = DenseMatrix(params.W[l].rows, params.W[l].cols);
        s.mb[l].assign(params.b[l].size(), 0.0);
        s.vb[l].assign(params.b[l].size(), 0.0);
    }
    return s;
}

void adam_step(AdamState &state, NetworkParams &params, const ParamGrads &grads) {
    check_shapes(params, grads);
    if (state.mW.size() != params.W.size())
        throw ShapeError("adam_step: state layer count mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));

    const double b1 = state.beta1, b2 = state.beta2;
    const double eta = state.eta, eps = state.eps, wd = state.weight_decay;
    auto update_array = [&](double *theta, double *m, double *v, const double *g,
                            std::size_t n) {
#pragma omp simd
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            double mhat = m[k] / bc1;
            double vhat = v[k] / bc2;
            theta[k] -= eta * (mhat / (std::sqrt(vhat) + eps) + wd * theta[k]);
        }
    };

    for (std::size_t l = 0; l < params.W.size(); ++l) {
        update_array(params.W[l].data.data(), state.mW[l].data.data(),
                     state.vW[l].data.data(), grads.gW[l].data.data(),
                     params.W[l].data.size());
        update_array(params.b[l].data(), state.mb[l].data(), state.vb[l].data(),
                     grads.gb[l].data(), params.b[l].size());
    }
}

} // namespace alignnet
