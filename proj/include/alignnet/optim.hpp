#ifndef ALIGNNET_OPTIM_HPP
#define ALIGNNET_OPTIM_HPP

#include "alignnet/network.hpp"

namespace alignnet {

/// theta <- theta - eta * g, in place.
void sgd_step(NetworkParams &params, const ParamGrads &grads, double eta);

struct AdamState {
    std::vector<DenseMatrix> mW, vW;
    std::vector<std::vector<double>> mb, vb;
    long t = 0;
    double beta1 = 0.99; // paper value, not the conventional 0.9
    double beta2 = 0.999;
    double eta = 1e-4;
    double eps = 1e-8;
    double weight_decay = 0.0; // decoupled decay, off by default

    static AdamState like(const NetworkParams &params);
};

/// One Adam step with bias correction; decoupled weight decay added to the
/// step when weight_decay > 0.
void adam_step(AdamState &state, NetworkParams &params, const ParamGrads &grads);

} // namespace alignnet

#endif
