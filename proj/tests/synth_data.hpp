#ifndef TESTS_SYNTH_DATA_HPP
#define TESTS_SYNTH_DATA_HPP

// Deterministic CIFAR-shaped image generator used by the acceptance suite.
// Images live on a low-dimensional latent manifold decoded linearly to 3072
// pixels; labels come from a small fixed ReLU teacher on the latent code, so
// the task is learnable by an MLP while still byte-quantized like real files.

#include <cmath>
#include <vector>

#include "alignnet/dataio.hpp"

namespace testutil {

struct SynthSpec {
    std::size_t latent = 24;
    std::size_t teacher_hidden = 32;
    double pixel_noise = 0.02; // in [0,1] pixel units
    double margin = 0.0;       // resample while top1-top2 teacher margin is below
    uint64_t seed = 1234;
};

inline alignnet::Dataset make_synth(const SynthSpec &sp, std::size_t n, uint64_t stream) {
    using namespace alignnet;
    RngState rng(sp.seed);
    DenseMatrix Wg = gaussian(rng, 3072, sp.latent, 0.0, 1.0 / std::sqrt(double(sp.latent)));
    DenseMatrix A = gaussian(rng, sp.teacher_hidden, sp.latent, 0.0,
                             std::sqrt(2.0 / double(sp.latent)));
    DenseMatrix C = gaussian(rng, 10, sp.teacher_hidden, 0.0,
                             std::sqrt(2.0 / double(sp.teacher_hidden)));

    RngState srng = rng.derive(stream);
    Dataset ds;
    ds.n_classes = 10;
    ds.pixel_shape = {3, 32, 32};
    ds.images = DenseMatrix(n, 3072);
    ds.labels.resize(n);

    std::vector<double> z(sp.latent), h(sp.teacher_hidden);
    for (std::size_t i = 0; i < n; ++i) {
        int label = -1;
        for (int attempt = 0; attempt < 200; ++attempt) {
            for (auto &v : z) v = srng.next_normal();
            for (std::size_t j = 0; j < sp.teacher_hidden; ++j) {
                double s = 0;
                for (std::size_t k = 0; k < sp.latent; ++k) s += A(j, k) * z[k];
                h[j] = s > 0 ? s : 0;
            }
            double best = -1e300, second = -1e300;
            int arg = 0;
            for (int c = 0; c < 10; ++c) {
                double s = 0;
                for (std::size_t k = 0; k < sp.teacher_hidden; ++k) s += C(c, k) * h[k];
                if (s > best) {
                    second = best;
                    best = s;
                    arg = c;
                } else if (s > second) {
                    second = s;
                }
            }
            if (best - second >= sp.margin) {
                label = arg;
                break;
            }
        }
        ds.labels[i] = label;
        double *px = ds.images.row_ptr(i);
        for (std::size_t p = 0; p < 3072; ++p) {
            double s = 0;
            for (std::size_t k = 0; k < sp.latent; ++k) s += Wg(p, k) * z[k];
            double v = 0.5 + 0.18 * s + sp.pixel_noise * srng.next_normal();
            v = v < 0 ? 0 : (v > 1 ? 1 : v);
            px[p] = double(int(v * 255.0 + 0.5)) / 255.0; // byte quantization
        }
    }
    return ds;
}

} // namespace testutil

#endif
