#include "alignnet/init.hpp"

#include <cmath>
#include <numbers>

namespace alignnet {

FeedbackParams init_feedback(const std::vector<LayerSpec> &spec, double b, RngState &rng) {
    if (b <= 0.0) throw InvalidArgument("init_feedback: scale must be > 0");
    FeedbackParams fb;
    fb.B.resize(spec.size());
    for (std::size_t l = 1; l < spec.size(); ++l) {
        double std = b / std::sqrt(double(spec[l].in_dim));
        // B[l] has the shape of W[l]^T: in_dim x out_dim
        fb.B[l] = gaussian(rng, spec[l].in_dim, spec[l].out_dim, 0.0, std);
    }
    return fb;
}

NetworkParams init_forward_plain(const std::vector<LayerSpec> &spec, double a, RngState &rng) {
    if (a <= 0.0) throw InvalidArgument("init_forward_plain: scale must be > 0");
    NetworkParams p;
    p.W.resize(spec.size());
    p.b.resize(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) {
        double std = a / std::sqrt(double(spec[l].in_dim));
        p.W[l] = gaussian(rng, spec[l].out_dim, spec[l].in_dim, 0.0, std);
        p.b[l].assign(spec[l].out_dim, 0.0);
    }
    return p;
}

NetworkParams soft_align_init(const std::vector<LayerSpec> &spec, const FeedbackParams &fb,
                              double theta_init_deg, double a, RngState &rng) {
    if (a <= 0.0) throw InvalidArgument("soft_align_init: scale must be > 0");
    if (theta_init_deg < 0.0 || theta_init_deg > 90.0)
        throw InvalidArgument("soft_align_init: theta_init must lie in [0, 90] degrees");
    double theta = theta_init_deg * std::numbers::pi / 180.0;
    double c = std::cos(theta), s = std::sin(theta);

    NetworkParams p;
    p.W.resize(spec.size());
    p.b.resize(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) {
        double std = a / std::sqrt(double(spec[l].in_dim));
        if (l == 0) {
            p.W[l] = gaussian(rng, spec[l].out_dim, spec[l].in_dim, 0.0, std);
        } else {
            const DenseMatrix &B = fb.B[l];
            if (B.rows != spec[l].in_dim || B.cols != spec[l].out_dim)
                throw ShapeError("soft_align_init: feedback shape mismatch at layer " +
                                 std::to_string(l));
            DenseMatrix r = gaussian(rng, spec[l].out_dim, spec[l].in_dim, 0.0, std);
            DenseMatrix w(spec[l].out_dim, spec[l].in_dim);
            for (std::size_t i = 0; i < w.rows; ++i)
                for (std::size_t j = 0; j < w.cols; ++j)
                    w(i, j) = B(j, i) * c + r(i, j) * s;
            p.W[l] = std::move(w);
        }
        p.b[l].assign(spec[l].out_dim, 0.0);
    }
    return p;
}

} // namespace alignnet
