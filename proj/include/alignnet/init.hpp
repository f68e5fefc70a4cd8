#ifndef ALIGNNET_INIT_HPP
#define ALIGNNET_INIT_HPP

#include <numbers>

#include "alignnet/network.hpp"

namespace alignnet {

struct InitConfig {
    double a = std::numbers::sqrt2; // forward scale (He)
    double b = std::numbers::sqrt2; // backward scale
    double theta_init_deg = 90.0;   // alignment angle, 0 = fully aligned
};

/// B[l] ~ N(0, b^2/fan_in) for layers 1..L-1; B[0] left empty.
FeedbackParams init_feedback(const std::vector<LayerSpec> &spec, double b, RngState &rng);

/// Plain variance-scaled init: W[l] ~ N(0, a^2/fan_in), biases zero.
NetworkParams init_forward_plain(const std::vector<LayerSpec> &spec, double a, RngState &rng);

/// Soft initial alignment: W[l] = B[l]^T cos(theta) + R sin(theta) with a
/// fresh R ~ N(0, a^2/fan_in) per layer. Layer 0 (no feedback matrix) falls
/// back to the plain init. Biases zero.
NetworkParams soft_align_init(const std::vector<LayerSpec> &spec, const FeedbackParams &fb,
                              double theta_init_deg, double a, RngState &rng);

} // namespace alignnet

#endif
