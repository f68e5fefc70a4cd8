#ifndef ALIGNNET_ROBUSTNESS_HPP
#define ALIGNNET_ROBUSTNESS_HPP

#include <map>
#include <string>

#include "alignnet/network.hpp"

namespace alignnet {

/// Classifier over raw [0,1] pixels: normalization is applied inside, so
/// attacks perturb raw pixel space and gradients chain through the
/// normalization affine map.
struct RawPixelModel {
    const NetworkParams *params;
    const NormalizationStats *stats;

    ForwardCache forward_raw(const DenseMatrix &x_raw) const;
};

struct AttackConfig {
    double epsilon = 0.0;      // raw-pixel perturbation bound
    int iterations = 10;       // BIM/PGD
    double step_size = 0.0;    // <= 0 means epsilon/iterations (BIM), epsilon/4 (PGD)
    bool random_start = true;  // PGD
    bool clip_to_unit = true;  // clip adversarial pixels to [0,1]
};

/// Exact gradient of the mean cross-entropy with respect to raw pixels.
/// Always uses the true (exact-transpose) gradient regardless of the rule
/// the network was trained with.
DenseMatrix input_gradient(const RawPixelModel &model, const DenseMatrix &x_raw,
                           const std::vector<int> &labels);

DenseMatrix fgsm(const RawPixelModel &model, const DenseMatrix &x_raw,
                 const std::vector<int> &labels, double epsilon,
                 bool clip_to_unit = true);

DenseMatrix bim(const RawPixelModel &model, const DenseMatrix &x_raw,
                const std::vector<int> &labels, const AttackConfig &cfg);

DenseMatrix pgd(const RawPixelModel &model, const DenseMatrix &x_raw,
                const std::vector<int> &labels, const AttackConfig &cfg, RngState &rng);

enum class AttackMethod { Fgsm, Bim, Pgd };

/// Accuracy under attack for each epsilon (ascending); epsilon = 0 gives the
/// clean accuracy exactly.
std::vector<std::pair<double, double>> attack_curve(
    const RawPixelModel &model, const Dataset &raw_test, AttackMethod method,
    const std::vector<double> &epsilons, const AttackConfig &base_cfg,
    RngState &rng, std::size_t batch_size = 256);

extern const std::vector<std::string> kCorruptionTypes; // the 15 CIFAR-10-C names

struct CorruptionResult {
    int severity = 0;
    std::vector<std::pair<std::string, double>> per_type; // (corruption, accuracy)
    double mean_accuracy = 0.0;
};

/// Accuracy on each CIFAR-10-C corruption type at one severity (1..5).
/// Files stack 5 severities x 10000 HWC images; labels come from labels.npy.
/// Images are converted to the engine's channel-major layout at load.
CorruptionResult corruption_eval(const RawPixelModel &model,
                                 const std::string &cifar10c_dir, int severity,
                                 std::size_t batch_size = 256);

} // namespace alignnet

#endif
