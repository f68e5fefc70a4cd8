#include "alignnet/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace alignnet {

const std::vector<std::string> kCorruptionTypes = {
    "gaussian_noise", "shot_noise",  "impulse_noise", "defocus_blur",
    "glass_blur",     "motion_blur", "zoom_blur",     "snow",
    "frost",          "fog",         "brightness",    "contrast",
    "elastic_transform", "pixelate", "jpeg_compression"};

static DenseMatrix normalize_batch(const DenseMatrix &x, const NormalizationStats &st) {
    if (st.mean.size() != x.cols)
        throw ShapeError("normalize_batch: stats dimension mismatch");
    DenseMatrix out = x;
    for (std::size_t i = 0; i < out.rows; ++i) {
        double *row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols; ++j)
            row[j] = (row[j] - st.mean[j]) / st.std[j];
    }
    return out;
}

ForwardCache RawPixelModel::forward_raw(const DenseMatrix &x_raw) const {
    return forward(*params, normalize_batch(x_raw, *stats));
}

DenseMatrix input_gradient(const RawPixelModel &model, const DenseMatrix &x_raw,
                           const std::vector<int> &labels) {
    ForwardCache cache = model.forward_raw(x_raw);
    auto [loss, delta] = loss_and_output_delta(cache, labels);
    (void)loss;
    const NetworkParams &p = *model.params;
    const std::size_t L = p.layer_count();

    // propagate delta down to the normalized input, exact transposes only
    DenseMatrix d = delta;
    for (std::size_t li = L; li-- > 0;) {
        DenseMatrix prev = matmul(d, p.W[li]);
        if (li > 0) {
            const DenseMatrix &o = cache.pre[li - 1];
            for (std::size_t k = 0; k < prev.data.size(); ++k)
                if (o.data[k] <= 0.0) prev.data[k] = 0.0;
        }
        d = std::move(prev);
    }
    // chain through x_norm = (x - mean)/std
    for (std::size_t i = 0; i < d.rows; ++i) {
        double *row = d.row_ptr(i);
        for (std::size_t j = 0; j < d.cols; ++j)
            row[j] /= model.stats->std[j];
    }
    return d;
}

static inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

DenseMatrix fgsm(const RawPixelModel &model, const DenseMatrix &x_raw,
                 const std::vector<int> &labels, double epsilon, bool clip_to_unit) {
    if (epsilon < 0.0) throw InvalidArgument("fgsm: epsilon must be >= 0");
    DenseMatrix g = input_gradient(model, x_raw, labels);
    DenseMatrix adv = x_raw;
    for (std::size_t k = 0; k < adv.data.size(); ++k) {
        adv.data[k] += epsilon * sign0(g.data[k]);
        if (clip_to_unit) adv.data[k] = std::clamp(adv.data[k], 0.0, 1.0);
    }
    return adv;
}

static void project_ball_and_clip(DenseMatrix &adv, const DenseMatrix &center,
                                  double epsilon, bool clip_to_unit) {
    for (std::size_t k = 0; k < adv.data.size(); ++k) {
        double lo = center.data[k] - epsilon, hi = center.data[k] + epsilon;
        adv.data[k] = std::clamp(adv.data[k], lo, hi);
        if (clip_to_unit) adv.data[k] = std::clamp(adv.data[k], 0.0, 1.0);
    }
}

DenseMatrix bim(const RawPixelModel &model, const DenseMatrix &x_raw,
                const std::vector<int> &labels, const AttackConfig &cfg) {
    if (cfg.epsilon < 0.0 || cfg.iterations < 1)
        throw InvalidArgument("bim: invalid config");
    double step = cfg.step_size > 0.0 ? cfg.step_size
                                      : cfg.epsilon / double(cfg.iterations);
    DenseMatrix adv = x_raw;
    for (int it = 0; it < cfg.iterations; ++it) {
        DenseMatrix g = input_gradient(model, adv, labels);
        for (std::size_t k = 0; k < adv.data.size(); ++k)
            adv.data[k] += step * sign0(g.data[k]);
        project_ball_and_clip(adv, x_raw, cfg.epsilon, cfg.clip_to_unit);
    }
    return adv;
}

DenseMatrix pgd(const RawPixelModel &model, const DenseMatrix &x_raw,
                const std::vector<int> &labels, const AttackConfig &cfg, RngState &rng) {
    if (cfg.epsilon < 0.0 || cfg.iterations < 1)
        throw InvalidArgument("pgd: invalid config");
    double step = cfg.step_size > 0.0 ? cfg.step_size : cfg.epsilon / 4.0;
    DenseMatrix adv = x_raw;
    if (cfg.random_start && cfg.epsilon > 0.0) {
        for (auto &v : adv.data)
            v += cfg.epsilon * (2.0 * rng.next_double() - 1.0);
        project_ball_and_clip(adv, x_raw, cfg.epsilon, cfg.clip_to_unit);
    }
    for (int it = 0; it < cfg.iterations; ++it) {
        DenseMatrix g = input_gradient(model, adv, labels);
        for (std::size_t k = 0; k < adv.data.size(); ++k)
            adv.data[k] += step * sign0(g.data[k]);
        project_ball_and_clip(adv, x_raw, cfg.epsilon, cfg.clip_to_unit);
    }
    return adv;
}

static std::size_t count_correct(const RawPixelModel &model, const DenseMatrix &x,
                                 const std::vector<int> &labels) {
    ForwardCache cache = model.forward_raw(x);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < cache.probs.rows; ++r) {
        const double *p = cache.probs.row_ptr(r);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < cache.probs.cols; ++j)
            if (p[j] > p[arg]) arg = j;
        if (int(arg) == labels[r]) ++correct;
    }
    return correct;
}

std::vector<std::pair<double, double>> attack_curve(
    const RawPixelModel &model, const Dataset &raw_test, AttackMethod method,
    const std::vector<double> &epsilons, const AttackConfig &base_cfg,
    RngState &rng, std::size_t batch_size) {
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (epsilons[i] < epsilons[i - 1])
            throw InvalidArgument("attack_curve: epsilon list must ascend");

    std::vector<std::pair<double, double>> curve;
    const std::size_t n = raw_test.size();
    for (double eps : epsilons) {
        std::size_t correct = 0;
        RngState eps_rng = rng.derive(uint64_t(eps * 1e6) + 7);
        for (std::size_t start = 0; start < n; start += batch_size) {
            std::size_t bs = std::min(batch_size, n - start);
            DenseMatrix x(bs, raw_test.images.cols);
            std::vector<int> y(bs);
            for (std::size_t r = 0; r < bs; ++r) {
                std::copy(raw_test.images.row_ptr(start + r),
                          raw_test.images.row_ptr(start + r) + raw_test.images.cols,
                          x.row_ptr(r));
                y[r] = raw_test.labels[start + r];
            }
            DenseMatrix adv;
            if (eps == 0.0) {
                adv = x; // epsilon 0 must reproduce clean accuracy exactly
            } else {
                AttackConfig cfg = base_cfg;
                cfg.epsilon = eps;
                switch (method) {
                case AttackMethod::Fgsm:
                    adv = fgsm(model, x, y, eps, cfg.clip_to_unit);
                    break;
                case AttackMethod::Bim:
                    adv = bim(model, x, y, cfg);
                    break;
                case AttackMethod::Pgd:
                    adv = pgd(model, x, y, cfg, eps_rng);
                    break;
                }
            }
            correct += count_correct(model, adv, y);
        }
        curve.emplace_back(eps, n == 0 ? 0.0 : double(correct) / double(n));
    }
    return curve;
}

CorruptionResult corruption_eval(const RawPixelModel &model,
                                 const std::string &cifar10c_dir, int severity,
                                 std::size_t batch_size) {
    if (severity < 1 || severity > 5)
        throw InvalidArgument("corruption_eval: severity must lie in 1..5");
    namespace fs = std::filesystem;

    for (const auto &name : kCorruptionTypes)
        if (!fs::exists(fs::path(cifar10c_dir) / (name + ".npy")))
            throw IoError("corruption_eval: missing corruption file " + name + ".npy");
    fs::path label_path = fs::path(cifar10c_dir) / "labels.npy";
    if (!fs::exists(label_path))
        throw IoError("corruption_eval: missing labels.npy");

    NpyArray label_arr = load_npy_u8(label_path.string());
    CorruptionResult result;
    result.severity = severity;

    double acc_sum = 0.0;
    for (const auto &name : kCorruptionTypes) {
        NpyArray arr = load_npy_u8((fs::path(cifar10c_dir) / (name + ".npy")).string());
        if (arr.shape.size() != 4 || arr.shape[1] != 32 || arr.shape[2] != 32 ||
            arr.shape[3] != 3)
            throw FormatError("corruption file " + name + ".npy: expected (N,32,32,3)");
        std::size_t total = arr.shape[0];
        if (total % 5 != 0)
            throw FormatError("corruption file " + name +
                              ".npy: image count not divisible by 5 severities");
        std::size_t per_sev = total / 5;
        std::size_t begin = std::size_t(severity - 1) * per_sev;
        if (label_arr.bytes.size() < begin + per_sev)
            throw FormatError("labels.npy shorter than corruption slice");

        std::size_t correct = 0;
        for (std::size_t start = 0; start < per_sev; start += batch_size) {
            std::size_t bs = std::min(batch_size, per_sev - start);
            DenseMatrix x(bs, 3072);
            std::vector<int> y(bs);
            for (std::size_t r = 0; r < bs; ++r) {
                std::size_t img = begin + start + r;
                const uint8_t *src = arr.bytes.data() + img * 3072;
                double *dst = x.row_ptr(r);
                // HWC bytes -> channel-major planes, same layout as CIFAR-10
                for (std::size_t c = 0; c < 3; ++c)
                    for (std::size_t hw = 0; hw < 1024; ++hw)
                        dst[c * 1024 + hw] = src[hw * 3 + c] / 255.0;
                y[r] = label_arr.bytes[img];
            }
            correct += count_correct(model, x, y);
        }
        double acc = per_sev == 0 ? 0.0 : double(correct) / double(per_sev);
        result.per_type.emplace_back(name, acc);
        acc_sum += acc;
    }
    result.mean_accuracy = acc_sum / double(kCorruptionTypes.size());
    return result;
}

} // namespace alignnet
