#ifndef ALIGNNET_TRAINER_HPP
#define ALIGNNET_TRAINER_HPP

#include "alignnet/init.hpp"
#include "alignnet/metrics.hpp"
#include "alignnet/optim.hpp"

namespace alignnet {

enum class Rule { Bp, Fa, Ifa };

struct TrainConfig {
    std::vector<std::size_t> dims; // {input, hidden..., classes}
    Rule rule = Rule::Bp;
    double theta_init_deg = 0.0; // IFA only
    double a = std::numbers::sqrt2;
    double b = std::numbers::sqrt2;

    bool use_adam = true;
    double lr = 1e-4;
    double beta1 = 0.99, beta2 = 0.999, adam_eps = 1e-8, weight_decay = 0.0;

    int epochs = 30;
    std::size_t batch_size = 128;
    uint64_t seed = 0;

    std::size_t eval_train_cap = 0; // 0 = score telemetry on the full train set
    int log_every_steps = 0;        // 0 = log once per epoch
    int checkpoint_every_steps = 0; // 0 = snapshot once per epoch (plus init)
    bool keep_snapshots = false;    // keep the full FlatParams trail in memory
};

struct TrainResult {
    NetworkParams params;
    FeedbackParams feedback;
    TrainLog log;
    CheckpointStore checkpoints; // populated when keep_snapshots is set
    double max_train_acc = 0.0;
    double final_test_acc = 0.0;
};

/// Train one network per the configured rule on already-normalized data.
/// Deterministic for a fixed config and seed.
TrainResult train(const TrainConfig &cfg, const Dataset &train_ds, const Dataset &test_ds);

} // namespace alignnet

#endif
