#include "alignnet/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace alignnet {

static std::vector<std::pair<double, double>> measure_angles(
    const TrainConfig &cfg, const NetworkParams &params, const FeedbackParams &fb) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t l = 1; l < params.layer_count(); ++l) {
        // BP keeps forward and backward weights identical by construction
        const DenseMatrix &B =
            cfg.rule == Rule::Bp ? transpose(params.W[l]) : fb.B[l];
        AlignmentReport rep = alignment_angles(params.W[l], B);
        out.emplace_back(rep.mean_deg, rep.std_deg);
    }
    return out;
}

TrainResult train(const TrainConfig &cfg, const Dataset &train_ds, const Dataset &test_ds) {
    if (cfg.dims.size() < 2)
        throw ConfigError("train: network needs at least 2 dims");
    if (cfg.rule != Rule::Ifa && cfg.theta_init_deg != 0.0)
        throw ConfigError("train: theta_init is only valid for rule=ifa");
    if (train_ds.images.cols != cfg.dims.front())
        throw ConfigError("train: dataset feature count " +
                          std::to_string(train_ds.images.cols) +
                          " != input dim " + std::to_string(cfg.dims.front()));

    auto spec = mlp_spec(cfg.dims);
    RngState rng(cfg.seed);

    TrainResult res;
    // feedback weights are allocated for every rule so configs stay uniform;
    // BP simply never reads them
    res.feedback = init_feedback(spec, cfg.b, rng);
    switch (cfg.rule) {
    case Rule::Bp:
    case Rule::Fa:
        res.params = init_forward_plain(spec, cfg.a, rng);
        break;
    case Rule::Ifa:
        res.params = soft_align_init(spec, res.feedback, cfg.theta_init_deg, cfg.a, rng);
        break;
    }

    BackwardRule rule;
    if (cfg.rule == Rule::Bp) {
        rule = {RuleKind::ExactTranspose, nullptr};
    } else {
        rule = {RuleKind::FixedFeedback, &res.feedback};
    }

    AdamState adam = AdamState::like(res.params);
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eta = cfg.lr;
    adam.eps = cfg.adam_eps;
    adam.weight_decay = cfg.weight_decay;

    // optional cap keeps per-epoch telemetry cheap on large train sets;
    // the capped view is a prefix, so it is stable across epochs
    const Dataset *eval_train = &train_ds;
    Dataset capped;
    if (cfg.eval_train_cap > 0 && cfg.eval_train_cap < train_ds.size()) {
        capped.n_classes = train_ds.n_classes;
        capped.pixel_shape = train_ds.pixel_shape;
        capped.images = DenseMatrix(cfg.eval_train_cap, train_ds.images.cols);
        std::copy(train_ds.images.data.begin(),
                  train_ds.images.data.begin() + cfg.eval_train_cap * train_ds.images.cols,
                  capped.images.data.begin());
        capped.labels.assign(train_ds.labels.begin(),
                             train_ds.labels.begin() + cfg.eval_train_cap);
        eval_train = &capped;
    }

    auto log_point = [&](int epoch, long iter) {
        TrainLogEntry e;
        e.epoch = epoch;
        e.iteration = iter;
        auto [tr_acc, tr_loss] = evaluate(res.params, *eval_train, 512);
        auto [te_acc, te_loss] = evaluate(res.params, test_ds, 512);
        e.train_acc = tr_acc;
        e.train_loss = tr_loss;
        e.test_acc = te_acc;
        e.test_loss = te_loss;
        e.angles = measure_angles(cfg, res.params, res.feedback);
        res.log.entries.push_back(std::move(e));
        res.max_train_acc = std::max(res.max_train_acc, tr_acc);
        res.final_test_acc = te_acc;
    };

    if (cfg.keep_snapshots) res.checkpoints.record(res.params);
    log_point(0, 0);

    long iter = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto epoch_batches = batches(train_ds, cfg.batch_size, rng, true);
        for (const auto &batch : epoch_batches) {
            ForwardCache cache = forward(res.params, batch.images);
            auto [loss, delta] = loss_and_output_delta(cache, batch.labels);
            (void)loss;
            ParamGrads grads = backward(rule, res.params, cache, delta);
            if (cfg.use_adam)
                adam_step(adam, res.params, grads);
            else
                sgd_step(res.params, grads, cfg.lr);
            ++iter;
            if (cfg.log_every_steps > 0 && iter % cfg.log_every_steps == 0)
                log_point(epoch, iter);
            if (cfg.keep_snapshots && cfg.checkpoint_every_steps > 0 &&
                iter % cfg.checkpoint_every_steps == 0)
                res.checkpoints.record(res.params);
        }
        if (cfg.log_every_steps == 0) log_point(epoch, iter);
        if (cfg.keep_snapshots && cfg.checkpoint_every_steps == 0)
            res.checkpoints.record(res.params);
    }
    return res;
}

} // namespace alignnet
