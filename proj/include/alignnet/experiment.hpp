#ifndef ALIGNNET_EXPERIMENT_HPP
#define ALIGNNET_EXPERIMENT_HPP

#include <string>

#include "alignnet/robustness.hpp"
#include "alignnet/spectral.hpp"
#include "alignnet/trainer.hpp"

namespace alignnet {

/// Flat key=value config with [section] headers; keys are stored and looked
/// up as "section.key".
struct ExperimentConfig {
    // data
    std::string dataset = "cifar10"; // cifar10|cifar100|mnist
    std::vector<std::string> train_files;
    std::vector<std::string> test_files;
    std::string mnist_train_images, mnist_train_labels;
    std::string mnist_test_images, mnist_test_labels;
    std::size_t subset_n = 0; // 0 = use everything
    std::string cifar10c_dir;

    // model
    std::vector<std::size_t> hidden = {512, 512};
    std::string rule = "bp"; // bp|fa|ifa
    double theta_init_deg = 0.0;
    bool theta_set = false;
    double a = std::numbers::sqrt2;
    double b = std::numbers::sqrt2;

    // optimizer
    std::string optimizer = "adam";
    double lr = 1e-4;
    double beta1 = 0.99, beta2 = 0.999, adam_eps = 1e-8, weight_decay = 0.0;
    int epochs = 30;
    std::size_t batch_size = 128;

    // run
    int trials = 1;
    uint64_t seed = 0;
    std::string outdir = "out";
    int log_every_steps = 0;
    int checkpoint_every_steps = 0;
    bool save_snapshots = false;

    // sweep axes (only the one matching the chosen axis is read)
    std::vector<double> sweep_a, sweep_b;
    std::vector<int> sweep_depths;
    std::vector<std::size_t> sweep_sizes;

    // spectral
    int trace_probes = 100;
    int slq_probes = 10;
    int slq_steps = 80;
    std::size_t oracle_batch = 1000;
    int landscape_grid = 25;
    double landscape_range = 1.0;

    // attack
    std::vector<double> epsilons = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
    int attack_iters = 0; // 0 = method default
    double attack_step = 0.0;
    bool attack_clip = true;
};

ExperimentConfig parse_config_file(const std::string &path);
ExperimentConfig parse_config_text(const std::string &text);
void apply_config_kv(ExperimentConfig &cfg, const std::string &key,
                     const std::string &value);
/// Cross-field checks: referenced files exist, trials >= 1, theta only for ifa.
void validate_config(const ExperimentConfig &cfg);

struct ExperimentData {
    Dataset train_norm, test_norm;
    Dataset test_raw; // [0,1] pixels, for attacks
    NormalizationStats stats;
};

ExperimentData load_experiment_data(const ExperimentConfig &cfg);

TrainConfig to_train_config(const ExperimentConfig &cfg, std::size_t input_dim,
                            std::size_t n_classes, uint64_t seed);

// ---- subcommand drivers; each writes CSV artifacts into cfg.outdir ----

struct TrialSummary {
    uint64_t seed;
    double max_train_acc;
    double final_test_acc;
};

std::vector<TrialSummary> run_train_experiment(const ExperimentConfig &cfg);

enum class SweepAxis { VarianceGrid, Depth, DataSize };
void run_sweep_experiment(const ExperimentConfig &cfg, SweepAxis axis);

void run_spectrum_experiment(const ExperimentConfig &cfg, const std::string &checkpoint);
void run_landscape_experiment(const ExperimentConfig &cfg);
void run_attack_experiment(const ExperimentConfig &cfg, const std::string &checkpoint,
                           AttackMethod method);
void run_corruption_experiment(const ExperimentConfig &cfg, const std::string &checkpoint,
                               int severity);

} // namespace alignnet

#endif
