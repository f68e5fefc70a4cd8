#include "alignnet/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace alignnet {

namespace fs = std::filesystem;

static std::string trim(const std::string &s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
static std::vector<T> parse_list(const std::string &value) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        if constexpr (std::is_same_v<T, std::string>)
            out.push_back(tok);
        else if constexpr (std::is_floating_point_v<T>)
            out.push_back(std::stod(tok));
        else
            out.push_back(static_cast<T>(std::stoull(tok)));
    }
    return out;
}

void apply_config_kv(ExperimentConfig &cfg, const std::string &key,
                     const std::string &value) {
    if (key == "data.dataset") cfg.dataset = value;
    else if (key == "data.train_files") cfg.train_files = parse_list<std::string>(value);
    else if (key == "data.test_files") cfg.test_files = parse_list<std::string>(value);
    else if (key == "data.mnist_train_images") cfg.mnist_train_images = value;
    else if (key == "data.mnist_train_labels") cfg.mnist_train_labels = value;
    else if (key == "data.mnist_test_images") cfg.mnist_test_images = value;
    else if (key == "data.mnist_test_labels") cfg.mnist_test_labels = value;
    else if (key == "data.subset") cfg.subset_n = std::stoull(value);
    else if (key == "data.cifar10c_dir") cfg.cifar10c_dir = value;
    else if (key == "model.hidden") cfg.hidden = parse_list<std::size_t>(value);
    else if (key == "model.rule") cfg.rule = value;
    else if (key == "model.theta_init") { cfg.theta_init_deg = std::stod(value); cfg.theta_set = true; }
    else if (key == "model.a") cfg.a = std::stod(value);
    else if (key == "model.b") cfg.b = std::stod(value);
    else if (key == "optim.optimizer") cfg.optimizer = value;
    else if (key == "optim.lr") cfg.lr = std::stod(value);
    else if (key == "optim.beta1") cfg.beta1 = std::stod(value);
    else if (key == "optim.beta2") cfg.beta2 = std::stod(value);
    else if (key == "optim.epsilon") cfg.adam_eps = std::stod(value);
    else if (key == "optim.weight_decay") cfg.weight_decay = std::stod(value);
    else if (key == "optim.epochs") cfg.epochs = std::stoi(value);
    else if (key == "optim.batch_size") cfg.batch_size = std::stoull(value);
    else if (key == "run.trials") cfg.trials = std::stoi(value);
    else if (key == "run.seed") cfg.seed = std::stoull(value);
    else if (key == "run.outdir") cfg.outdir = value;
    else if (key == "run.log_every_steps") cfg.log_every_steps = std::stoi(value);
    else if (key == "run.checkpoint_every_steps") cfg.checkpoint_every_steps = std::stoi(value);
    else if (key == "run.save_snapshots") cfg.save_snapshots = value == "true" || value == "1";
    else if (key == "sweep.a") cfg.sweep_a = parse_list<double>(value);
    else if (key == "sweep.b") cfg.sweep_b = parse_list<double>(value);
    else if (key == "sweep.depths") cfg.sweep_depths = parse_list<int>(value);
    else if (key == "sweep.sizes") cfg.sweep_sizes = parse_list<std::size_t>(value);
    else if (key == "spectral.trace_probes") cfg.trace_probes = std::stoi(value);
    else if (key == "spectral.slq_probes") cfg.slq_probes = std::stoi(value);
    else if (key == "spectral.slq_steps") cfg.slq_steps = std::stoi(value);
    else if (key == "spectral.oracle_batch") cfg.oracle_batch = std::stoull(value);
    else if (key == "spectral.landscape_grid") cfg.landscape_grid = std::stoi(value);
    else if (key == "spectral.landscape_range") cfg.landscape_range = std::stod(value);
    else if (key == "attack.epsilons") cfg.epsilons = parse_list<double>(value);
    else if (key == "attack.iterations") cfg.attack_iters = std::stoi(value);
    else if (key == "attack.step_size") cfg.attack_step = std::stod(value);
    else if (key == "attack.clip") cfg.attack_clip = value == "true" || value == "1";
    else throw ConfigError("unknown config key: " + key);
}

ExperimentConfig parse_config_text(const std::string &text) {
    ExperimentConfig cfg;
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        apply_config_kv(cfg, section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string &path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

void validate_config(const ExperimentConfig &cfg) {
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.rule != "bp" && cfg.rule != "fa" && cfg.rule != "ifa")
        throw ConfigError("rule must be bp, fa or ifa");
    if (cfg.theta_set && cfg.rule != "ifa")
        throw ConfigError("theta_init is only valid for rule=ifa");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    auto must_exist = [](const std::string &p) {
        if (!p.empty() && !fs::exists(p))
            throw ConfigError("referenced file does not exist: " + p);
    };
    for (const auto &p : cfg.train_files) must_exist(p);
    for (const auto &p : cfg.test_files) must_exist(p);
    must_exist(cfg.mnist_train_images);
    must_exist(cfg.mnist_train_labels);
    must_exist(cfg.mnist_test_images);
    must_exist(cfg.mnist_test_labels);
}

ExperimentData load_experiment_data(const ExperimentConfig &cfg) {
    Dataset train_raw, test_raw;
    if (cfg.dataset == "cifar10" || cfg.dataset == "cifar100") {
        CifarVariant v = cfg.dataset == "cifar10" ? CifarVariant::Cifar10
                                                  : CifarVariant::Cifar100;
        train_raw = load_cifar(cfg.train_files, v);
        test_raw = load_cifar(cfg.test_files, v);
    } else if (cfg.dataset == "mnist") {
        train_raw = load_mnist_idx(cfg.mnist_train_images, cfg.mnist_train_labels);
        test_raw = load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels);
    } else {
        throw ConfigError("unsupported dataset: " + cfg.dataset);
    }
    if (cfg.subset_n > 0) {
        RngState sub_rng(cfg.seed ^ 0x5b5e7ULL);
        train_raw = subset(train_raw, cfg.subset_n, sub_rng);
    }
    ExperimentData data;
    data.stats = compute_stats(train_raw);
    data.train_norm = normalize(train_raw, data.stats);
    data.test_norm = normalize(test_raw, data.stats);
    data.test_raw = std::move(test_raw);
    return data;
}

TrainConfig to_train_config(const ExperimentConfig &cfg, std::size_t input_dim,
                            std::size_t n_classes, uint64_t seed) {
    TrainConfig tc;
    tc.dims.push_back(input_dim);
    for (auto h : cfg.hidden) tc.dims.push_back(h);
    tc.dims.push_back(n_classes);
    if (cfg.rule == "bp") tc.rule = Rule::Bp;
    else if (cfg.rule == "fa") tc.rule = Rule::Fa;
    else tc.rule = Rule::Ifa;
    tc.theta_init_deg = cfg.rule == "ifa" ? cfg.theta_init_deg : 0.0;
    tc.a = cfg.a;
    tc.b = cfg.b;
    tc.use_adam = cfg.optimizer == "adam";
    tc.lr = cfg.lr;
    tc.beta1 = cfg.beta1;
    tc.beta2 = cfg.beta2;
    tc.adam_eps = cfg.adam_eps;
    tc.weight_decay = cfg.weight_decay;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.seed = seed;
    tc.log_every_steps = cfg.log_every_steps;
    tc.checkpoint_every_steps = cfg.checkpoint_every_steps;
    tc.keep_snapshots = cfg.save_snapshots;
    return tc;
}

std::vector<TrialSummary> run_train_experiment(const ExperimentConfig &cfg) {
    validate_config(cfg);
    ExperimentData data = load_experiment_data(cfg);
    fs::create_directories(cfg.outdir);

    std::vector<TrialSummary> summaries;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        uint64_t seed = cfg.seed + uint64_t(trial);
        TrainConfig tc = to_train_config(cfg, data.train_norm.images.cols,
                                         std::size_t(data.train_norm.n_classes), seed);
        TrainResult res = train(tc, data.train_norm, data.test_norm);
        std::string suffix = "_trial" + std::to_string(trial);
        write_csv(res.log, (fs::path(cfg.outdir) / ("train" + suffix + ".csv")).string());
        save_checkpoint((fs::path(cfg.outdir) / ("final" + suffix + ".ckpt")).string(),
                        res.params);
        if (cfg.save_snapshots) {
            NetworkParams shape = res.params;
            for (std::size_t k = 0; k < res.checkpoints.snapshots.size(); ++k) {
                save_checkpoint((fs::path(cfg.outdir) /
                                 ("snap" + suffix + "_" + std::to_string(k) + ".ckpt"))
                                    .string(),
                                unflatten_params(res.checkpoints.snapshots[k], shape));
            }
        }
        summaries.push_back({seed, res.max_train_acc, res.final_test_acc});
    }
    return summaries;
}

void run_sweep_experiment(const ExperimentConfig &cfg, SweepAxis axis) {
    validate_config(cfg);
    ExperimentData data = load_experiment_data(cfg);
    fs::create_directories(cfg.outdir);
    std::ofstream out(fs::path(cfg.outdir) / "sweep.csv");
    if (!out) throw IoError("cannot write sweep.csv");

    auto run_one = [&](const ExperimentConfig &c, const Dataset &train_ds,
                       const Dataset &test_ds) {
        double max_acc = 0.0, test_acc = 0.0;
        for (int trial = 0; trial < c.trials; ++trial) {
            TrainConfig tc = to_train_config(c, train_ds.images.cols,
                                             std::size_t(train_ds.n_classes),
                                             c.seed + uint64_t(trial));
            TrainResult res = train(tc, train_ds, test_ds);
            max_acc += res.max_train_acc;
            test_acc += res.final_test_acc;
        }
        return std::pair{max_acc / c.trials, test_acc / c.trials};
    };

    if (axis == SweepAxis::VarianceGrid) {
        if (cfg.sweep_a.empty() || cfg.sweep_b.empty())
            throw ConfigError("variance sweep needs sweep.a and sweep.b lists");
        out << "a,b,max_train_acc,final_test_acc\n";
        for (double av : cfg.sweep_a)
            for (double bv : cfg.sweep_b) {
                ExperimentConfig c = cfg;
                c.a = av;
                c.b = bv;
                auto [tr, te] = run_one(c, data.train_norm, data.test_norm);
                out << format_g9(av) << "," << format_g9(bv) << "," << format_g9(tr)
                    << "," << format_g9(te) << "\n";
            }
    } else if (axis == SweepAxis::Depth) {
        if (cfg.sweep_depths.empty())
            throw ConfigError("depth sweep needs sweep.depths list");
        std::size_t width = cfg.hidden.empty() ? 512 : cfg.hidden.front();
        out << "depth,max_train_acc,final_test_acc\n";
        for (int depth : cfg.sweep_depths) {
            if (depth < 2) throw ConfigError("depth must be >= 2");
            ExperimentConfig c = cfg;
            c.hidden.assign(std::size_t(depth) - 1, width);
            auto [tr, te] = run_one(c, data.train_norm, data.test_norm);
            out << depth << "," << format_g9(tr) << "," << format_g9(te) << "\n";
        }
    } else {
        if (cfg.sweep_sizes.empty())
            throw ConfigError("datasize sweep needs sweep.sizes list");
        out << "n_samples,max_train_acc,final_test_acc\n";
        for (std::size_t n : cfg.sweep_sizes) {
            RngState sub_rng(cfg.seed ^ (n * 0x9e37ULL));
            Dataset sub_train = subset(data.train_norm, n, sub_rng);
            auto [tr, te] = run_one(cfg, sub_train, data.test_norm);
            out << n << "," << format_g9(tr) << "," << format_g9(te) << "\n";
        }
    }
}

static HessianOracle make_oracle(const ExperimentConfig &cfg, const ExperimentData &data,
                                 const NetworkParams &params) {
    // fixed, seeded sample of training examples; every probe sees the same H
    RngState rng(cfg.seed ^ 0x0eac1eULL);
    std::size_t n = std::min(cfg.oracle_batch, data.train_norm.size());
    Dataset batch = subset(data.train_norm, n, rng);
    return HessianOracle(params, batch.images, batch.labels);
}

void run_spectrum_experiment(const ExperimentConfig &cfg, const std::string &checkpoint) {
    validate_config(cfg);
    if (!fs::exists(checkpoint)) throw IoError("checkpoint does not exist: " + checkpoint);
    ExperimentData data = load_experiment_data(cfg);
    NetworkParams params = load_checkpoint(checkpoint);
    fs::create_directories(cfg.outdir);

    HessianOracle oracle = make_oracle(cfg, data, params);
    RngState rng(cfg.seed ^ 0x5bec7ULL);
    TopEigResult top = top_eigenvalue(oracle, rng);
    TraceEstimate trace = hessian_trace(oracle, RngState(cfg.seed ^ 0x7aceULL),
                                        cfg.trace_probes);
    SlqOptions slq;
    slq.n_probes = cfg.slq_probes;
    slq.lanczos_steps = cfg.slq_steps;
    double sigma_used = 0.0;
    auto density = esd_slq(oracle, RngState(cfg.seed ^ 0x51a9ULL), slq, sigma_used);

    {
        std::ofstream f(fs::path(cfg.outdir) / "spectrum_summary.csv");
        f << "lambda_max,converged,trace,trace_se,n_probes,sigma,n_v,q\n";
        f << format_g9(top.eigenvalue) << "," << (top.converged ? 1 : 0) << ","
          << format_g9(trace.trace) << "," << format_g9(trace.std_error) << ","
          << trace.n_probes << "," << format_g9(sigma_used) << "," << slq.n_probes
          << "," << slq.lanczos_steps << "\n";
    }
    {
        std::ofstream f(fs::path(cfg.outdir) / "density.csv");
        f << "t,rho\n";
        for (const auto &s : density)
            f << format_g9(s.t) << "," << format_g9(s.rho) << "\n";
    }

    // perturbed landscape along the top-2 Hessian directions, test loss
    TopEigResult second = top_eigenvalue_deflated(oracle, rng, {top});
    // re-orthonormalize against the first direction exactly
    double c = dot(second.eigenvector, top.eigenvector);
    for (std::size_t k = 0; k < second.eigenvector.size(); ++k)
        second.eigenvector[k] -= c * top.eigenvector[k];
    double n2 = norm2(second.eigenvector);
    for (auto &x : second.eigenvector) x /= n2;

    HessianOracle test_oracle(params, data.test_norm.images, data.test_norm.labels);
    std::vector<double> alphas(cfg.landscape_grid), betas(cfg.landscape_grid);
    for (int i = 0; i < cfg.landscape_grid; ++i) {
        double t = cfg.landscape_grid == 1
                       ? 0.0
                       : -cfg.landscape_range +
                             2.0 * cfg.landscape_range * i / (cfg.landscape_grid - 1);
        alphas[i] = betas[i] = t;
    }
    DenseMatrix grid = perturbed_landscape(test_oracle, top.eigenvector,
                                           second.eigenvector, alphas, betas);
    std::ofstream f(fs::path(cfg.outdir) / "landscape.csv");
    f << "alpha,beta,loss\n";
    for (std::size_t i = 0; i < grid.rows; ++i)
        for (std::size_t j = 0; j < grid.cols; ++j)
            f << format_g9(alphas[i]) << "," << format_g9(betas[j]) << ","
              << format_g9(grid(i, j)) << "\n";
}

void run_landscape_experiment(const ExperimentConfig &cfg) {
    ExperimentConfig c = cfg;
    c.save_snapshots = true;
    validate_config(c);
    ExperimentData data = load_experiment_data(c);
    fs::create_directories(c.outdir);

    TrainConfig tc = to_train_config(c, data.train_norm.images.cols,
                                     std::size_t(data.train_norm.n_classes), c.seed);
    tc.keep_snapshots = true;
    TrainResult res = train(tc, data.train_norm, data.test_norm);

    NetworkParams shape = res.params;
    auto loss_fn = [&](const std::vector<double> &flat) {
        NetworkParams p = unflatten_params(flat, shape);
        return evaluate(p, data.train_norm, 512).second;
    };
    PcaTrajectory traj = pca_trajectory(res.checkpoints.snapshots,
                                        flatten_params(res.params), loss_fn,
                                        cfg.landscape_grid);

    {
        std::ofstream f(fs::path(c.outdir) / "trajectory.csv");
        f << "step,pc1,pc2\n";
        for (std::size_t i = 0; i < traj.path.size(); ++i)
            f << i << "," << format_g9(traj.path[i].first) << ","
              << format_g9(traj.path[i].second) << "\n";
    }
    {
        std::ofstream f(fs::path(c.outdir) / "trajectory_surface.csv");
        f << "alpha,beta,loss\n";
        for (std::size_t i = 0; i < traj.loss_surface.rows; ++i)
            for (std::size_t j = 0; j < traj.loss_surface.cols; ++j)
                f << format_g9(traj.alpha_grid[i]) << "," << format_g9(traj.beta_grid[j])
                  << "," << format_g9(traj.loss_surface(i, j)) << "\n";
    }
    {
        std::ofstream f(fs::path(c.outdir) / "trajectory_summary.csv");
        f << "explained_pc1,explained_pc2,degenerate\n";
        f << format_g9(traj.explained1) << "," << format_g9(traj.explained2) << ","
          << (traj.degenerate ? 1 : 0) << "\n";
    }
}

void run_attack_experiment(const ExperimentConfig &cfg, const std::string &checkpoint,
                           AttackMethod method) {
    validate_config(cfg);
    if (!fs::exists(checkpoint)) throw IoError("checkpoint does not exist: " + checkpoint);
    ExperimentData data = load_experiment_data(cfg);
    NetworkParams params = load_checkpoint(checkpoint);
    fs::create_directories(cfg.outdir);

    RawPixelModel model{&params, &data.stats};
    AttackConfig acfg;
    acfg.clip_to_unit = cfg.attack_clip;
    if (cfg.attack_iters > 0) acfg.iterations = cfg.attack_iters;
    else acfg.iterations = method == AttackMethod::Pgd ? 20 : 10;
    acfg.step_size = cfg.attack_step;
    RngState rng(cfg.seed ^ 0xa77ac7ULL);
    auto curve = attack_curve(model, data.test_raw, method, cfg.epsilons, acfg, rng);

    std::ofstream f(fs::path(cfg.outdir) / "attack.csv");
    f << "epsilon,accuracy\n";
    for (const auto &[eps, acc] : curve)
        f << format_g9(eps) << "," << format_g9(acc) << "\n";
}

void run_corruption_experiment(const ExperimentConfig &cfg, const std::string &checkpoint,
                               int severity) {
    validate_config(cfg);
    if (!fs::exists(checkpoint)) throw IoError("checkpoint does not exist: " + checkpoint);
    if (cfg.cifar10c_dir.empty())
        throw ConfigError("corruption run needs data.cifar10c_dir");
    ExperimentData data = load_experiment_data(cfg);
    NetworkParams params = load_checkpoint(checkpoint);
    fs::create_directories(cfg.outdir);

    RawPixelModel model{&params, &data.stats};
    CorruptionResult result = corruption_eval(model, cfg.cifar10c_dir, severity);

    std::ofstream f(fs::path(cfg.outdir) / "corruption.csv");
    f << "corruption,severity,accuracy\n";
    for (const auto &[name, acc] : result.per_type)
        f << name << "," << severity << "," << format_g9(acc) << "\n";
    f << "mean," << severity << "," << format_g9(result.mean_accuracy) << "\n";
}

} // namespace alignnet
