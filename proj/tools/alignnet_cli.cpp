// Experiment runner. Subcommands map one-to-one to the experiment drivers:
//   train, sweep, spectrum, landscape, attack, corrupt
// Every flag can also be given through --config (key=value file with
// [section] headers); flags win over the file.

#include <iostream>

#include <CLI11.hpp>

#include "alignnet/experiment.hpp"

using namespace alignnet;

int main(int argc, char **argv) {
    CLI::App app{"MLP training engine with pluggable error-propagation rules"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "config file (key=value with [section]s)");
    app.add_option("--set", overrides,
                   "override a config entry, e.g. --set model.rule=ifa");

    auto *cmd_train = app.add_subcommand("train", "train per the configured rule");
    auto *cmd_sweep = app.add_subcommand("sweep", "trainability sweep");
    std::string axis = "variance-grid";
    cmd_sweep->add_option("--axis", axis, "variance-grid | depth | datasize");
    auto *cmd_spectrum =
        app.add_subcommand("spectrum", "Hessian top eigenvalue, trace, SLQ density");
    auto *cmd_landscape =
        app.add_subcommand("landscape", "PCA trajectory and loss surface");
    auto *cmd_attack = app.add_subcommand("attack", "adversarial attack curve");
    auto *cmd_corrupt = app.add_subcommand("corrupt", "corruption accuracy");

    std::string checkpoint, method = "fgsm";
    int severity = 1;
    cmd_spectrum->add_option("--checkpoint", checkpoint)->required();
    cmd_attack->add_option("--checkpoint", checkpoint)->required();
    cmd_attack->add_option("--method", method, "fgsm | bim | pgd");
    cmd_corrupt->add_option("--checkpoint", checkpoint)->required();
    cmd_corrupt->add_option("--severity", severity, "1..5");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                                   : parse_config_file(config_path);
        for (const auto &ov : overrides) {
            auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got: " + ov);
            apply_config_kv(cfg, ov.substr(0, eq), ov.substr(eq + 1));
        }

        if (cmd_train->parsed()) {
            auto summaries = run_train_experiment(cfg);
            for (const auto &s : summaries)
                std::cout << "trial seed=" << s.seed
                          << " max_train_acc=" << format_g9(s.max_train_acc)
                          << " final_test_acc=" << format_g9(s.final_test_acc) << "\n";
        } else if (cmd_sweep->parsed()) {
            SweepAxis ax;
            if (axis == "variance-grid") ax = SweepAxis::VarianceGrid;
            else if (axis == "depth") ax = SweepAxis::Depth;
            else if (axis == "datasize") ax = SweepAxis::DataSize;
            else throw ConfigError("unknown sweep axis: " + axis);
            run_sweep_experiment(cfg, ax);
        } else if (cmd_spectrum->parsed()) {
            run_spectrum_experiment(cfg, checkpoint);
        } else if (cmd_landscape->parsed()) {
            run_landscape_experiment(cfg);
        } else if (cmd_attack->parsed()) {
            AttackMethod m;
            if (method == "fgsm") m = AttackMethod::Fgsm;
            else if (method == "bim") m = AttackMethod::Bim;
            else if (method == "pgd") m = AttackMethod::Pgd;
            else throw ConfigError("unknown attack method: " + method);
            run_attack_experiment(cfg, checkpoint, m);
        } else if (cmd_corrupt->parsed()) {
            run_corruption_experiment(cfg, checkpoint, severity);
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError &e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const IoError &e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
