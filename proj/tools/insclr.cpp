// insclr: command-line driver for dataset generation, pool building,
// training, evaluation and the mining ablation grid.

#include "insclr/config.hpp"
#include "insclr/error.hpp"
#include "insclr/experiment.hpp"

#include <CLI11.hpp>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Instance-level contrastive learning with pseudo-positive mining"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen-data", "Generate the synthetic dataset and write dataset.bin"},
        {"build-pool", "Build the candidate pool with the initial encoder and write pool.bin"},
        {"train", "Train the encoder; writes checkpoints, history.csv, curves.csv and metrics.json"},
        {"eval", "Evaluate final.ckpt (or the initial encoder) and write metrics.json"},
        {"ablate", "Run the mining ablation grid and write ablation.csv"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "Config file (JSON, comments allowed)");
        sub->add_option("-s,--set", overrides, "Override a config key, e.g. --set trainer.steps_per_round=50");
        sub->add_option("--seed", seed, "Top-level seed");
        sub->add_option("-o,--output-dir", output_dir, "Run directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    insclr::RunConfig cfg;
    try {
        cfg = config_path.empty() ? insclr::parse_config_text("{}", overrides, seed)
                                  : insclr::parse_config(config_path, overrides, seed);
        if (output_dir) cfg.output_dir = *output_dir;
    } catch (const insclr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return insclr::run_command(subcommand, cfg, std::cout, std::cerr);
}
