#include "insclr/experiment.hpp"

#include "insclr/analytics.hpp"
#include "insclr/binary_io.hpp"
#include "insclr/candidates.hpp"
#include "insclr/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>

namespace insclr {

using json = nlohmann::json;
namespace fs = std::filesystem;

RunConfig with_seed(RunConfig cfg, std::uint64_t seed) {
    const auto defaults = default_run_config(seed);
    cfg.seed = seed;
    cfg.dataset.seed = defaults.dataset.seed;
    cfg.encoder.seed = defaults.encoder.seed;
    cfg.trainer.seed = defaults.trainer.seed;
    cfg.eval.seed = defaults.eval.seed;
    return cfg;
}

Dataset load_or_generate_dataset(const RunConfig& cfg) {
    if (cfg.feature_file) {
        return load_feature_file(*cfg.feature_file, cfg.dataset);
    }
    return generate_dataset(cfg.dataset);
}

EncoderState initial_encoder(const RunConfig& cfg, const Dataset& dataset) {
    if (cfg.warm_start) {
        auto state = load_checkpoint(*cfg.warm_start);
        if (state.config.input_dim != dataset.config().input_dim) {
            throw DimensionMismatch(fmt::format("warm start expects inputs of {}, dataset has {}",
                                                state.config.input_dim, dataset.config().input_dim));
        }
        return state;
    }
    EncoderConfig ec = cfg.encoder;
    ec.input_dim = dataset.config().input_dim;
    return init_encoder(ec);
}

RunSummary run_experiment(const RunConfig& cfg) {
    const auto dataset = load_or_generate_dataset(cfg);
    auto state = initial_encoder(cfg, dataset);
    RunSummary summary;
    summary.initial_map = evaluate_map(state, dataset, cfg.eval).map;

    TrainOptions options;
    if (cfg.analytics) options.labels = &GroundTruth::labels(dataset);
    auto result = train(dataset, std::move(state), cfg.trainer, cfg.adam, cfg.pool, options);
    summary.final_report = evaluate_map(result.state, dataset, cfg.eval);
    summary.final_map = summary.final_report.map;
    summary.history = std::move(result.history);
    summary.final_state = std::move(result.state);
    return summary;
}

std::vector<AblationVariant> mining_ablation_variants(const RunConfig& base) {
    const auto ours = base.trainer.batch_mining.strategy == BatchStrategy::nn ? BatchStrategy::unaugmented
                                                                                : base.trainer.batch_mining.strategy;
    const auto iters = std::max<std::size_t>(base.trainer.memory_mining.iterations, 1);
    return {
        {"A", BatchStrategy::nn, NegativeSource::none, 0, QuerySetMode::full, "nn", "-"},
        {"B", BatchStrategy::nn, NegativeSource::random_memory, 0, QuerySetMode::full, "nn", "neg."},
        {"C", ours, NegativeSource::random_memory, 0, QuerySetMode::full, "ours", "neg."},
        {"D-anchor", ours, NegativeSource::candidate_pool, iters, QuerySetMode::anchor_only, "ours", "anc."},
        {"D", ours, NegativeSource::candidate_pool, iters, QuerySetMode::full, "ours", "ours"},
    };
}

RunConfig apply_variant(RunConfig cfg, const AblationVariant& v) {
    cfg.trainer.batch_mining.strategy = v.batch;
    cfg.trainer.negative_source = v.negatives;
    cfg.trainer.memory_mining.iterations = v.memory_iterations;
    cfg.trainer.memory_mining.mode = v.query_mode;
    return cfg;
}

namespace {

std::optional<double> run_mean(const TrainingHistory& h, std::optional<double> StepRecord::*field) {
    std::vector<std::optional<double>> values;
    for (const auto& r : h) values.push_back(r.*field);
    return mean_present(values);
}

std::string opt_cell(const std::optional<double>& v) {
    return v ? fmt::format("{:.6f}", *v) : std::string();
}

} // namespace

std::vector<AblationRow> run_ablation(const RunConfig& cfg) {
    std::vector<AblationRow> rows;
    for (const auto& variant : mining_ablation_variants(cfg)) {
        AblationRow row;
        row.variant = variant;
        double init_sum = 0.0;
        double final_sum = 0.0;
        for (auto seed : cfg.ablate.seeds) {
            const auto run_cfg = apply_variant(with_seed(cfg, seed), variant);
            const auto summary = run_experiment(run_cfg);
            row.seeds.push_back(seed);
            row.final_maps.push_back(summary.final_map);
            row.batch_precisions.push_back(run_mean(summary.history, &StepRecord::batch_precision));
            row.mem_precisions.push_back(run_mean(summary.history, &StepRecord::mem_precision));
            init_sum += summary.initial_map;
            final_sum += summary.final_map;
        }
        const auto n = static_cast<double>(cfg.ablate.seeds.size());
        row.initial_map_mean = init_sum / n;
        row.final_map_mean = final_sum / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "variant,batch,memory,seeds,initial_map,final_map,final_map_per_seed,batch_precision,mem_precision\n";
    for (const auto& r : rows) {
        std::vector<std::string> per_seed;
        for (double m : r.final_maps) per_seed.push_back(fmt::format("{:.6f}", m));
        out << fmt::format("{},{},{},{},{:.6f},{:.6f},{},{},{}\n", r.variant.name, r.variant.batch_label,
                           r.variant.memory_label, fmt::join(r.seeds, " "), r.initial_map_mean, r.final_map_mean,
                           fmt::join(per_seed, " "), opt_cell(mean_present(r.batch_precisions)),
                           opt_cell(mean_present(r.mem_precisions)));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void write_metrics_json(const EvalReport& report, const RunConfig& cfg, const fs::path& path,
                        std::optional<double> initial_map) {
    json j;
    j["map"] = report.map;
    j["num_queries"] = report.num_queries;
    j["chance_level"] = report.chance_level;
    json per_class = json::object();
    for (const auto& [cls, ap] : report.per_class_ap) per_class[std::to_string(cls)] = ap;
    j["per_class_ap"] = per_class;
    if (initial_map) j["initial_map"] = *initial_map;
    j["config"] = {{"seed", cfg.seed},
                   {"num_views", cfg.eval.num_views},
                   {"query_fraction", cfg.eval.query_fraction},
                   {"eval_seed", cfg.eval.seed}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

class RunDirectory {
public:
    RunDirectory(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {
        fs::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir / "config.json");
        out << config_echo(cfg);
        if (!out) throw IoError("cannot write config echo in " + cfg.output_dir.string());
    }

    fs::path file(const std::string& name) const { return cfg_.output_dir / name; }

    void record(const std::string& name) { artifacts_[name] = fmt::format("{:016x}", binio::file_checksum(file(name))); }

    void note(const std::string& key, json value) { extra_[key] = std::move(value); }

    void finish() {
        json manifest;
        manifest["command"] = command_;
        manifest["seed"] = cfg_.seed;
        manifest["artifacts"] = artifacts_;
        for (const auto& [k, v] : extra_.items()) manifest[k] = v;
        std::ofstream out(file(fmt::format("manifest_{}.json", command_)));
        out << manifest.dump(2) << "\n";
        if (!out) throw IoError("cannot write manifest in " + cfg_.output_dir.string());
    }

private:
    const RunConfig& cfg_;
    std::string command_;
    json artifacts_ = json::object();
    json extra_ = json::object();
};

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

void cmd_gen_data(const RunConfig& cfg, RunDirectory& dir, std::ostream& log) {
    const auto dataset = load_or_generate_dataset(cfg);
    write_dataset(dataset, dir.file("dataset.bin"));
    dir.record("dataset.bin");
    dir.note("dataset_checksum", hex(dataset.checksum()));
    log << fmt::format("wrote {} images to {}\n", dataset.size(), dir.file("dataset.bin").string());
}

void cmd_build_pool(const RunConfig& cfg, RunDirectory& dir, std::ostream& log) {
    const auto dataset = load_or_generate_dataset(cfg);
    const auto state = initial_encoder(cfg, dataset);
    const auto pool = build_candidate_pool(encode_clean_views(state, dataset), cfg.pool, state.checksum());
    write_pool(pool, dir.file("pool.bin"));
    dir.record("pool.bin");
    dir.note("dataset_checksum", hex(dataset.checksum()));
    dir.note("encoder_checksum", hex(state.checksum()));
    log << fmt::format("built pool of {} neighbours for {} images\n", pool.pool_size(), pool.size());
}

void cmd_train(const RunConfig& cfg, RunDirectory& dir, std::ostream& log) {
    const auto dataset = load_or_generate_dataset(cfg);
    auto state = initial_encoder(cfg, dataset);
    const double initial_map = evaluate_map(state, dataset, cfg.eval).map;
    dir.note("dataset_checksum", hex(dataset.checksum()));
    dir.note("initial_encoder_checksum", hex(state.checksum()));

    TrainOptions options;
    if (cfg.analytics) options.labels = &GroundTruth::labels(dataset);
    options.checkpoint_dir = cfg.output_dir;
    auto result = train(dataset, std::move(state), cfg.trainer, cfg.adam, cfg.pool, options);
    for (std::size_t r = 1; r <= cfg.trainer.rounds && cfg.trainer.steps_per_round > 0; ++r) {
        dir.record(fmt::format("round_{}.ckpt", r));
        dir.record(fmt::format("pool_round_{}.bin", r));
    }
    save_checkpoint(result.state, dir.file("final.ckpt"));
    dir.record("final.ckpt");
    write_history_csv(result.history, dir.file("history.csv"));
    dir.record("history.csv");
    if (cfg.analytics && !result.history.empty()) {
        export_curves(result.history, dir.file("curves.csv"), cfg.curve_window);
        dir.record("curves.csv");
    }
    const auto report = evaluate_map(result.state, dataset, cfg.eval);
    write_metrics_json(report, cfg, dir.file("metrics.json"), initial_map);
    dir.record("metrics.json");
    dir.note("final_encoder_checksum", hex(result.state.checksum()));
    log << fmt::format("trained {} steps; mAP {:.4f} -> {:.4f}\n", result.history.size(), initial_map, report.map);
}

void cmd_eval(const RunConfig& cfg, RunDirectory& dir, std::ostream& log) {
    const auto dataset = load_or_generate_dataset(cfg);
    const auto trained = dir.file("final.ckpt");
    const bool have_trained = fs::exists(trained);
    const auto state = have_trained ? load_checkpoint(trained) : initial_encoder(cfg, dataset);
    const auto report = evaluate_map(state, dataset, cfg.eval);
    write_metrics_json(report, cfg, dir.file("metrics.json"));
    dir.record("metrics.json");
    if (cfg.per_query_csv) {
        write_rankings_csv(report, dir.file("rankings.csv"));
        dir.record("rankings.csv");
    }
    dir.note("encoder", have_trained ? "final.ckpt" : "initial");
    dir.note("encoder_checksum", hex(state.checksum()));
    log << fmt::format("mAP {:.4f} over {} queries ({} encoder)\n", report.map, report.num_queries,
                       have_trained ? "trained" : "initial");
}

void cmd_ablate(const RunConfig& cfg, RunDirectory& dir, std::ostream& log) {
    const auto rows = run_ablation(cfg);
    write_ablation_csv(rows, dir.file("ablation.csv"));
    dir.record("ablation.csv");
    log << fmt::format("{:<9} {:<6} {:<6} {:>10}\n", "variant", "batch", "memory", "final mAP");
    for (const auto& r : rows) {
        log << fmt::format("{:<9} {:<6} {:<6} {:>10.4f}\n", r.variant.name, r.variant.batch_label,
                           r.variant.memory_label, r.final_map_mean);
    }
}

} // namespace

int run_command(const std::string& subcommand, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        RunDirectory dir(cfg, subcommand);
        if (subcommand == "gen-data") {
            cmd_gen_data(cfg, dir, log);
        } else if (subcommand == "build-pool") {
            cmd_build_pool(cfg, dir, log);
        } else if (subcommand == "train") {
            cmd_train(cfg, dir, log);
        } else if (subcommand == "eval") {
            cmd_eval(cfg, dir, log);
        } else if (subcommand == "ablate") {
            cmd_ablate(cfg, dir, log);
        } else {
            err << "error: unknown subcommand '" << subcommand << "'\n";
            return 2;
        }
        dir.finish();
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    } catch (const fs::filesystem_error& e) {
        err << "error: IoError: " << e.what() << "\n";
    }
    return 1;
}

} // namespace insclr
