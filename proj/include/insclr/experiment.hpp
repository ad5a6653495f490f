#ifndef INSCLR_EXPERIMENT_HPP
#define INSCLR_EXPERIMENT_HPP

#include "insclr/config.hpp"
#include "insclr/evaluator.hpp"
#include "insclr/history.hpp"
#include "insclr/synthdata.hpp"
#include "insclr/trainer.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

/**
 * @file experiment.hpp
 *
 * @brief End-to-end runs driven by a RunConfig: dataset loading, training,
 * evaluation, the mining-ablation grid, and the CLI subcommands that write
 * their artifacts into a run directory.
 */

namespace insclr {

/// Reseed every section of `cfg` from `seed`.
RunConfig with_seed(RunConfig cfg, std::uint64_t seed);

/// Generated from the dataset section, or loaded from the feature file when one is configured.
Dataset load_or_generate_dataset(const RunConfig& cfg);

/// Fresh encoder sized for `dataset`, or the warm-start checkpoint when configured.
EncoderState initial_encoder(const RunConfig& cfg, const Dataset& dataset);

struct RunSummary {
    double initial_map = 0.0;
    double final_map = 0.0;
    EvalReport final_report;
    TrainingHistory history;
    EncoderState final_state;
};

/// Generate, evaluate, train and evaluate again, all in memory.
RunSummary run_experiment(const RunConfig& cfg);

/// One row of the mining ablation grid.
struct AblationVariant {
    std::string name;
    BatchStrategy batch = BatchStrategy::nn;
    NegativeSource negatives = NegativeSource::none;
    std::size_t memory_iterations = 0;
    QuerySetMode query_mode = QuerySetMode::full;
    std::string batch_label;
    std::string memory_label;
};

/**
 * A (nn, no memory), B (nn, random memory negatives), C (threshold selection,
 * random memory negatives), D-anchor (memory mining from the anchor alone,
 * pool negatives), D (query-set memory mining, pool negatives). C, D-anchor and
 * D use the batch strategy configured in `base`.
 */
std::vector<AblationVariant> mining_ablation_variants(const RunConfig& base);

RunConfig apply_variant(RunConfig cfg, const AblationVariant& variant);

struct AblationRow {
    AblationVariant variant;
    std::vector<std::uint64_t> seeds;
    std::vector<double> final_maps;
    std::vector<std::optional<double>> batch_precisions; ///< mean over the run, per seed
    std::vector<std::optional<double>> mem_precisions;
    double initial_map_mean = 0.0;
    double final_map_mean = 0.0;
};

/// Run every variant for every seed in cfg.ablate.seeds.
std::vector<AblationRow> run_ablation(const RunConfig& cfg);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

/// Writes metrics.json: {map, num_queries, per_class_ap, chance_level, config}.
void write_metrics_json(const EvalReport& report, const RunConfig& cfg, const std::filesystem::path& path,
                        std::optional<double> initial_map = std::nullopt);

/**
 * Execute one CLI subcommand (gen-data, build-pool, train, eval, ablate)
 * against cfg.output_dir. Returns 0 when every artifact was written, nonzero
 * otherwise; diagnostics go to `err`.
 */
int run_command(const std::string& subcommand, const RunConfig& cfg, std::ostream& log, std::ostream& err);

} // namespace insclr

#endif
