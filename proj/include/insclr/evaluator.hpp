#ifndef INSCLR_EVALUATOR_HPP
#define INSCLR_EVALUATOR_HPP

#include "insclr/encoder.hpp"
#include "insclr/numerics.hpp"
#include "insclr/synthdata.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

namespace insclr {

struct EvalConfig {
    std::size_t num_views = 3;
    double query_fraction = 0.1;
    std::uint64_t seed = 0;
    /// Keep full gallery rankings in the report (for the per-query CSV).
    bool keep_rankings = false;

    void validate() const;
};

/// Per-view clean encodings averaged, then re-normalized.
UnitVector multiview_feature(const EncoderState& state, const ImageRecord& record, const DatasetConfig& config,
                             std::size_t num_views);

/**
 * AP = (1 / num_relevant) * sum_k precision@k * rel(k) over a ranked list.
 * Throws `InvalidInput` when num_relevant is 0 or the list holds more hits than that.
 */
double average_precision(std::span<const std::uint8_t> ranked_relevance, std::size_t num_relevant);

struct QueryResult {
    ImageId query = 0;
    int class_id = -1;
    double ap = 0.0;
    std::vector<ImageId> ranking;
};

struct EvalReport {
    double map = 0.0;
    std::size_t num_queries = 0;
    std::map<int, double> per_class_ap;
    std::vector<QueryResult> queries;
    /// Mean over queries of (relevant gallery items / gallery size).
    double chance_level = 0.0;
};

struct QuerySplit {
    std::vector<ImageId> queries;
    std::vector<ImageId> gallery;
};

/// Seeded per-class split: max(1, round(fraction * n)) queries per class, at least one gallery item.
QuerySplit split_queries(std::span<const int> labels, double query_fraction, std::uint64_t seed);

/// mAP of precomputed features; gallery ranked by cosine, ties by ascending id.
EvalReport evaluate_features(std::span<const UnitVector> features, std::span<const int> labels,
                             const EvalConfig& cfg);

/// Multi-view features of every record, then `evaluate_features` against the hidden labels.
EvalReport evaluate_map(const EncoderState& state, const Dataset& dataset, const EvalConfig& cfg);

void write_rankings_csv(const EvalReport& report, const std::filesystem::path& path);

} // namespace insclr

#endif
