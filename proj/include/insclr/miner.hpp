#ifndef INSCLR_MINER_HPP
#define INSCLR_MINER_HPP

#include "insclr/membank.hpp"
#include "insclr/numerics.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * @file miner.hpp
 *
 * @brief Pseudo-positive mining: threshold-based selection inside a training
 * tuple, and iterative query-set expansion over the anchor's candidate pool
 * using the clean memory bank.
 *
 * All thresholds are strict (a value equal to the threshold is rejected).
 */

namespace insclr {

enum class BatchStrategy {
    nn,          ///< every neighbour in the tuple is a positive
    augmented,   ///< threshold on augmented-view similarity
    unaugmented, ///< threshold on clean-view similarity
    relative,    ///< threshold on clean similarity divided by the tuple maximum
    multiscale,  ///< threshold on similarity of multi-view averaged clean features
};

struct BatchMiningConfig {
    BatchStrategy strategy = BatchStrategy::unaugmented;
    double threshold = 0.65;
    std::size_t n_b = 3;

    void validate() const;
};

/// Features of one tuple. Index 0 is the anchor, then the neighbours in tuple order.
/// Views that the chosen strategy does not need may be left empty.
struct TupleViews {
    std::vector<UnitVector> clean;
    std::vector<UnitVector> augmented;
    std::vector<UnitVector> multiscale;
};

struct BatchSelection {
    std::vector<ImageId> selected;
    std::vector<ImageId> rejected;
};

/// Throws `MissingView` when the strategy's view is absent or short.
BatchSelection select_batch_positives(ImageId anchor, std::span<const ImageId> neighbor_ids, const TupleViews& views,
                                      const BatchMiningConfig& cfg);

enum class Aggregation { avg, max };
enum class SelectionRule { topk, threshold };
enum class QuerySetMode { full, anchor_only };

struct MemoryMiningConfig {
    Aggregation aggregation = Aggregation::avg;
    SelectionRule selection = SelectionRule::topk;
    std::size_t k = 5;
    double threshold = 0.6;
    /// Per-query similarities not above this count as 0 before aggregation.
    std::optional<double> sparsify_threshold;
    /// 0 disables memory mining.
    std::size_t iterations = 4;
    QuerySetMode mode = QuerySetMode::full;

    void validate() const;
};

/// Anchor first, then accepted positives. Features are clean (unaugmented).
class QuerySet {
public:
    QuerySet(ImageId anchor, UnitVector anchor_feature);

    /// Throws `InconsistentMining` on a duplicate id.
    void add(ImageId id, UnitVector feature);

    ImageId anchor() const { return ids_.front(); }
    std::size_t size() const { return ids_.size(); }
    bool contains(ImageId id) const;
    const std::vector<ImageId>& member_ids() const { return ids_; }
    const std::vector<UnitVector>& member_features() const { return features_; }

private:
    std::vector<ImageId> ids_;
    std::vector<UnitVector> features_;
};

/**
 * Set-level similarity of a candidate: per-member cosines, optionally zeroed
 * when not above `sparsify_threshold`, then averaged (zeros included) or maxed.
 */
double aggregate_set_similarity(const UnitVector& candidate, std::span<const UnitVector> query_features,
                                Aggregation aggregation, std::optional<double> sparsify_threshold);

double aggregate_set_similarity(const UnitVector& candidate, const QuerySet& query, Aggregation aggregation,
                                std::optional<double> sparsify_threshold);

struct MemoryMiningOutcome {
    std::vector<ImageId> positive_ids;   // in mining order
    std::vector<ImageId> negative_ids;   // remaining pool order
    QuerySet final_query;
};

/**
 * Iteratively expand `query` with candidates from `pool_ids` scored against
 * their clean-bank features. Ids in `exclude_ids` (the current mini-batch) are
 * dropped from the pool first. In anchor-only mode every pass scores against
 * the anchor alone, but selections still accumulate.
 */
MemoryMiningOutcome mine_memory_positives(const QuerySet& query, std::span<const ImageId> pool_ids,
                                          const MemoryBank& clean_bank, const MemoryMiningConfig& cfg,
                                          std::span<const ImageId> exclude_ids);

struct MiningResult {
    std::vector<ImageId> batch_positive_ids;
    std::vector<ImageId> batch_negative_ids;
    std::vector<ImageId> memory_positive_ids;
    std::vector<ImageId> memory_negative_ids;

    /// Throws `InconsistentMining` if any two lists share an id.
    void check_disjoint() const;
};

std::string to_string(BatchStrategy s);
std::string to_string(Aggregation a);
std::string to_string(SelectionRule r);
std::string to_string(QuerySetMode m);
BatchStrategy batch_strategy_from_string(const std::string& s);
Aggregation aggregation_from_string(const std::string& s);
SelectionRule selection_rule_from_string(const std::string& s);
QuerySetMode query_set_mode_from_string(const std::string& s);

} // namespace insclr

#endif
