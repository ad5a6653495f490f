#ifndef INSCLR_LOSS_HPP
#define INSCLR_LOSS_HPP

#include "insclr/membank.hpp"
#include "insclr/miner.hpp"
#include "insclr/numerics.hpp"

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace insclr {

inline constexpr double kDefaultNegativeGate = 0.4;

enum class PairLabel { positive, negative };

/// Where negatives beyond the mini-batch come from.
enum class NegativeSource {
    none,           ///< mini-batch only
    random_memory,  ///< seeded sample of the augmented bank
    candidate_pool, ///< the anchor's pool minus mined positives
};

/**
 * A feature taking part in the loss. `raw` holds the pre-normalization
 * vector and is non-empty exactly when gradients flow to this feature
 * (i.e. it came out of this step's augmented forward pass).
 */
struct LossFeature {
    ImageId id = 0;
    UnitVector feature;
    RawVector raw;

    bool grad_enabled() const { return !raw.empty(); }
};

struct CollectionEntry {
    LossFeature item;
    PairLabel label = PairLabel::negative;
};

struct LossContext {
    std::vector<LossFeature> query_members;
    std::vector<CollectionEntry> collection;
    double gate = kDefaultNegativeGate;

    /// Every query member must sit in the collection with a positive label, ids unique.
    void validate() const;
};

struct PairTerm {
    ImageId query_id;
    ImageId other_id;
    double similarity;
    PairLabel label;
    bool counted; ///< false for negatives at or below the gate
};

struct LossReport {
    double value = 0.0;
    std::vector<PairTerm> terms; ///< filled only when auditing
    std::map<ImageId, RawVector> grads;
};

/**
 * Gated contrastive loss of one tuple:
 *   L = 1/N_p sum_{i in query} [ sum_{neg j} S_ij 1[S_ij > gate] - sum_{pos j != i} S_ij ].
 * Gradients are returned for every grad-enabled feature, keyed by id.
 */
LossReport contrastive_loss(const LossContext& ctx, bool audit = false);

/// Per-step outputs for the images of a mini-batch.
struct BatchFeatures {
    std::vector<ImageId> ids;
    std::vector<RawVector> augmented_raw;
    std::vector<UnitVector> augmented;
    std::vector<UnitVector> clean;
    std::unordered_map<ImageId, std::size_t> index;

    void add(ImageId id, RawVector aug_raw, UnitVector clean_feature);
    bool contains(ImageId id) const { return index.count(id) != 0; }
    LossFeature loss_feature(ImageId id) const;
};

/**
 * Positives are the anchor, its batch-selected neighbours and memory-mined
 * images; every other mini-batch image is a negative, plus the extra
 * negatives named by `source`. Batch images use their grad-carrying
 * augmented outputs, everything else comes from the augmented bank.
 */
LossContext build_loss_context(ImageId anchor, const MiningResult& mining, const BatchFeatures& batch,
                               std::span<const ImageId> pool_ids, const MemoryBank& augmented_bank,
                               NegativeSource source, std::span<const ImageId> random_negative_ids,
                               double gate = kDefaultNegativeGate);

std::string to_string(NegativeSource s);
NegativeSource negative_source_from_string(const std::string& s);

} // namespace insclr

#endif
