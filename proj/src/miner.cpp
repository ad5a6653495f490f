#include "insclr/miner.hpp"

#include "insclr/error.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <unordered_set>

namespace insclr {

void BatchMiningConfig::validate() const {
    if (n_b < 1) {
        throw InvalidConfig("n_b must be >= 1");
    }
}

void MemoryMiningConfig::validate() const {
    if (selection == SelectionRule::topk && k < 1) {
        throw InvalidConfig("k must be >= 1 for topk selection");
    }
}

namespace {

const std::vector<UnitVector>& view_for(const TupleViews& views, BatchStrategy strategy) {
    switch (strategy) {
    case BatchStrategy::augmented:
        return views.augmented;
    case BatchStrategy::multiscale:
        return views.multiscale;
    default:
        return views.clean;
    }
}

} // namespace

BatchSelection select_batch_positives(ImageId anchor, std::span<const ImageId> neighbor_ids, const TupleViews& views,
                                      const BatchMiningConfig& cfg) {
    (void)anchor;
    BatchSelection out;
    if (cfg.strategy == BatchStrategy::nn) {
        out.selected.assign(neighbor_ids.begin(), neighbor_ids.end());
        return out;
    }

    const auto& feats = view_for(views, cfg.strategy);
    if (feats.size() != neighbor_ids.size() + 1) {
        throw MissingView(fmt::format("strategy {} needs {} features, got {}", to_string(cfg.strategy),
                                      neighbor_ids.size() + 1, feats.size()));
    }

    std::vector<double> sims(neighbor_ids.size());
    for (std::size_t k = 0; k < neighbor_ids.size(); ++k) {
        sims[k] = cosine(feats[0], feats[k + 1]);
    }
    if (cfg.strategy == BatchStrategy::relative) {
        const double top = sims.empty() ? 0.0 : *std::max_element(sims.begin(), sims.end());
        for (double& s : sims) {
            // A tuple with no positively similar neighbour has nothing to scale by.
            s = top > 0.0 ? s / top : -1.0;
        }
    }
    for (std::size_t k = 0; k < neighbor_ids.size(); ++k) {
        (sims[k] > cfg.threshold ? out.selected : out.rejected).push_back(neighbor_ids[k]);
    }
    return out;
}

QuerySet::QuerySet(ImageId anchor, UnitVector anchor_feature) {
    ids_.push_back(anchor);
    features_.push_back(std::move(anchor_feature));
}

void QuerySet::add(ImageId id, UnitVector feature) {
    if (contains(id)) {
        throw InconsistentMining(fmt::format("image {} already in query set", id));
    }
    if (feature.dim() != features_.front().dim()) {
        throw DimensionMismatch("query member dimension differs from anchor");
    }
    ids_.push_back(id);
    features_.push_back(std::move(feature));
}

bool QuerySet::contains(ImageId id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

double aggregate_set_similarity(const UnitVector& candidate, std::span<const UnitVector> query_features,
                                Aggregation aggregation, std::optional<double> sparsify_threshold) {
    if (query_features.empty()) {
        throw EmptyQuerySet("cannot aggregate over an empty query set");
    }
    double sum = 0.0;
    double best = 0.0;
    bool first = true;
    for (const auto& q : query_features) {
        double s = cosine(candidate, q);
        if (sparsify_threshold && !(s > *sparsify_threshold)) {
            s = 0.0;
        }
        sum += s;
        best = first ? s : std::max(best, s);
        first = false;
    }
    return aggregation == Aggregation::avg ? sum / static_cast<double>(query_features.size()) : best;
}

double aggregate_set_similarity(const UnitVector& candidate, const QuerySet& query, Aggregation aggregation,
                                std::optional<double> sparsify_threshold) {
    return aggregate_set_similarity(candidate, query.member_features(), aggregation, sparsify_threshold);
}

MemoryMiningOutcome mine_memory_positives(const QuerySet& query, std::span<const ImageId> pool_ids,
                                          const MemoryBank& clean_bank, const MemoryMiningConfig& cfg,
                                          std::span<const ImageId> exclude_ids) {
    cfg.validate();
    if (query.size() == 0) {
        throw EmptyQuerySet("memory mining without an anchor");
    }

    std::unordered_set<ImageId> skip(exclude_ids.begin(), exclude_ids.end());
    for (auto id : query.member_ids()) {
        skip.insert(id);
    }
    std::vector<ImageId> candidates;
    candidates.reserve(pool_ids.size());
    for (auto id : pool_ids) {
        if (skip.insert(id).second) {
            candidates.push_back(id);
        }
    }

    MemoryMiningOutcome out{{}, {}, query};
    const std::vector<UnitVector> anchor_only{query.member_features().front()};
    std::vector<char> taken(candidates.size(), 0);

    struct Scored {
        double score;
        ImageId id;
        std::size_t slot;
    };
    std::vector<Scored> scored;

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const auto& scoring =
            cfg.mode == QuerySetMode::full ? out.final_query.member_features() : anchor_only;
        scored.clear();
        for (std::size_t slot = 0; slot < candidates.size(); ++slot) {
            if (!taken[slot]) {
                const double s = aggregate_set_similarity(clean_bank.at(candidates[slot]), scoring,
                                                          cfg.aggregation, cfg.sparsify_threshold);
                scored.push_back({s, candidates[slot], slot});
            }
        }
        if (scored.empty()) {
            break;
        }

        std::vector<Scored> picked;
        if (cfg.selection == SelectionRule::topk) {
            const std::size_t take = std::min(cfg.k, scored.size());
            std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                              [](const Scored& a, const Scored& b) {
                                  return a.score != b.score ? a.score > b.score : a.id < b.id;
                              });
            picked.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take));
        } else {
            for (const auto& s : scored) {
                if (s.score > cfg.threshold) {
                    picked.push_back(s);
                }
            }
        }
        if (picked.empty()) {
            break;
        }
        // Members join only after the whole pass is scored.
        for (const auto& p : picked) {
            taken[p.slot] = 1;
            out.positive_ids.push_back(p.id);
            out.final_query.add(p.id, clean_bank.at(p.id));
        }
    }

    for (std::size_t slot = 0; slot < candidates.size(); ++slot) {
        if (!taken[slot]) {
            out.negative_ids.push_back(candidates[slot]);
        }
    }
    return out;
}

void MiningResult::check_disjoint() const {
    std::unordered_set<ImageId> seen;
    for (const auto* list : {&batch_positive_ids, &batch_negative_ids, &memory_positive_ids, &memory_negative_ids}) {
        for (auto id : *list) {
            if (!seen.insert(id).second) {
                throw InconsistentMining(fmt::format("image {} appears in more than one mining list", id));
            }
        }
    }
}

std::string to_string(BatchStrategy s) {
    switch (s) {
    case BatchStrategy::nn: return "nn";
    case BatchStrategy::augmented: return "augmented";
    case BatchStrategy::unaugmented: return "unaugmented";
    case BatchStrategy::relative: return "relative";
    case BatchStrategy::multiscale: return "multiscale";
    }
    return "?";
}

std::string to_string(Aggregation a) { return a == Aggregation::avg ? "avg" : "max"; }
std::string to_string(SelectionRule r) { return r == SelectionRule::topk ? "topk" : "threshold"; }
std::string to_string(QuerySetMode m) { return m == QuerySetMode::full ? "full" : "anchor_only"; }

BatchStrategy batch_strategy_from_string(const std::string& s) {
    for (auto v : {BatchStrategy::nn, BatchStrategy::augmented, BatchStrategy::unaugmented, BatchStrategy::relative,
                   BatchStrategy::multiscale}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidConfig("unknown batch strategy '" + s + "'");
}

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "avg") return Aggregation::avg;
    if (s == "max") return Aggregation::max;
    throw InvalidConfig("unknown aggregation '" + s + "'");
}

SelectionRule selection_rule_from_string(const std::string& s) {
    if (s == "topk") return SelectionRule::topk;
    if (s == "threshold") return SelectionRule::threshold;
    throw InvalidConfig("unknown selection rule '" + s + "'");
}

QuerySetMode query_set_mode_from_string(const std::string& s) {
    if (s == "full") return QuerySetMode::full;
    if (s == "anchor_only") return QuerySetMode::anchor_only;
    throw InvalidConfig("unknown query set mode '" + s + "'");
}

} // namespace insclr
