#include "insclr/loss.hpp"

#include "insclr/error.hpp"

#include <fmt/format.h>
#include <unordered_set>

namespace insclr {

void LossContext::validate() const {
    if (query_members.empty()) {
        throw EmptyQuerySet("loss context has no query members");
    }
    std::unordered_map<ImageId, PairLabel> labels;
    for (const auto& e : collection) {
        if (!labels.emplace(e.item.id, e.label).second) {
            throw InconsistentMining(fmt::format("image {} listed twice in the collection", e.item.id));
        }
    }
    for (const auto& q : query_members) {
        auto it = labels.find(q.id);
        if (it == labels.end() || it->second != PairLabel::positive) {
            throw InconsistentMining(fmt::format("query member {} missing from positives", q.id));
        }
    }
}

LossReport contrastive_loss(const LossContext& ctx, bool audit) {
    ctx.validate();
    LossReport report;
    for (const auto& q : ctx.query_members) {
        if (q.grad_enabled()) report.grads.emplace(q.id, RawVector(q.raw.size(), 0.0));
    }
    for (const auto& e : ctx.collection) {
        if (e.item.grad_enabled()) report.grads.emplace(e.item.id, RawVector(e.item.raw.size(), 0.0));
    }

    const double scale = 1.0 / static_cast<double>(ctx.query_members.size());
    double total = 0.0;
    for (const auto& q : ctx.query_members) {
        double row = 0.0;
        for (const auto& e : ctx.collection) {
            if (e.item.id == q.id) {
                continue;
            }
            const double s = cosine(q.feature, e.item.feature);
            double coef = 0.0;
            if (e.label == PairLabel::positive) {
                row -= s;
                coef = -scale;
            } else if (s > ctx.gate) {
                row += s;
                coef = scale;
            }
            if (audit) {
                report.terms.push_back({q.id, e.item.id, s, e.label, coef != 0.0});
            }
            if (coef == 0.0) {
                continue;
            }
            if (q.grad_enabled()) {
                axpy(coef, cosine_grad_raw(q.raw, e.item.feature), report.grads.at(q.id));
            }
            if (e.item.grad_enabled()) {
                axpy(coef, cosine_grad_raw(e.item.raw, q.feature), report.grads.at(e.item.id));
            }
        }
        total += row;
    }
    report.value = total * scale;
    return report;
}

void BatchFeatures::add(ImageId id, RawVector aug_raw, UnitVector clean_feature) {
    if (!index.emplace(id, ids.size()).second) {
        throw InconsistentMining(fmt::format("image {} appears twice in the batch", id));
    }
    ids.push_back(id);
    augmented.push_back(normalize(aug_raw));
    augmented_raw.push_back(std::move(aug_raw));
    clean.push_back(std::move(clean_feature));
}

LossFeature BatchFeatures::loss_feature(ImageId id) const {
    auto it = index.find(id);
    if (it == index.end()) {
        throw UnknownId(fmt::format("image {} not in batch", id));
    }
    return LossFeature{id, augmented[it->second], augmented_raw[it->second]};
}

LossContext build_loss_context(ImageId anchor, const MiningResult& mining, const BatchFeatures& batch,
                               std::span<const ImageId> pool_ids, const MemoryBank& augmented_bank,
                               NegativeSource source, std::span<const ImageId> random_negative_ids, double gate) {
    mining.check_disjoint();
    if (!batch.contains(anchor)) {
        throw InconsistentMining(fmt::format("anchor {} not in batch", anchor));
    }
    for (const auto* list : {&mining.batch_positive_ids, &mining.batch_negative_ids}) {
        for (auto id : *list) {
            if (!batch.contains(id) || id == anchor) {
                throw InconsistentMining(fmt::format("batch-mined image {} is not a batch neighbour", id));
            }
        }
    }
    for (const auto* list : {&mining.memory_positive_ids, &mining.memory_negative_ids}) {
        for (auto id : *list) {
            if (batch.contains(id)) {
                throw InconsistentMining(fmt::format("memory-mined image {} is also in the batch", id));
            }
        }
    }

    LossContext ctx;
    ctx.gate = gate;
    std::unordered_set<ImageId> positives{anchor};
    ctx.query_members.push_back(batch.loss_feature(anchor));
    for (auto id : mining.batch_positive_ids) {
        positives.insert(id);
        ctx.query_members.push_back(batch.loss_feature(id));
    }
    for (auto id : mining.memory_positive_ids) {
        positives.insert(id);
        ctx.query_members.push_back(LossFeature{id, augmented_bank.at(id), {}});
    }

    std::unordered_set<ImageId> placed;
    for (auto id : batch.ids) {
        ctx.collection.push_back(
            {batch.loss_feature(id), positives.count(id) ? PairLabel::positive : PairLabel::negative});
        placed.insert(id);
    }
    for (auto id : mining.memory_positive_ids) {
        ctx.collection.push_back({LossFeature{id, augmented_bank.at(id), {}}, PairLabel::positive});
        placed.insert(id);
    }

    auto add_negative = [&](ImageId id) {
        if (placed.insert(id).second) {
            ctx.collection.push_back({LossFeature{id, augmented_bank.at(id), {}}, PairLabel::negative});
        }
    };
    if (source == NegativeSource::candidate_pool) {
        for (auto id : pool_ids) {
            if (!positives.count(id)) add_negative(id);
        }
    } else if (source == NegativeSource::random_memory) {
        for (auto id : random_negative_ids) {
            if (!positives.count(id)) add_negative(id);
        }
    }
    return ctx;
}

std::string to_string(NegativeSource s) {
    switch (s) {
    case NegativeSource::none: return "none";
    case NegativeSource::random_memory: return "random_memory";
    case NegativeSource::candidate_pool: return "candidate_pool";
    }
    return "?";
}

NegativeSource negative_source_from_string(const std::string& s) {
    for (auto v : {NegativeSource::none, NegativeSource::random_memory, NegativeSource::candidate_pool}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidConfig("unknown negative source '" + s + "'");
}

} // namespace insclr
