#include "insclr/evaluator.hpp"

#include "insclr/error.hpp"
#include "insclr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>

namespace insclr {

void EvalConfig::validate() const {
    std::vector<std::string> problems;
    if (num_views < 1) problems.push_back("num_views must be >= 1");
    if (!(query_fraction > 0.0 && query_fraction < 1.0)) problems.push_back("query_fraction must be in (0, 1)");
    if (!problems.empty()) {
        throw InvalidConfig(fmt::format("{}", fmt::join(problems, "; ")));
    }
}

UnitVector multiview_feature(const EncoderState& state, const ImageRecord& record, const DatasetConfig& config,
                             std::size_t num_views) {
    if (num_views < 1 || num_views > record.aux_seeds.size()) {
        throw IndexOutOfRange(fmt::format("{} views requested, record has {}", num_views, record.aux_seeds.size()));
    }
    if (num_views == 1) {
        return encode(state, clean_view(record));
    }
    std::vector<UnitVector> views;
    views.reserve(num_views);
    for (std::size_t v = 0; v < num_views; ++v) {
        views.push_back(encode(state, aux_view(record, config, v)));
    }
    return normalized_mean(views);
}

double average_precision(std::span<const std::uint8_t> ranked_relevance, std::size_t num_relevant) {
    if (num_relevant == 0) {
        throw InvalidInput("average precision needs at least one relevant item");
    }
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
        if (ranked_relevance[k]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits > num_relevant) {
        throw InvalidInput(fmt::format("{} hits exceed {} relevant items", hits, num_relevant));
    }
    return sum / static_cast<double>(num_relevant);
}

QuerySplit split_queries(std::span<const int> labels, double query_fraction, std::uint64_t seed) {
    std::map<int, std::vector<ImageId>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw InvalidConfig(fmt::format("image {} has no label; evaluation needs labels", i));
        }
        by_class[labels[i]].push_back(static_cast<ImageId>(i));
    }
    std::vector<char> is_query(labels.size(), 0);
    for (auto& [cls, members] : by_class) {
        if (members.size() < 2) {
            throw InvalidConfig(fmt::format("class {} has {} images; need a query and a gallery item", cls,
                                            members.size()));
        }
        auto rng = derive_stream(seed, {stream_tag::eval_split, static_cast<std::uint64_t>(cls)});
        std::shuffle(members.begin(), members.end(), rng);
        const auto wanted = static_cast<std::size_t>(std::llround(query_fraction * static_cast<double>(members.size())));
        const std::size_t nq = std::clamp<std::size_t>(wanted, 1, members.size() - 1);
        for (std::size_t k = 0; k < nq; ++k) {
            is_query[members[k]] = 1;
        }
    }
    QuerySplit split;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (is_query[i] ? split.queries : split.gallery).push_back(static_cast<ImageId>(i));
    }
    return split;
}

EvalReport evaluate_features(std::span<const UnitVector> features, std::span<const int> labels,
                             const EvalConfig& cfg) {
    cfg.validate();
    if (features.size() != labels.size()) {
        throw DimensionMismatch(fmt::format("{} features vs {} labels", features.size(), labels.size()));
    }
    const auto split = split_queries(labels, cfg.query_fraction, cfg.seed);

    std::map<int, std::size_t> gallery_count;
    for (auto g : split.gallery) {
        ++gallery_count[labels[g]];
    }

    EvalReport report;
    std::map<int, std::vector<double>> class_aps;
    std::vector<std::pair<double, ImageId>> ranked(split.gallery.size());
    std::vector<std::uint8_t> relevance(split.gallery.size());
    double ap_sum = 0.0;
    double chance_sum = 0.0;

    for (auto q : split.queries) {
        for (std::size_t k = 0; k < split.gallery.size(); ++k) {
            const auto g = split.gallery[k];
            ranked[k] = {cosine(features[q], features[g]), g};
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t k = 0; k < ranked.size(); ++k) {
            relevance[k] = labels[ranked[k].second] == labels[q] ? 1 : 0;
        }
        const std::size_t num_relevant = gallery_count[labels[q]];
        QueryResult result;
        result.query = q;
        result.class_id = labels[q];
        result.ap = average_precision(relevance, num_relevant);
        if (cfg.keep_rankings) {
            for (const auto& r : ranked) result.ranking.push_back(r.second);
        }
        ap_sum += result.ap;
        chance_sum += static_cast<double>(num_relevant) / static_cast<double>(split.gallery.size());
        class_aps[result.class_id].push_back(result.ap);
        report.queries.push_back(std::move(result));
    }

    report.num_queries = split.queries.size();
    report.map = ap_sum / static_cast<double>(report.num_queries);
    report.chance_level = chance_sum / static_cast<double>(report.num_queries);
    for (const auto& [cls, aps] : class_aps) {
        double s = 0.0;
        for (double a : aps) s += a;
        report.per_class_ap[cls] = s / static_cast<double>(aps.size());
    }
    return report;
}

EvalReport evaluate_map(const EncoderState& state, const Dataset& dataset, const EvalConfig& cfg) {
    cfg.validate();
    std::vector<UnitVector> features;
    features.reserve(dataset.size());
    for (const auto& rec : dataset.records()) {
        features.push_back(multiview_feature(state, rec, dataset.config(), cfg.num_views));
    }
    return evaluate_features(features, GroundTruth::labels(dataset), cfg);
}

void write_rankings_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "query,class_id,ap,ranking\n";
    for (const auto& q : report.queries) {
        out << fmt::format("{},{},{},{}\n", q.query, q.class_id, q.ap, fmt::join(q.ranking, " "));
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace insclr
