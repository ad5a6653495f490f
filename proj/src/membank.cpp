#include "insclr/membank.hpp"

#include "insclr/candidates.hpp"
#include "insclr/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace insclr {

MemoryBank::MemoryBank(BankKind kind, std::vector<UnitVector> entries)
    : kind_(kind), entries_(std::move(entries)), last_update_(entries_.size(), 0) {
    for (const auto& e : entries_) {
        if (e.dim() != entries_.front().dim()) {
            throw DimensionMismatch("memory bank entries differ in dimension");
        }
    }
}

void MemoryBank::check_id(ImageId id) const {
    if (id >= entries_.size()) {
        throw UnknownId(fmt::format("image {} not in bank of {}", id, entries_.size()));
    }
}

void MemoryBank::update_entries(std::span<const ImageId> ids, std::span<const UnitVector> features,
                                std::uint64_t step) {
    if (ids.size() != features.size()) {
        throw DimensionMismatch(fmt::format("{} ids but {} features", ids.size(), features.size()));
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        check_id(ids[k]);
        if (features[k].dim() != dim()) {
            throw DimensionMismatch(fmt::format("feature dim {} vs bank dim {}", features[k].dim(), dim()));
        }
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        entries_[ids[k]] = features[k];
        last_update_[ids[k]] = step;
    }
}

std::vector<UnitVector> MemoryBank::fetch(std::span<const ImageId> ids) const {
    std::vector<UnitVector> out;
    out.reserve(ids.size());
    for (auto id : ids) {
        check_id(id);
        out.push_back(entries_[id]);
    }
    return out;
}

const UnitVector& MemoryBank::at(ImageId id) const {
    check_id(id);
    return entries_[id];
}

std::uint64_t MemoryBank::last_update_step(ImageId id) const {
    check_id(id);
    return last_update_[id];
}

std::vector<ImageId> MemoryBank::sample_ids(std::size_t count, std::span<const ImageId> exclude, Rng& rng) const {
    std::vector<char> blocked(entries_.size(), 0);
    for (auto id : exclude) {
        if (id < blocked.size()) {
            blocked[id] = 1;
        }
    }
    std::vector<ImageId> population;
    population.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!blocked[i]) {
            population.push_back(static_cast<ImageId>(i));
        }
    }
    count = std::min(count, population.size());
    // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, population.size() - 1);
        std::swap(population[i], population[pick(rng)]);
    }
    population.resize(count);
    return population;
}

MemoryBanks init_banks(const EncoderState& state, const Dataset& dataset, std::uint64_t seed) {
    return init_banks(state, dataset, seed, encode_clean_views(state, dataset));
}

MemoryBanks init_banks(const EncoderState& state, const Dataset& dataset, std::uint64_t seed,
                       std::vector<UnitVector> clean_features) {
    if (clean_features.size() != dataset.size()) {
        throw DimensionMismatch("clean features do not cover the dataset");
    }
    std::vector<UnitVector> aug;
    aug.reserve(dataset.size());
    for (const auto& rec : dataset.records()) {
        auto rng = derive_stream(seed, {stream_tag::bank_init, rec.id});
        aug.push_back(encode(state, augmented_view(rec, dataset.config(), rng)));
    }
    return MemoryBanks{MemoryBank(BankKind::clean, std::move(clean_features)),
                       MemoryBank(BankKind::augmented, std::move(aug))};
}

} // namespace insclr
