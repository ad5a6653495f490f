#ifndef INSCLR_MEMBANK_HPP
#define INSCLR_MEMBANK_HPP

#include "insclr/encoder.hpp"
#include "insclr/numerics.hpp"
#include "insclr/rng.hpp"
#include "insclr/synthdata.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace insclr {

enum class BankKind { clean, augmented };

/// Latest encoder output per image. Entries are overwritten, never blended.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(BankKind kind, std::vector<UnitVector> entries);

    BankKind kind() const { return kind_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t dim() const { return entries_.empty() ? 0 : entries_.front().dim(); }

    /// Overwrite entries; a repeated id keeps its last feature. Throws `UnknownId`, `DimensionMismatch`.
    void update_entries(std::span<const ImageId> ids, std::span<const UnitVector> features, std::uint64_t step);

    /// Copies of the requested entries.
    std::vector<UnitVector> fetch(std::span<const ImageId> ids) const;

    /// Borrowed view of one entry, valid until the next update.
    const UnitVector& at(ImageId id) const;

    std::uint64_t last_update_step(ImageId id) const;

    /**
     * `count` distinct ids drawn uniformly without replacement from the ids not in `exclude`.
     * Fewer are returned when not enough remain.
     */
    std::vector<ImageId> sample_ids(std::size_t count, std::span<const ImageId> exclude, Rng& rng) const;

private:
    void check_id(ImageId id) const;

    BankKind kind_ = BankKind::clean;
    std::vector<UnitVector> entries_;
    std::vector<std::uint64_t> last_update_;
};

struct MemoryBanks {
    MemoryBank clean;
    MemoryBank augmented;
};

/**
 * Full pass over the dataset: clean bank from clean views, augmented bank from
 * one seeded augmentation per image.
 */
MemoryBanks init_banks(const EncoderState& state, const Dataset& dataset, std::uint64_t seed);

/// Same as init_banks, reusing clean encodings that were already computed.
MemoryBanks init_banks(const EncoderState& state, const Dataset& dataset, std::uint64_t seed,
                       std::vector<UnitVector> clean_features);

} // namespace insclr

#endif
