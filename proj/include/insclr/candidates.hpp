#ifndef INSCLR_CANDIDATES_HPP
#define INSCLR_CANDIDATES_HPP

#include "insclr/encoder.hpp"
#include "insclr/numerics.hpp"
#include "insclr/synthdata.hpp"

#include <filesystem>
#include <span>
#include <vector>

/**
 * @file candidates.hpp
 *
 * @brief Offline per-image candidate pools: the exact top-P cosine neighbours
 * of every image, recomputed between training rounds.
 */

namespace insclr {

struct PoolConfig {
    std::size_t pool_size = 50;
    std::size_t round = 0;
};

struct Neighbor {
    ImageId id = 0;
    double similarity = 0.0;

    bool operator==(const Neighbor&) const = default;
};

class CandidatePool {
public:
    CandidatePool() = default;
    CandidatePool(std::size_t pool_size, std::size_t round, std::uint64_t encoder_checksum,
                  std::vector<std::vector<Neighbor>> rows);

    std::size_t size() const { return rows_.size(); }
    std::size_t pool_size() const { return pool_size_; }
    std::size_t round() const { return round_; }
    std::uint64_t encoder_checksum() const { return encoder_checksum_; }

    /// Neighbours of `anchor`, most similar first. Throws `UnknownId`.
    std::span<const Neighbor> neighbors(ImageId anchor) const;

    bool operator==(const CandidatePool&) const = default;

private:
    std::size_t pool_size_ = 0;
    std::size_t round_ = 0;
    std::uint64_t encoder_checksum_ = 0;
    std::vector<std::vector<Neighbor>> rows_;
};

/**
 * Brute-force top-P by cosine, self excluded, ties broken by ascending id.
 * `encoder_checksum` is recorded in the pool header and file.
 */
CandidatePool build_candidate_pool(std::span<const UnitVector> features, const PoolConfig& config,
                                   std::uint64_t encoder_checksum = 0);

/// Clean-view encodings of every record under `state`.
std::vector<UnitVector> encode_clean_views(const EncoderState& state, const Dataset& dataset);

/// Re-encode every clean view with `state` and rebuild; the result has round config.round + 1.
CandidatePool refresh_pool(const EncoderState& state, const Dataset& dataset, const PoolConfig& config);

void write_pool(const CandidatePool& pool, const std::filesystem::path& path);
CandidatePool read_pool(const std::filesystem::path& path);

} // namespace insclr

#endif
