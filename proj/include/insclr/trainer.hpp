#ifndef INSCLR_TRAINER_HPP
#define INSCLR_TRAINER_HPP

#include "insclr/candidates.hpp"
#include "insclr/encoder.hpp"
#include "insclr/history.hpp"
#include "insclr/loss.hpp"
#include "insclr/membank.hpp"
#include "insclr/miner.hpp"
#include "insclr/synthdata.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

/**
 * @file trainer.hpp
 *
 * @brief The training loop: anchor sampling, tuple assembly, and the
 * per-step pipeline (encode, bank update, in-batch selection, memory mining,
 * loss, Adam) run over one or more rounds with a pool refresh in between.
 */

namespace insclr {

struct LrMilestone {
    std::size_t step = 0; ///< global step from which `lr` applies
    double lr = 0.0;

    bool operator==(const LrMilestone&) const = default;
};

/**
 * Step-decay schedule: round 1 starts at `base_lr` and drops x0.1 at 50% and
 * 75% of the round; later rounds restart at 0.3 * base_lr and drop x0.1 at 50%.
 */
std::vector<LrMilestone> default_lr_schedule(std::size_t steps_per_round, std::size_t rounds, double base_lr);

struct TrainerConfig {
    std::size_t tuples_per_batch = 16;
    std::size_t steps_per_round = 300;
    std::size_t rounds = 2;
    /// Empty means `default_lr_schedule` from the optimizer's lr.
    std::vector<LrMilestone> lr_schedule;
    std::uint64_t seed = 0;
    BatchMiningConfig batch_mining;
    MemoryMiningConfig memory_mining;
    NegativeSource negative_source = NegativeSource::candidate_pool;
    std::size_t random_negatives = 512;
    double gate = kDefaultNegativeGate;
    /// Views fused by the multiscale batch strategy.
    std::size_t multiscale_views = 3;

    std::size_t batch_size() const { return tuples_per_batch * (batch_mining.n_b + 1); }

    /// Throws `InvalidConfig` listing every violated bound.
    void validate(std::size_t dataset_size, std::size_t pool_size) const;
};

/// Learning rate in effect at `step`.
double lr_at(std::span<const LrMilestone> schedule, std::size_t step);

struct TrainingTuple {
    ImageId anchor_id = 0;
    std::vector<ImageId> neighbor_ids;

    bool operator==(const TrainingTuple&) const = default;
};

/**
 * One tuple per anchor with its first `n_b` pool entries. Any id already
 * placed in the batch (anchors included) is skipped in favour of the next
 * pool entry. Throws `PoolExhausted`.
 */
std::vector<TrainingTuple> build_batch(std::span<const ImageId> anchor_ids, const CandidatePool& pool,
                                       std::size_t n_b);

/// Seeded shuffle of all ids consumed in order and reshuffled when exhausted.
class AnchorSampler {
public:
    AnchorSampler(std::size_t num_images, std::uint64_t seed);

    /// `count` distinct ids.
    std::vector<ImageId> next(std::size_t count);

private:
    void reshuffle();

    std::size_t num_images_;
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    std::vector<ImageId> order_;
    std::size_t cursor_ = 0;
};

struct StepInputs {
    const Dataset& dataset;
    const CandidatePool& pool;
    std::span<const TrainingTuple> batch;
    std::size_t step = 0;
    std::size_t round = 1;
    /// Hidden labels for precision bookkeeping only; null disables analytics.
    const std::vector<int>* labels = nullptr;
};

struct StepOutcome {
    EncoderState state;
    StepRecord record;
};

/// One optimization step; updates both banks in place.
StepOutcome train_step(EncoderState state, MemoryBanks& banks, const StepInputs& inputs, const TrainerConfig& cfg,
                       const AdamConfig& adam);

struct TrainOptions {
    const std::vector<int>* labels = nullptr;
    /// When set, round_<r>.ckpt and pool_round_<r>.bin are written here.
    std::optional<std::filesystem::path> checkpoint_dir;
    /// Called after each step with the current encoder; must not mutate anything the trainer reads.
    std::function<void(const EncoderState&, const MemoryBanks&, const StepRecord&)> observer;
};

struct TrainResult {
    EncoderState state;
    TrainingHistory history;
    CandidatePool pool; ///< pool used by the last round
};

TrainResult train(const Dataset& dataset, EncoderState initial, const TrainerConfig& cfg, const AdamConfig& adam,
                  const PoolConfig& pool_config, const TrainOptions& options = {});

} // namespace insclr

#endif
