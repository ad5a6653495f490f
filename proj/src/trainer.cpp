#include "insclr/trainer.hpp"

#include "insclr/analytics.hpp"
#include "insclr/error.hpp"
#include "insclr/evaluator.hpp"
#include "insclr/rng.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <unordered_set>

namespace insclr {

std::vector<LrMilestone> default_lr_schedule(std::size_t steps_per_round, std::size_t rounds, double base_lr) {
    std::vector<LrMilestone> schedule;
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t start = r * steps_per_round;
        const double lr = r == 0 ? base_lr : 0.3 * base_lr;
        schedule.push_back({start, lr});
        schedule.push_back({start + steps_per_round / 2, lr * 0.1});
        if (r == 0) {
            schedule.push_back({start + 3 * steps_per_round / 4, lr * 0.01});
        }
    }
    return schedule;
}

double lr_at(std::span<const LrMilestone> schedule, std::size_t step) {
    double lr = schedule.empty() ? 0.0 : schedule.front().lr;
    for (const auto& m : schedule) {
        if (m.step <= step) lr = m.lr;
    }
    return lr;
}

void TrainerConfig::validate(std::size_t dataset_size, std::size_t pool_size) const {
    std::vector<std::string> problems;
    if (rounds < 1) problems.push_back("rounds must be >= 1");
    if (tuples_per_batch < 1) problems.push_back("tuples_per_batch must be >= 1");
    if (batch_mining.n_b < 1) problems.push_back("n_b must be >= 1");
    if (batch_size() > dataset_size) {
        problems.push_back(fmt::format("batch of {} exceeds dataset of {}", batch_size(), dataset_size));
    }
    if (batch_mining.n_b > pool_size) {
        problems.push_back(fmt::format("n_b {} exceeds pool size {}", batch_mining.n_b, pool_size));
    }
    if (memory_mining.selection == SelectionRule::topk && memory_mining.k < 1) {
        problems.push_back("memory_mining.k must be >= 1");
    }
    if (batch_mining.strategy == BatchStrategy::multiscale && multiscale_views < 1) {
        problems.push_back("multiscale_views must be >= 1");
    }
    for (std::size_t i = 1; i < lr_schedule.size(); ++i) {
        if (lr_schedule[i].step < lr_schedule[i - 1].step) problems.push_back("lr_schedule steps must be sorted");
    }
    for (const auto& m : lr_schedule) {
        if (!(m.lr >= 0.0)) problems.push_back("lr_schedule rates must be >= 0");
    }
    if (!problems.empty()) {
        throw InvalidConfig(fmt::format("{}", fmt::join(problems, "; ")));
    }
}

std::vector<TrainingTuple> build_batch(std::span<const ImageId> anchor_ids, const CandidatePool& pool,
                                       std::size_t n_b) {
    std::unordered_set<ImageId> used;
    for (auto a : anchor_ids) {
        if (!used.insert(a).second) {
            throw InvalidInput(fmt::format("anchor {} repeated in one batch", a));
        }
    }
    std::vector<TrainingTuple> tuples;
    tuples.reserve(anchor_ids.size());
    for (auto a : anchor_ids) {
        TrainingTuple t{a, {}};
        for (const auto& nb : pool.neighbors(a)) {
            if (t.neighbor_ids.size() == n_b) break;
            if (used.insert(nb.id).second) {
                t.neighbor_ids.push_back(nb.id);
            }
        }
        if (t.neighbor_ids.size() < n_b) {
            throw PoolExhausted(fmt::format("anchor {}: only {} of {} neighbours left after deduplication", a,
                                            t.neighbor_ids.size(), n_b));
        }
        tuples.push_back(std::move(t));
    }
    return tuples;
}

AnchorSampler::AnchorSampler(std::size_t num_images, std::uint64_t seed) : num_images_(num_images), seed_(seed) {
    reshuffle();
}

void AnchorSampler::reshuffle() {
    order_.resize(num_images_);
    for (std::size_t i = 0; i < num_images_; ++i) order_[i] = static_cast<ImageId>(i);
    auto rng = derive_stream(seed_, {stream_tag::anchors, epoch_++});
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
}

std::vector<ImageId> AnchorSampler::next(std::size_t count) {
    if (count > num_images_) {
        throw InvalidInput(fmt::format("cannot draw {} distinct anchors from {} images", count, num_images_));
    }
    std::vector<ImageId> out;
    std::unordered_set<ImageId> seen;
    while (out.size() < count) {
        if (cursor_ == order_.size()) reshuffle();
        const auto id = order_[cursor_++];
        if (seen.insert(id).second) out.push_back(id);
    }
    return out;
}

namespace {

std::vector<ImageId> pool_ids_of(const CandidatePool& pool, ImageId anchor) {
    std::vector<ImageId> ids;
    for (const auto& nb : pool.neighbors(anchor)) ids.push_back(nb.id);
    return ids;
}

} // namespace

StepOutcome train_step(EncoderState state, MemoryBanks& banks, const StepInputs& in, const TrainerConfig& cfg,
                       const AdamConfig& adam) {
    const auto& dcfg = in.dataset.config();
    const bool need_aug_select = cfg.batch_mining.strategy == BatchStrategy::augmented;
    const bool need_multiscale = cfg.batch_mining.strategy == BatchStrategy::multiscale;

    // Step 1: forward both views of every batch image, refresh the banks.
    BatchFeatures batch;
    std::vector<RawVector> inputs;
    std::vector<UnitVector> multiscale;
    for (const auto& t : in.batch) {
        std::vector<ImageId> members{t.anchor_id};
        members.insert(members.end(), t.neighbor_ids.begin(), t.neighbor_ids.end());
        for (auto id : members) {
            const auto& rec = in.dataset.record(id);
            auto rng = derive_stream(cfg.seed, {stream_tag::augment, in.step, id});
            auto x = augmented_view(rec, dcfg, rng);
            batch.add(id, project(state, x), encode(state, clean_view(rec)));
            inputs.push_back(std::move(x));
            if (need_multiscale) {
                multiscale.push_back(multiview_feature(state, rec, dcfg, cfg.multiscale_views));
            }
        }
    }
    banks.clean.update_entries(batch.ids, batch.clean, in.step);
    banks.augmented.update_entries(batch.ids, batch.augmented, in.step);

    std::vector<ImageId> random_negatives;
    if (cfg.negative_source == NegativeSource::random_memory) {
        auto rng = derive_stream(cfg.seed, {stream_tag::random_negatives, in.step});
        random_negatives = banks.augmented.sample_ids(cfg.random_negatives, batch.ids, rng);
    }

    const std::size_t dim = state.weights.rows;
    std::vector<RawVector> grads(batch.ids.size(), RawVector(dim, 0.0));
    const double tuple_scale = 1.0 / static_cast<double>(in.batch.size());
    double loss = 0.0;
    double batch_pos = 0.0;
    double mem_pos = 0.0;
    std::size_t true_pos = 0;
    std::vector<std::optional<double>> batch_prec;
    std::vector<std::optional<double>> mem_prec;

    for (const auto& t : in.batch) {
        try {
            // Step 2: in-batch selection.
            TupleViews views;
            std::vector<ImageId> members{t.anchor_id};
            members.insert(members.end(), t.neighbor_ids.begin(), t.neighbor_ids.end());
            for (auto id : members) {
                const auto slot = batch.index.at(id);
                views.clean.push_back(batch.clean[slot]);
                if (need_aug_select) views.augmented.push_back(batch.augmented[slot]);
                if (need_multiscale) views.multiscale.push_back(multiscale[slot]);
            }
            auto selection = select_batch_positives(t.anchor_id, t.neighbor_ids, views, cfg.batch_mining);

            // Step 3: memory mining with the query set.
            QuerySet query(t.anchor_id, batch.clean[batch.index.at(t.anchor_id)]);
            for (auto id : selection.selected) {
                query.add(id, batch.clean[batch.index.at(id)]);
            }
            const auto pool_ids = pool_ids_of(in.pool, t.anchor_id);
            auto mined = mine_memory_positives(query, pool_ids, banks.clean, cfg.memory_mining, batch.ids);

            MiningResult result{selection.selected, selection.rejected, mined.positive_ids, mined.negative_ids};

            // Step 4: loss over the tuple.
            const auto ctx = build_loss_context(t.anchor_id, result, batch, pool_ids, banks.augmented,
                                                cfg.negative_source, random_negatives, cfg.gate);
            const auto report = contrastive_loss(ctx);
            loss += tuple_scale * report.value;
            for (const auto& [id, g] : report.grads) {
                axpy(tuple_scale, g, grads[batch.index.at(id)]);
            }

            batch_pos += static_cast<double>(selection.selected.size());
            mem_pos += static_cast<double>(mined.positive_ids.size());
            if (in.labels) {
                const int cls = (*in.labels)[t.anchor_id];
                batch_prec.push_back(mining_precision(selection.selected, cls, *in.labels));
                mem_prec.push_back(mining_precision(mined.positive_ids, cls, *in.labels));
                for (auto id : mined.positive_ids) true_pos += (*in.labels)[id] == cls;
            }
        } catch (const Error& e) {
            throw Error(fmt::format("step {} (round {}), tuple with anchor {}: {}", in.step, in.round, t.anchor_id,
                                    e.what()));
        }
    }

    Matrix weight_grad(state.weights.rows, state.weights.cols);
    for (std::size_t k = 0; k < batch.ids.size(); ++k) {
        accumulate_backward(weight_grad, inputs[k], grads[k]);
    }
    AdamConfig step_adam = adam;
    step_adam.lr = cfg.lr_schedule.empty() ? adam.lr : lr_at(cfg.lr_schedule, in.step);
    if (step_adam.lr > 0.0) {
        state = adam_step(std::move(state), weight_grad, step_adam);
    }

    StepRecord record;
    record.step = in.step;
    record.round = in.round;
    record.loss = loss;
    record.lr = step_adam.lr;
    record.n_batch_pos = batch_pos * tuple_scale;
    record.n_mem_pos = mem_pos * tuple_scale;
    if (in.labels) {
        record.batch_precision = mean_present(batch_prec);
        record.mem_precision = mean_present(mem_prec);
        record.mem_true_positives = true_pos;
    }
    return {std::move(state), record};
}

TrainResult train(const Dataset& dataset, EncoderState initial, const TrainerConfig& cfg, const AdamConfig& adam,
                  const PoolConfig& pool_config, const TrainOptions& options) {
    adam.validate();
    cfg.validate(dataset.size(), pool_config.pool_size);

    TrainResult result;
    result.state = std::move(initial);
    if (cfg.steps_per_round == 0) {
        return result;
    }

    TrainerConfig run_cfg = cfg;
    if (run_cfg.lr_schedule.empty()) {
        run_cfg.lr_schedule = default_lr_schedule(cfg.steps_per_round, cfg.rounds, adam.lr);
    }

    AnchorSampler sampler(dataset.size(), cfg.seed);
    PoolConfig pool_cfg = pool_config;
    std::size_t step = 0;
    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        // Each round mines from a pool and banks computed with the encoder as it stands.
        auto clean = encode_clean_views(result.state, dataset);
        pool_cfg.round = round - 1;
        result.pool = build_candidate_pool(clean, pool_cfg, result.state.checksum());
        auto banks = init_banks(result.state, dataset, derive_stream(cfg.seed, {stream_tag::bank_init, round})(),
                                std::move(clean));
        if (options.checkpoint_dir) {
            write_pool(result.pool, *options.checkpoint_dir / fmt::format("pool_round_{}.bin", round));
        }

        for (std::size_t s = 0; s < cfg.steps_per_round; ++s, ++step) {
            const auto anchors = sampler.next(cfg.tuples_per_batch);
            const auto tuples = build_batch(anchors, result.pool, cfg.batch_mining.n_b);
            StepInputs inputs{dataset, result.pool, tuples, step, round, options.labels};
            auto outcome = train_step(std::move(result.state), banks, inputs, run_cfg, adam);
            result.state = std::move(outcome.state);
            result.history.push_back(outcome.record);
            if (options.observer) {
                options.observer(result.state, banks, outcome.record);
            }
        }
        if (options.checkpoint_dir) {
            save_checkpoint(result.state, *options.checkpoint_dir / fmt::format("round_{}.ckpt", round));
        }
    }
    return result;
}

} // namespace insclr
