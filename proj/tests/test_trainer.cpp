#include "helpers.hpp"
#include "insclr/analytics.hpp"
#include "insclr/config.hpp"
#include "insclr/error.hpp"
#include "insclr/experiment.hpp"
#include "insclr/trainer.hpp"

#include <doctest.h>
#include <set>

using namespace insclr;

namespace {

struct Small {
    Dataset dataset;
    EncoderState state;
    TrainerConfig trainer;
    AdamConfig adam;
    PoolConfig pool{12, 0};

    Small() {
        DatasetConfig dc;
        dc.num_classes = 10;
        dc.instances_per_class = 10;
        dc.input_dim = 16;
        dc.sigma_intra = 0.08;
        dc.seed = 7;
        dataset = generate_dataset(dc);
        EncoderConfig ec;
        ec.input_dim = 16;
        ec.embed_dim = 8;
        ec.seed = 8;
        state = init_encoder(ec);
        trainer.tuples_per_batch = 4;
        trainer.steps_per_round = 15;
        trainer.seed = 9;
        trainer.random_negatives = 20;
    }

    TrainResult run(const TrainOptions& opts = {}) const { return train(dataset, state, trainer, adam, pool, opts); }
};

} // namespace

TEST_CASE("default schedule shape") {
    const auto s = default_lr_schedule(100, 2, 1e-4);
    CHECK(lr_at(s, 0) == 1e-4);
    CHECK(lr_at(s, 49) == 1e-4);
    CHECK(lr_at(s, 50) == doctest::Approx(1e-5));
    CHECK(lr_at(s, 75) == doctest::Approx(1e-6));
    CHECK(lr_at(s, 100) == doctest::Approx(3e-5));
    CHECK(lr_at(s, 150) == doctest::Approx(3e-6));
    CHECK(lr_at(s, 199) == doctest::Approx(3e-6));
}

TEST_CASE("a batch of 16 tuples with three neighbours holds 64 distinct ids") {
    DatasetConfig dc;
    dc.seed = 3;
    const auto ds = generate_dataset(dc);
    EncoderConfig ec;
    const auto pool = build_candidate_pool(encode_clean_views(init_encoder(ec), ds), PoolConfig{});
    AnchorSampler sampler(ds.size(), 11);
    for (int step = 0; step < 20; ++step) {
        const auto anchors = sampler.next(16);
        const auto batch = build_batch(anchors, pool, 3);
        std::set<ImageId> ids;
        for (const auto& t : batch) {
            ids.insert(t.anchor_id);
            ids.insert(t.neighbor_ids.begin(), t.neighbor_ids.end());
        }
        CHECK(ids.size() == 64);
    }
}

TEST_CASE("single anchor with one neighbour takes the top pool entry") {
    Small s;
    const auto pool = build_candidate_pool(encode_clean_views(s.state, s.dataset), s.pool);
    const std::vector<ImageId> anchor{5};
    const auto batch = build_batch(anchor, pool, 1);
    REQUIRE(batch.size() == 1);
    CHECK(batch[0].neighbor_ids == std::vector<ImageId>{pool.neighbors(5)[0].id});
    CHECK(build_batch(anchor, pool, 1) == batch);
}

TEST_CASE("exhausted pools and repeated anchors are reported") {
    Small s;
    const auto pool = build_candidate_pool(encode_clean_views(s.state, s.dataset), PoolConfig{2, 0});
    std::vector<ImageId> many;
    for (ImageId i = 0; i < 40; ++i) many.push_back(i);
    CHECK_THROWS_AS(build_batch(many, pool, 2), PoolExhausted);
    const std::vector<ImageId> repeated{1, 1};
    CHECK_THROWS_AS(build_batch(repeated, pool, 1), InvalidInput);
}

TEST_CASE("anchor sampler covers every id once per epoch") {
    AnchorSampler a(10, 4);
    AnchorSampler b(10, 4);
    std::vector<ImageId> seen;
    for (int i = 0; i < 5; ++i) {
        auto got = a.next(2);
        CHECK(got == b.next(2));
        seen.insert(seen.end(), got.begin(), got.end());
    }
    CHECK(std::set<ImageId>(seen.begin(), seen.end()).size() == 10);
    const auto straddle = a.next(7);
    CHECK(std::set<ImageId>(straddle.begin(), straddle.end()).size() == 7);
}

TEST_CASE("zero learning rate freezes weights but still refreshes banks") {
    Small s;
    s.trainer.lr_schedule = {{0, 0.0}};
    s.trainer.rounds = 1;
    std::size_t bank_changes = 0;
    MemoryBanks first;
    bool have_first = false;
    TrainOptions opts;
    opts.observer = [&](const EncoderState&, const MemoryBanks& banks, const StepRecord&) {
        if (!have_first) {
            first = banks;
            have_first = true;
            return;
        }
        for (ImageId i = 0; i < banks.augmented.size(); ++i) {
            if (!(banks.augmented.at(i) == first.augmented.at(i))) ++bank_changes;
        }
    };
    const auto r = s.run(opts);
    CHECK(r.state.weights == s.state.weights);
    CHECK(bank_changes > 0);
    for (const auto& rec : r.history) CHECK(rec.lr == 0.0);
}

TEST_CASE("no-op and single-round runs") {
    Small s;
    s.trainer.steps_per_round = 0;
    const auto r0 = s.run();
    CHECK(r0.state == s.state);
    CHECK(r0.history.empty());

    s.trainer.steps_per_round = 5;
    s.trainer.rounds = 1;
    const auto r1 = s.run();
    CHECK(r1.history.size() == 5);
    CHECK(r1.pool.round() == 0);
    CHECK(r1.pool.encoder_checksum() == s.state.checksum());

    s.trainer.rounds = 2;
    const auto r2 = s.run();
    CHECK(r2.pool.round() == 1);
    CHECK(r2.history.back().round == 2);
}

TEST_CASE("row A data flow: nn batches, no memory, batch negatives only") {
    Small s;
    s.trainer.batch_mining.strategy = BatchStrategy::nn;
    s.trainer.memory_mining.iterations = 0;
    s.trainer.negative_source = NegativeSource::none;
    const auto r = s.run();
    for (const auto& rec : r.history) {
        CHECK(rec.n_batch_pos == doctest::Approx(3.0));
        CHECK(rec.n_mem_pos == 0.0);
    }
}

TEST_CASE("runs are deterministic and analytics never feed back") {
    Small s;
    const auto& labels = GroundTruth::labels(s.dataset);
    TrainOptions with_labels;
    with_labels.labels = &labels;
    const auto a = s.run(with_labels);
    const auto b = s.run(with_labels);
    CHECK(a.history == b.history);
    CHECK(a.state == b.state);

    const auto blind = s.run();
    CHECK(blind.state == a.state);
    CHECK_FALSE(blind.history.front().batch_precision.has_value());
    CHECK(a.history.front().batch_precision.has_value());
}

TEST_CASE("step invariants hold through a run") {
    Small s;
    const auto& labels = GroundTruth::labels(s.dataset);
    TrainOptions opts;
    opts.labels = &labels;
    std::size_t calls = 0;
    double worst_norm = 0.0;
    opts.observer = [&](const EncoderState&, const MemoryBanks& banks, const StepRecord& rec) {
        ++calls;
        CHECK(banks.clean.size() == s.dataset.size());
        CHECK(banks.augmented.size() == s.dataset.size());
        for (ImageId i = 0; i < s.dataset.size(); ++i) {
            worst_norm = std::max(worst_norm, std::abs(l2_norm(banks.clean.at(i).values()) - 1.0));
            worst_norm = std::max(worst_norm, std::abs(l2_norm(banks.augmented.at(i).values()) - 1.0));
        }
        CHECK(rec.n_batch_pos >= 0.0);
        CHECK(rec.n_batch_pos <= s.trainer.batch_mining.n_b);
        CHECK(rec.n_mem_pos >= 0.0);
        CHECK(rec.n_mem_pos <= s.trainer.memory_mining.iterations * s.trainer.memory_mining.k);
        for (const auto& p : {rec.batch_precision, rec.mem_precision}) {
            if (p) CHECK((*p >= 0.0 && *p <= 1.0));
        }
    };
    const auto r = s.run(opts);
    CHECK(calls == r.history.size());
    CHECK(r.history.size() == s.trainer.rounds * s.trainer.steps_per_round);
    CHECK(worst_norm < 1e-5);
    for (std::size_t i = 0; i < r.history.size(); ++i) CHECK(r.history[i].step == i);
}

TEST_CASE("threshold selection is more precise than nn on a seeded run") {
    auto cfg = default_run_config(4);
    cfg.trainer.steps_per_round = 60;
    cfg.trainer.memory_mining.iterations = 0;
    cfg.trainer.negative_source = NegativeSource::none;
    const auto ours = run_experiment(cfg);
    cfg.trainer.batch_mining.strategy = BatchStrategy::nn;
    const auto nn = run_experiment(cfg);
    auto mean_precision = [](const TrainingHistory& h) {
        std::vector<std::optional<double>> v;
        for (const auto& r : h) v.push_back(r.batch_precision);
        return mean_present(v).value_or(0.0);
    };
    CHECK(mean_precision(ours.history) > mean_precision(nn.history));
}

TEST_CASE("a seeded desk-scale run improves mAP") {
    const auto summary = run_experiment(default_run_config(0));
    CHECK(summary.final_map > summary.initial_map);
}

TEST_CASE("config validation") {
    TrainerConfig c;
    c.batch_mining.n_b = 0;
    CHECK_THROWS_AS(c.validate(2000, 50), InvalidConfig);
    TrainerConfig big;
    big.tuples_per_batch = 1000;
    CHECK_THROWS_AS(big.validate(2000, 50), InvalidConfig);
}
