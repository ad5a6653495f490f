#include "gradcheck.hpp"
#include "helpers.hpp"
#include "insclr/error.hpp"
#include "insclr/loss.hpp"

#include <algorithm>
#include <doctest.h>

using namespace insclr;
using namespace insclr::testing;

namespace {

UnitVector at_cosine(double s) { return normalize(std::vector<double>{s, std::sqrt(1.0 - s * s)}); }

LossFeature fixed(ImageId id, UnitVector f) { return {id, std::move(f), {}}; }

LossContext one_pos_one_neg(double pos, double neg) {
    LossContext ctx;
    const auto anchor = fixed(0, basis(2, 0));
    ctx.query_members = {anchor};
    ctx.collection = {{anchor, PairLabel::positive},
                      {fixed(1, at_cosine(pos)), PairLabel::positive},
                      {fixed(2, at_cosine(neg)), PairLabel::negative}};
    return ctx;
}

// Features with raw vectors so every id carries a gradient.
LossContext random_raw_context(Rng& rng, std::size_t n, std::size_t dim) {
    LossContext ctx;
    const auto shared = random_vector(dim, rng);
    for (std::size_t i = 0; i < n; ++i) {
        auto raw = random_vector(dim, rng, 0.7);
        axpy(1.0, shared, raw);
        LossFeature f{static_cast<ImageId>(i), normalize(raw), raw};
        const bool pos = i < 2 || i % 3 == 0;
        if (i < 2) ctx.query_members.push_back(f);
        ctx.collection.push_back({f, pos ? PairLabel::positive : PairLabel::negative});
    }
    return ctx;
}

void refresh(LossContext& ctx) {
    for (auto* list : {&ctx.query_members}) {
        for (auto& f : *list) {
            if (f.grad_enabled()) f.feature = normalize(f.raw);
        }
    }
    for (auto& e : ctx.collection) {
        if (e.item.grad_enabled()) e.item.feature = normalize(e.item.raw);
    }
}

void perturb(LossContext& ctx, ImageId id, std::size_t k, double delta) {
    for (auto& f : ctx.query_members) {
        if (f.id == id) f.raw[k] += delta;
    }
    for (auto& e : ctx.collection) {
        if (e.item.id == id) e.item.raw[k] += delta;
    }
    refresh(ctx);
}

} // namespace

TEST_CASE("gated hand-computed values") {
    CHECK(std::abs(contrastive_loss(one_pos_one_neg(0.8, 0.5)).value - (-0.3)) < 1e-12);
    CHECK(std::abs(contrastive_loss(one_pos_one_neg(0.8, 0.3)).value - (-0.8)) < 1e-12);
}

TEST_CASE("audit lists every pair and flags gated negatives") {
    const auto r = contrastive_loss(one_pos_one_neg(0.8, 0.3), true);
    REQUIRE(r.terms.size() == 2);
    CHECK(r.terms[0].counted);
    CHECK_FALSE(r.terms[1].counted);
    CHECK(r.grads.empty());
}

TEST_CASE("two query members average their rows") {
    LossContext ctx;
    const auto a = fixed(0, basis(2, 0));
    const auto p = fixed(1, at_cosine(0.6));
    const auto n = fixed(2, at_cosine(0.9));
    ctx.query_members = {a, p};
    ctx.collection = {{a, PairLabel::positive}, {p, PairLabel::positive}, {n, PairLabel::negative}};
    // Row a: 0.9 - 0.6. Row p: cos(p, n) - 0.6.
    const double pn = cosine(p.feature, n.feature);
    const double expected = ((0.9 - 0.6) + ((pn > 0.4 ? pn : 0.0) - 0.6)) / 2.0;
    CHECK(contrastive_loss(ctx).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("raw-feature gradients match central differences") {
    auto rng = derive_stream(41, {1});
    const double h = 1e-6;
    for (int trial = 0; trial < 30; ++trial) {
        auto ctx = random_raw_context(rng, 6, 5);
        bool near_gate = false;
        for (const auto& t : contrastive_loss(ctx, true).terms) {
            near_gate = near_gate || (t.label == PairLabel::negative && std::abs(t.similarity - ctx.gate) < 1e-3);
        }
        if (near_gate) continue;
        const auto report = contrastive_loss(ctx);
        for (const auto& [id, g] : report.grads) {
            for (std::size_t k = 0; k < g.size(); ++k) {
                auto up = ctx;
                auto down = ctx;
                perturb(up, id, k, h);
                perturb(down, id, k, -h);
                const double fd = (contrastive_loss(up).value - contrastive_loss(down).value) / (2 * h);
                CHECK(rel_err(g[k], fd, 1e-6) < 1e-4);
            }
        }
    }
}

TEST_CASE("loss-to-weights gradients match central differences") {
    auto rng = derive_stream(42, {1});
    for (int trial = 0; trial < 25; ++trial) {
        const auto g = random_grad_instance(rng);
        CHECK(relative_error(analytic_weight_grad(g), numeric_weight_grad(g)) < 1e-4);
    }
}

TEST_CASE("gated negatives and grad-disabled features receive no gradient") {
    LossContext ctx;
    const std::vector<double> raw_q{1.0, 0.0};
    const std::vector<double> raw_far{0.0, 1.0};
    LossFeature q{0, normalize(raw_q), raw_q};
    LossFeature far{1, normalize(raw_far), raw_far};
    ctx.query_members = {q};
    ctx.collection = {{q, PairLabel::positive}, {far, PairLabel::negative}, {fixed(2, at_cosine(0.9)), PairLabel::positive}};
    const auto r = contrastive_loss(ctx);
    REQUIRE(r.grads.count(1) == 1);
    for (double x : r.grads.at(1)) CHECK(x == 0.0);
    CHECK(r.grads.count(2) == 0);
}

TEST_CASE("pairs of grad-disabled features change the value but not the gradients") {
    auto base = one_pos_one_neg(0.8, 0.5);
    const auto before = contrastive_loss(base).value;
    base.collection[2].item.feature = at_cosine(0.7);
    CHECK(contrastive_loss(base).value != before);
    CHECK(contrastive_loss(base).grads.empty());
}

TEST_CASE("directional properties") {
    auto rng = derive_stream(43, {1});
    SUBCASE("raising a positive similarity lowers the loss") {
        for (double s = -0.5; s < 0.95; s += 0.1) {
            CHECK(contrastive_loss(one_pos_one_neg(s + 0.05, 0.5)).value < contrastive_loss(one_pos_one_neg(s, 0.5)).value);
        }
    }
    SUBCASE("raising a negative similarity never lowers the loss") {
        for (double s = -0.5; s < 0.95; s += 0.05) {
            CHECK(contrastive_loss(one_pos_one_neg(0.8, s + 0.05)).value >= contrastive_loss(one_pos_one_neg(0.8, s)).value);
        }
    }
    SUBCASE("value is invariant to collection order") {
        for (int trial = 0; trial < 20; ++trial) {
            auto ctx = random_raw_context(rng, 7, 4);
            const double v = contrastive_loss(ctx).value;
            std::shuffle(ctx.collection.begin(), ctx.collection.end(), rng);
            CHECK(contrastive_loss(ctx).value == doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("context validation") {
    LossContext empty;
    CHECK_THROWS_AS(contrastive_loss(empty), EmptyQuerySet);
    auto ctx = one_pos_one_neg(0.8, 0.5);
    ctx.collection[0].label = PairLabel::negative;
    CHECK_THROWS_AS(contrastive_loss(ctx), InconsistentMining);
    auto dup = one_pos_one_neg(0.8, 0.5);
    dup.collection.push_back(dup.collection[1]);
    CHECK_THROWS_AS(contrastive_loss(dup), InconsistentMining);
}

TEST_CASE("build_loss_context assembles positives and each negative source") {
    // Batch: anchor 0 with neighbours 1, 2; another tuple 3 with neighbour 4.
    BatchFeatures batch;
    auto rng = derive_stream(44, {1});
    for (ImageId id = 0; id < 5; ++id) {
        auto raw = random_vector(4, rng);
        batch.add(id, raw, random_unit(4, rng));
    }
    std::vector<UnitVector> bank_entries;
    for (int i = 0; i < 10; ++i) bank_entries.push_back(random_unit(4, rng));
    MemoryBank aug(BankKind::augmented, bank_entries);

    MiningResult m;
    m.batch_positive_ids = {1};
    m.batch_negative_ids = {2};
    m.memory_positive_ids = {5};
    m.memory_negative_ids = {6, 7};
    const std::vector<ImageId> pool{1, 2, 5, 6, 7};
    const std::vector<ImageId> random_ids{8, 9, 5};

    auto ids_with = [](const LossContext& c, PairLabel label) {
        std::vector<ImageId> out;
        for (const auto& e : c.collection) {
            if (e.label == label) out.push_back(e.item.id);
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    const auto none = build_loss_context(0, m, batch, pool, aug, NegativeSource::none, random_ids);
    CHECK(none.query_members.size() == 3);
    CHECK(ids_with(none, PairLabel::positive) == std::vector<ImageId>{0, 1, 5});
    CHECK(ids_with(none, PairLabel::negative) == std::vector<ImageId>{2, 3, 4});
    CHECK(none.query_members[0].grad_enabled());
    CHECK_FALSE(none.query_members[2].grad_enabled());
    CHECK(none.query_members[2].feature == aug.at(5));

    const auto rnd = build_loss_context(0, m, batch, pool, aug, NegativeSource::random_memory, random_ids);
    CHECK(ids_with(rnd, PairLabel::negative) == std::vector<ImageId>{2, 3, 4, 8, 9});

    const auto pooled = build_loss_context(0, m, batch, pool, aug, NegativeSource::candidate_pool, random_ids);
    CHECK(ids_with(pooled, PairLabel::negative) == std::vector<ImageId>{2, 3, 4, 6, 7});

    MiningResult clash = m;
    clash.memory_positive_ids = {3};
    CHECK_THROWS_AS(build_loss_context(0, clash, batch, pool, aug, NegativeSource::none, {}), InconsistentMining);
}

TEST_CASE("memory features never feed weight gradients") {
    auto rng = derive_stream(45, {1});
    auto g = random_grad_instance(rng);
    g.fixed.push_back(normalize(project(g.state, g.inputs[0])));
    g.fixed_labels.push_back(PairLabel::positive);
    const auto ctx = context_for(g, g.state);
    const auto report = contrastive_loss(ctx);
    for (std::size_t j = 0; j < g.fixed.size(); ++j) {
        CHECK(report.grads.count(static_cast<ImageId>(g.inputs.size() + j)) == 0);
    }
    // Moving a bank entry moves the value; weight gradients still only see batch inputs.
    auto moved = g;
    moved.fixed.back() = random_unit(g.state.config.embed_dim, rng);
    CHECK(contrastive_loss(context_for(moved, moved.state)).value != report.value);
    CHECK(relative_error(analytic_weight_grad(moved), numeric_weight_grad(moved)) < 1e-4);
}
