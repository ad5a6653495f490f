#include "helpers.hpp"
#include "insclr/error.hpp"
#include "insclr/evaluator.hpp"

#include <algorithm>
#include <doctest.h>
#include <fstream>

using namespace insclr;
using namespace insclr::testing;

namespace {

double brute_force_ap(const std::vector<std::uint8_t>& rel, std::size_t num_relevant) {
    double sum = 0.0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
        if (!rel[k]) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j <= k; ++j) hits += rel[j];
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(num_relevant);
}

// mAP written independently of the evaluator: the gallery is visited in a
// shuffled order, then stably sorted by similarity alone.
double oracle_map(std::span<const UnitVector> f, std::span<const int> labels, const EvalConfig& cfg, Rng& rng) {
    const auto split = split_queries(labels, cfg.query_fraction, cfg.seed);
    double total = 0.0;
    for (auto q : split.queries) {
        auto gallery = split.gallery;
        std::shuffle(gallery.begin(), gallery.end(), rng);
        std::stable_sort(gallery.begin(), gallery.end(),
                         [&](ImageId a, ImageId b) { return cosine(f[q], f[a]) > cosine(f[q], f[b]); });
        std::vector<std::uint8_t> rel;
        std::size_t r = 0;
        for (auto g : gallery) {
            rel.push_back(labels[g] == labels[q]);
            r += rel.back();
        }
        total += brute_force_ap(rel, r);
    }
    return total / static_cast<double>(split.queries.size());
}

std::vector<std::vector<double>> random_rotation(std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> q;
    for (std::size_t i = 0; i < dim; ++i) {
        auto v = random_vector(dim, rng);
        for (const auto& b : q) axpy(-dot(v, b), b, v);
        q.push_back(normalize(v).vector());
    }
    return q;
}

UnitVector rotate(const std::vector<std::vector<double>>& q, const UnitVector& v) {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = dot(q[i], v.values());
    return normalize(out);
}

} // namespace

TEST_CASE("average precision: worked lists") {
    const std::vector<std::uint8_t> perfect{1, 1, 0};
    const std::vector<std::uint8_t> second{0, 1};
    const std::vector<std::uint8_t> split{1, 0, 1};
    CHECK(average_precision(perfect, 2) == 1.0);
    CHECK(average_precision(second, 1) == 0.5);
    CHECK(average_precision(split, 2) == doctest::Approx(0.83333).epsilon(1e-5));
    CHECK_THROWS_AS(average_precision(second, 0), InvalidInput);
    CHECK_THROWS_AS(average_precision(perfect, 1), InvalidInput);
}

TEST_CASE("average precision equals the brute-force definition on every list up to length 8") {
    std::size_t checked = 0;
    for (std::size_t len = 1; len <= 8; ++len) {
        for (std::uint32_t mask = 0; mask < (1u << len); ++mask) {
            std::vector<std::uint8_t> rel(len);
            std::size_t hits = 0;
            for (std::size_t k = 0; k < len; ++k) {
                rel[k] = (mask >> k) & 1u;
                hits += rel[k];
            }
            for (std::size_t r = std::max<std::size_t>(hits, 1); r <= hits + 2; ++r) {
                REQUIRE(average_precision(rel, r) == doctest::Approx(brute_force_ap(rel, r)).epsilon(1e-15));
                ++checked;
            }
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("query split keeps a query and a gallery item per class") {
    std::vector<int> labels;
    for (int c = 0; c < 7; ++c) {
        for (int k = 0; k < 2 + c; ++k) labels.push_back(c);
    }
    for (double fraction : {0.01, 0.1, 0.5, 0.99}) {
        const auto s = split_queries(labels, fraction, 5);
        std::map<int, int> q, g;
        for (auto id : s.queries) ++q[labels[id]];
        for (auto id : s.gallery) ++g[labels[id]];
        for (int c = 0; c < 7; ++c) {
            CHECK(q[c] >= 1);
            CHECK(g[c] >= 1);
        }
        CHECK(s.queries.size() + s.gallery.size() == labels.size());
    }
    const std::vector<int> singleton{0, 0, 1};
    CHECK_THROWS_AS(split_queries(singleton, 0.1, 1), InvalidConfig);
}

TEST_CASE("separated clusters give perfect mAP") {
    std::vector<UnitVector> f;
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c) {
        for (int k = 0; k < 5; ++k) {
            f.push_back(basis(4, c));
            labels.push_back(c);
        }
    }
    const auto r = evaluate_features(f, labels, EvalConfig{});
    CHECK(r.map == 1.0);
    CHECK(r.per_class_ap.size() == 4);
}

TEST_CASE("six-image instance matches the exhaustive computation") {
    // Class 0 sits near e1, class 1 near e2, with one class-1 image leaning towards e1.
    const std::vector<UnitVector> f{unit({1.0, 0.05}), unit({1.0, 0.2}), unit({1.0, 0.4}),
                                    unit({0.1, 1.0}),  unit({0.3, 1.0}), unit({1.0, 0.3})};
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    EvalConfig cfg;
    cfg.seed = 2;
    const auto r = evaluate_features(f, labels, cfg);
    auto rng = derive_stream(1, {1});
    CHECK(r.map == doctest::Approx(oracle_map(f, labels, cfg, rng)).epsilon(1e-15));
    CHECK(r.num_queries == 2);
}

TEST_CASE("mAP agrees with the oracle and is invariant to rotation") {
    auto rng = derive_stream(51, {1});
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<UnitVector> f;
        std::vector<int> labels;
        const std::size_t dim = 6;
        std::vector<UnitVector> centres;
        for (int c = 0; c < 8; ++c) centres.push_back(random_unit(dim, rng));
        for (int c = 0; c < 8; ++c) {
            for (int k = 0; k < 6; ++k) {
                auto v = centres[c].vector();
                axpy(0.6, random_vector(dim, rng), v);
                f.push_back(normalize(v));
                labels.push_back(c);
            }
        }
        EvalConfig cfg;
        cfg.query_fraction = 0.3;
        cfg.seed = 10 + trial;
        const auto r = evaluate_features(f, labels, cfg);
        CHECK(r.map >= 0.0);
        CHECK(r.map <= 1.0);
        CHECK(r.map == doctest::Approx(oracle_map(f, labels, cfg, rng)).epsilon(1e-12));

        const auto q = random_rotation(dim, rng);
        std::vector<UnitVector> rotated;
        for (const auto& v : f) rotated.push_back(rotate(q, v));
        CHECK(evaluate_features(rotated, labels, cfg).map == doctest::Approx(r.map).epsilon(1e-12));
    }
}

TEST_CASE("random features score near chance") {
    auto rng = derive_stream(52, {1});
    std::vector<UnitVector> f;
    std::vector<int> labels;
    for (int c = 0; c < 50; ++c) {
        for (int k = 0; k < 20; ++k) {
            f.push_back(random_unit(32, rng));
            labels.push_back(c);
        }
    }
    const auto r = evaluate_features(f, labels, EvalConfig{});
    CHECK(r.chance_level > 0.0);
    CHECK(r.map < 3.0 * r.chance_level);
}

TEST_CASE("multiview features") {
    DatasetConfig dc;
    dc.num_classes = 2;
    dc.instances_per_class = 3;
    dc.input_dim = 8;
    dc.seed = 6;
    const auto ds = generate_dataset(dc);
    EncoderConfig ec;
    ec.input_dim = 8;
    ec.embed_dim = 4;
    const auto st = init_encoder(ec);
    const auto& rec = ds.records()[1];

    CHECK(multiview_feature(st, rec, dc, 1) == encode(st, clean_view(rec)));

    std::vector<UnitVector> views;
    for (std::size_t v = 0; v < 3; ++v) views.push_back(encode(st, aux_view(rec, dc, v)));
    const auto fused = multiview_feature(st, rec, dc, 3);
    const auto expected = normalized_mean(views);
    for (std::size_t k = 0; k < fused.dim(); ++k) CHECK(fused[k] == doctest::Approx(expected[k]).epsilon(1e-14));
    CHECK(std::abs(l2_norm(fused.values()) - 1.0) < 1e-5);

    auto same = dc;
    same.sigma_aux = 0.0;
    const auto single = multiview_feature(st, rec, same, 1);
    const auto repeated = multiview_feature(st, rec, same, 3);
    for (std::size_t k = 0; k < single.dim(); ++k) CHECK(repeated[k] == doctest::Approx(single[k]).epsilon(1e-12));

    CHECK_THROWS_AS(multiview_feature(st, rec, dc, 4), IndexOutOfRange);
}

TEST_CASE("rankings CSV lists every query") {
    std::vector<UnitVector> f;
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < 4; ++k) {
            f.push_back(basis(3, c));
            labels.push_back(c);
        }
    }
    EvalConfig cfg;
    cfg.keep_rankings = true;
    const auto r = evaluate_features(f, labels, cfg);
    const auto dir = scratch_dir("rankings");
    write_rankings_csv(r, dir / "r.csv");
    std::ifstream in(dir / "r.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == r.num_queries + 1);
}
