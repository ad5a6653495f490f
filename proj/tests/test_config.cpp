#include "helpers.hpp"
#include "insclr/config.hpp"
#include "insclr/error.hpp"

#include <doctest.h>
#include <fstream>

using namespace insclr;
using namespace insclr::testing;

namespace {

std::string message_of(const std::string& text, std::span<const std::string> overrides = {}) {
    try {
        parse_config_text(text, overrides);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("an empty object yields the defaults") {
    const auto cfg = parse_config_text("{}");
    auto def = default_run_config(0);
    def.trainer.lr_schedule = default_lr_schedule(def.trainer.steps_per_round, def.trainer.rounds, def.adam.lr);
    CHECK(config_echo(cfg) == config_echo(def));
    CHECK(cfg.pool.pool_size == def.pool.pool_size);
    CHECK(cfg.encoder.input_dim == cfg.dataset.input_dim);
    CHECK_FALSE(cfg.trainer.lr_schedule.empty());
}

TEST_CASE("comments are accepted") {
    const auto cfg = parse_config_text("// top\n{ /* inline */ \"seed\": 4 }\n");
    CHECK(cfg.seed == 4);
}

TEST_CASE("section seeds follow the top-level seed unless set") {
    const auto cfg = parse_config_text(R"({"seed": 10, "trainer": {"seed": 77}})");
    CHECK(cfg.dataset.seed == 10);
    CHECK(cfg.encoder.seed == 1010);
    CHECK(cfg.trainer.seed == 77);
    CHECK(cfg.eval.seed == 3010);
}

TEST_CASE("unknown keys are named") {
    const auto msg = message_of(R"({"pool": {"poool_size": 5}})");
    CHECK(msg.find("ValidationError") == 0);
    CHECK(msg.find("poool_size") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text(R"({"pool": {"poool_size": 5}})"), ValidationError);
}

TEST_CASE("N_b below one is rejected") {
    const auto msg = message_of(R"({"trainer": {"n_b": 0}})");
    CHECK(msg.find("N_b >= 1") != std::string::npos);
}

TEST_CASE("every problem is listed") {
    const auto msg = message_of(R"({"trainer": {"n_b": 0}, "eval": {"query_fraction": 2.0}, "bogus": 1})");
    CHECK(msg.find("3 problem(s)") != std::string::npos);
}

TEST_CASE("malformed text reports a position") {
    const auto msg = message_of("{\n  \"seed\": 1,\n  \"pool\": {\"pool_size\" 5}\n}");
    CHECK(msg.find("ParseError") == 0);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text("[1, 2]"), ParseError);
}

TEST_CASE("wrong types are validation errors") {
    CHECK_THROWS_AS(parse_config_text(R"({"seed": "one"})"), ValidationError);
    CHECK_THROWS_AS(parse_config_text(R"({"trainer": {"negative_source": "somewhere"}})"), ValidationError);
}

TEST_CASE("dotted overrides and the seed override") {
    const std::vector<std::string> overrides{"pool.pool_size=20", "trainer.batch_mining.strategy=nn",
                                             "trainer.memory_mining.k=3", "output_dir=runs/x"};
    const auto cfg = parse_config_text(R"({"pool": {"pool_size": 40}})", overrides, 9);
    CHECK(cfg.pool.pool_size == 20);
    CHECK(cfg.trainer.batch_mining.strategy == BatchStrategy::nn);
    CHECK(cfg.trainer.memory_mining.k == 3);
    CHECK(cfg.output_dir == "runs/x");
    CHECK(cfg.seed == 9);
    CHECK(cfg.dataset.seed == 9);
    const std::vector<std::string> bad{"noequals"};
    CHECK_THROWS_AS(parse_config_text("{}", bad), ValidationError);
}

TEST_CASE("the echo round-trips") {
    const std::vector<std::string> overrides{"trainer.memory_mining.aggregation=max", "dataset.layout=chain",
                                             "eval.num_views=2", "trainer.memory_mining.sparsify_threshold=0.3"};
    const auto cfg = parse_config_text("{}", overrides, 5);
    const auto echo = config_echo(cfg);
    CHECK(config_echo(parse_config_text(echo)) == echo);
}

TEST_CASE("relative paths resolve against the config file") {
    const auto dir = scratch_dir("config_paths");
    {
        std::ofstream out(dir / "run.json");
        out << R"({"encoder": {"warm_start": "missing.ckpt"}})";
    }
    try {
        parse_config(dir / "run.json");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find((dir / "missing.ckpt").string()) != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(dir / "absent.json"), IoError);
}
