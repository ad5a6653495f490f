#include "insclr/config.hpp"

#include "insclr/error.hpp"

#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace insclr {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kEncoderSeedOffset = 1000;
constexpr std::uint64_t kTrainerSeedOffset = 2000;
constexpr std::uint64_t kEvalSeedOffset = 3000;

void derive_seeds(RunConfig& cfg) {
    cfg.dataset.seed = cfg.seed;
    cfg.encoder.seed = cfg.seed + kEncoderSeedOffset;
    cfg.trainer.seed = cfg.seed + kTrainerSeedOffset;
    cfg.eval.seed = cfg.seed + kEvalSeedOffset;
}

// Reads the keys of one JSON object, recording type errors and unknown keys
// instead of stopping at the first one.
class Section {
public:
    Section(const json* obj, std::string prefix, std::vector<std::string>& problems)
        : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {
        if (obj_ && !obj_->is_object()) {
            problems_.push_back(fmt::format("'{}' must be an object", prefix_));
            obj_ = nullptr;
        }
    }

    ~Section() {
        if (!obj_) return;
        for (const auto& [key, value] : obj_->items()) {
            if (!seen_.count(key)) {
                problems_.push_back(fmt::format("unknown key '{}'", path(key)));
            }
        }
    }

    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_ && obj_->contains(key);
    }

    template <typename T>
    bool get(const std::string& key, T& dst) {
        if (!has(key)) return false;
        try {
            dst = obj_->at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            problems_.push_back(fmt::format("'{}' has the wrong type ({})", path(key), obj_->at(key).type_name()));
            return false;
        }
    }

    template <typename T>
    void get_optional(const std::string& key, std::optional<T>& dst) {
        if (!has(key)) return;
        if (obj_->at(key).is_null()) {
            dst.reset();
            return;
        }
        T value{};
        if (get(key, value)) dst = value;
    }

    /// Parse an enum-valued string through `convert`.
    template <typename E, typename F>
    void get_enum(const std::string& key, E& dst, F convert) {
        std::string name;
        if (!get(key, name)) return;
        try {
            dst = convert(name);
        } catch (const InvalidConfig& e) {
            problems_.push_back(fmt::format("'{}': {}", path(key), e.what()));
        }
    }

    Section child(const std::string& key) {
        const bool present = has(key);
        return Section(present ? &obj_->at(key) : nullptr, path(key), problems_);
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

private:
    const json* obj_;
    std::string prefix_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError(fmt::format("override '{}' is not key=value", assignment));
    }
    const std::string key = assignment.substr(0, eq);
    json* node = &doc;
    std::stringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!node->contains(path[i]) || !(*node)[path[i]].is_object()) {
            (*node)[path[i]] = json::object();
        }
        node = &(*node)[path[i]];
    }
    (*node)[path.back()] = parse_value(assignment.substr(eq + 1));
}

RunConfig read_config(const json& doc, const std::filesystem::path& base_dir) {
    std::vector<std::string> problems;
    RunConfig cfg = default_run_config();
    {
        Section top(&doc, "", problems);
        top.get("seed", cfg.seed);
        derive_seeds(cfg);
        std::string out_dir;
        if (top.get("output_dir", out_dir)) cfg.output_dir = out_dir;
        top.get("analytics", cfg.analytics);
        top.get("curve_window", cfg.curve_window);

        {
            Section ds = top.child("dataset");
            auto& d = cfg.dataset;
            ds.get("num_classes", d.num_classes);
            ds.get("instances_per_class", d.instances_per_class);
            ds.get("input_dim", d.input_dim);
            ds.get("sigma_intra", d.sigma_intra);
            ds.get("sigma_aug", d.sigma_aug);
            ds.get("drop_prob", d.drop_prob);
            ds.get("num_aux_views", d.num_aux_views);
            ds.get("seed", d.seed);
            ds.get("nuisance_dim", d.nuisance_dim);
            ds.get("sigma_nuisance", d.sigma_nuisance);
            ds.get("hard_fraction", d.hard_fraction);
            ds.get("hard_scale", d.hard_scale);
            ds.get_optional("sigma_aux", d.sigma_aux);
            ds.get_enum("layout", d.layout, class_layout_from_string);
            ds.get("chain_arc", d.chain_arc);
            std::optional<std::string> ff;
            ds.get_optional("feature_file", ff);
            if (ff) cfg.feature_file = base_dir / *ff;
        }
        {
            Section en = top.child("encoder");
            en.get("embed_dim", cfg.encoder.embed_dim);
            en.get("init_scale", cfg.encoder.init_scale);
            en.get("seed", cfg.encoder.seed);
            std::optional<std::string> ws;
            en.get_optional("warm_start", ws);
            if (ws) cfg.warm_start = base_dir / *ws;
            Section ad = en.child("adam");
            ad.get("lr", cfg.adam.lr);
            ad.get("beta1", cfg.adam.beta1);
            ad.get("beta2", cfg.adam.beta2);
            ad.get("eps", cfg.adam.eps);
            ad.get("weight_decay", cfg.adam.weight_decay);
        }
        {
            Section pl = top.child("pool");
            pl.get("pool_size", cfg.pool.pool_size);
        }
        {
            Section tr = top.child("trainer");
            auto& t = cfg.trainer;
            tr.get("tuples_per_batch", t.tuples_per_batch);
            tr.get("n_b", t.batch_mining.n_b);
            tr.get("steps_per_round", t.steps_per_round);
            tr.get("rounds", t.rounds);
            tr.get("seed", t.seed);
            tr.get("gate", t.gate);
            tr.get("random_negatives", t.random_negatives);
            tr.get("multiscale_views", t.multiscale_views);
            tr.get_enum("negative_source", t.negative_source, negative_source_from_string);
            std::vector<std::pair<std::size_t, double>> schedule;
            if (tr.get("lr_schedule", schedule)) {
                t.lr_schedule.clear();
                for (const auto& [step, lr] : schedule) t.lr_schedule.push_back({step, lr});
            }
            {
                Section bm = tr.child("batch_mining");
                bm.get_enum("strategy", t.batch_mining.strategy, batch_strategy_from_string);
                bm.get("threshold", t.batch_mining.threshold);
            }
            {
                Section mm = tr.child("memory_mining");
                auto& m = t.memory_mining;
                mm.get_enum("aggregation", m.aggregation, aggregation_from_string);
                mm.get_enum("selection", m.selection, selection_rule_from_string);
                mm.get("k", m.k);
                mm.get("threshold", m.threshold);
                mm.get_optional("sparsify_threshold", m.sparsify_threshold);
                mm.get("iterations", m.iterations);
                mm.get_enum("query_set_mode", m.mode, query_set_mode_from_string);
            }
        }
        {
            Section ev = top.child("eval");
            ev.get("num_views", cfg.eval.num_views);
            ev.get("query_fraction", cfg.eval.query_fraction);
            ev.get("seed", cfg.eval.seed);
            ev.get("per_query_csv", cfg.per_query_csv);
        }
        {
            Section ab = top.child("ablate");
            ab.get("seeds", cfg.ablate.seeds);
        }
    } // unknown keys reported as sections close

    cfg.encoder.input_dim = cfg.dataset.input_dim;
    if (cfg.trainer.lr_schedule.empty()) {
        cfg.trainer.lr_schedule = default_lr_schedule(cfg.trainer.steps_per_round, cfg.trainer.rounds, cfg.adam.lr);
    }
    cfg.eval.keep_rankings = cfg.per_query_csv;

    auto collect = [&](auto&& fn) {
        try {
            fn();
        } catch (const InvalidConfig& e) {
            problems.push_back(e.what());
        }
    };
    if (cfg.trainer.batch_mining.n_b < 1) {
        problems.push_back("trainer.n_b: N_b >= 1 is required");
    }
    if (!cfg.feature_file) {
        collect([&] { cfg.dataset.validate(); });
        collect([&] { cfg.encoder.validate(); });
        const std::size_t n = cfg.dataset.num_classes * cfg.dataset.instances_per_class;
        if (cfg.pool.pool_size < 1 || cfg.pool.pool_size + 1 > n) {
            problems.push_back(fmt::format("pool.pool_size {} must lie in [1, {}]", cfg.pool.pool_size, n - 1));
        }
        if (cfg.trainer.batch_mining.n_b >= 1) {
            collect([&] { cfg.trainer.validate(n, cfg.pool.pool_size); });
        }
        if (cfg.eval.num_views > cfg.dataset.num_aux_views) {
            problems.push_back(fmt::format("eval.num_views {} exceeds dataset.num_aux_views {}", cfg.eval.num_views,
                                           cfg.dataset.num_aux_views));
        }
    } else if (!std::filesystem::exists(*cfg.feature_file)) {
        problems.push_back("dataset.feature_file not found: " + cfg.feature_file->string());
    }
    if (cfg.warm_start && !std::filesystem::exists(*cfg.warm_start)) {
        problems.push_back("encoder.warm_start not found: " + cfg.warm_start->string());
    }
    collect([&] { cfg.adam.validate(); });
    collect([&] { cfg.eval.validate(); });
    if (cfg.curve_window < 1) problems.push_back("curve_window must be >= 1");
    if (cfg.ablate.seeds.empty()) problems.push_back("ablate.seeds must not be empty");

    if (!problems.empty()) {
        throw ValidationError(fmt::format("{} problem(s):\n  {}", problems.size(), fmt::join(problems, "\n  ")));
    }
    return cfg;
}

RunConfig parse_impl(const std::string& text, std::span<const std::string> overrides,
                     std::optional<std::uint64_t> seed_override, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (doc.is_null()) doc = json::object();
    if (!doc.is_object()) {
        throw ParseError("top level of the config must be an object");
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    if (seed_override) doc["seed"] = *seed_override;
    return read_config(doc, base_dir);
}

} // namespace

RunConfig default_run_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    derive_seeds(cfg);
    // Desk benchmark: isotropic spread is small next to a shared nuisance
    // subspace, and about a third of the instances are outlier views whose
    // nearest neighbours mostly belong to other classes.
    cfg.dataset.sigma_intra = 0.06;
    cfg.dataset.nuisance_dim = 8;
    cfg.dataset.sigma_nuisance = 0.25;
    cfg.dataset.hard_fraction = 0.35;
    cfg.dataset.hard_scale = 3.0;
    cfg.encoder.input_dim = cfg.dataset.input_dim;
    cfg.adam.lr = 3e-3;
    cfg.trainer.steps_per_round = 600;
    return cfg;
}

RunConfig parse_config_text(const std::string& text, std::span<const std::string> overrides,
                            std::optional<std::uint64_t> seed_override) {
    return parse_impl(text, overrides, seed_override, std::filesystem::current_path());
}

RunConfig parse_config(const std::filesystem::path& path, std::span<const std::string> overrides,
                       std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::current_path();
    return parse_impl(ss.str(), overrides, seed_override, base);
}

std::string config_echo(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["analytics"] = c.analytics;
    j["curve_window"] = c.curve_window;
    const auto& d = c.dataset;
    j["dataset"] = {{"num_classes", d.num_classes},
                    {"instances_per_class", d.instances_per_class},
                    {"input_dim", d.input_dim},
                    {"sigma_intra", d.sigma_intra},
                    {"sigma_aug", d.sigma_aug},
                    {"drop_prob", d.drop_prob},
                    {"num_aux_views", d.num_aux_views},
                    {"seed", d.seed},
                    {"nuisance_dim", d.nuisance_dim},
                    {"sigma_nuisance", d.sigma_nuisance},
                    {"hard_fraction", d.hard_fraction},
                    {"hard_scale", d.hard_scale},
                    {"sigma_aux", d.sigma_aux ? json(*d.sigma_aux) : json(nullptr)},
                    {"layout", to_string(d.layout)},
                    {"chain_arc", d.chain_arc},
                    {"feature_file", c.feature_file ? json(c.feature_file->string()) : json(nullptr)}};
    j["encoder"] = {{"embed_dim", c.encoder.embed_dim},
                    {"init_scale", c.encoder.init_scale},
                    {"seed", c.encoder.seed},
                    {"warm_start", c.warm_start ? json(c.warm_start->string()) : json(nullptr)},
                    {"adam",
                     {{"lr", c.adam.lr},
                      {"beta1", c.adam.beta1},
                      {"beta2", c.adam.beta2},
                      {"eps", c.adam.eps},
                      {"weight_decay", c.adam.weight_decay}}}};
    j["pool"] = {{"pool_size", c.pool.pool_size}};
    const auto& t = c.trainer;
    json schedule = json::array();
    for (const auto& m : t.lr_schedule) schedule.push_back({m.step, m.lr});
    const auto& m = t.memory_mining;
    j["trainer"] = {
        {"tuples_per_batch", t.tuples_per_batch},
        {"n_b", t.batch_mining.n_b},
        {"steps_per_round", t.steps_per_round},
        {"rounds", t.rounds},
        {"lr_schedule", schedule},
        {"seed", t.seed},
        {"gate", t.gate},
        {"random_negatives", t.random_negatives},
        {"multiscale_views", t.multiscale_views},
        {"negative_source", to_string(t.negative_source)},
        {"batch_mining", {{"strategy", to_string(t.batch_mining.strategy)}, {"threshold", t.batch_mining.threshold}}},
        {"memory_mining",
         {{"aggregation", to_string(m.aggregation)},
          {"selection", to_string(m.selection)},
          {"k", m.k},
          {"threshold", m.threshold},
          {"sparsify_threshold", m.sparsify_threshold ? json(*m.sparsify_threshold) : json(nullptr)},
          {"iterations", m.iterations},
          {"query_set_mode", to_string(m.mode)}}}};
    j["eval"] = {{"num_views", c.eval.num_views},
                 {"query_fraction", c.eval.query_fraction},
                 {"seed", c.eval.seed},
                 {"per_query_csv", c.per_query_csv}};
    j["ablate"] = {{"seeds", c.ablate.seeds}};
    return j.dump(2) + "\n";
}

} // namespace insclr
