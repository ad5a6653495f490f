#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "insclr/analytics.hpp"
#include "insclr/candidates.hpp"
#include "insclr/config.hpp"
#include "insclr/error.hpp"
#include "insclr/evaluator.hpp"
#include "insclr/experiment.hpp"

#include <sstream>

namespace py = pybind11;
using namespace insclr;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<UnitVector> rows_of(const Array& features) {
    if (features.ndim() != 2) {
        throw InvalidInput("features must be a 2-d array");
    }
    const auto n = static_cast<std::size_t>(features.shape(0));
    const auto d = static_cast<std::size_t>(features.shape(1));
    const double* data = features.data();
    std::vector<UnitVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(normalize(std::vector<double>(data + i * d, data + (i + 1) * d)));
    }
    return out;
}

py::dict history_dict(const TrainingHistory& history) {
    std::vector<std::size_t> step, round;
    std::vector<double> loss, lr, n_batch, n_mem;
    std::vector<std::optional<double>> batch_prec, mem_prec;
    for (const auto& r : history) {
        step.push_back(r.step);
        round.push_back(r.round);
        loss.push_back(r.loss);
        lr.push_back(r.lr);
        n_batch.push_back(r.n_batch_pos);
        n_mem.push_back(r.n_mem_pos);
        batch_prec.push_back(r.batch_precision);
        mem_prec.push_back(r.mem_precision);
    }
    py::dict d;
    d["step"] = step;
    d["round"] = round;
    d["loss"] = loss;
    d["lr"] = lr;
    d["n_batch_pos"] = n_batch;
    d["n_mem_pos"] = n_mem;
    d["batch_precision"] = batch_prec;
    d["mem_precision"] = mem_prec;
    return d;
}

py::dict report_dict(const EvalReport& r) {
    py::dict d;
    d["map"] = r.map;
    d["num_queries"] = r.num_queries;
    d["chance_level"] = r.chance_level;
    d["per_class_ap"] = r.per_class_ap;
    return d;
}

} // namespace

PYBIND11_MODULE(_insclr, m) {
    m.doc() = "Instance-level contrastive learning with pseudo-positive mining on synthetic embeddings";

    static py::exception<Error> error(m, "InsclrError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            error(e.what());
        }
    });

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("seed", &RunConfig::seed)
        .def_property(
            "output_dir", [](const RunConfig& c) { return c.output_dir.string(); },
            [](RunConfig& c, const std::string& p) { c.output_dir = p; })
        .def("echo", &config_echo, "The resolved configuration as JSON text.");

    m.def("default_config", &default_run_config, py::arg("seed") = 0, "The built-in desk-scale configuration.");
    m.def(
        "parse_config",
        [](const std::string& text, const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed) {
            return parse_config_text(text, overrides, seed);
        },
        py::arg("text") = "{}", py::arg("overrides") = std::vector<std::string>{}, py::arg("seed") = py::none(),
        "Parse JSON config text with dotted key=value overrides.");

    m.def(
        "run_experiment",
        [](const RunConfig& cfg) {
            RunSummary s;
            {
                py::gil_scoped_release release;
                s = run_experiment(cfg);
            }
            py::dict d;
            d["initial_map"] = s.initial_map;
            d["final_map"] = s.final_map;
            d["report"] = report_dict(s.final_report);
            d["history"] = history_dict(s.history);
            return d;
        },
        py::arg("config"), "Generate, evaluate, train and evaluate again in memory.");

    m.def(
        "run_command",
        [](const std::string& command, const RunConfig& cfg) {
            std::ostringstream log, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_command(command, cfg, log, err);
            }
            return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("command"), py::arg("config"), "Run one CLI subcommand; returns (exit_code, log, errors).");

    m.def(
        "generate_dataset",
        [](const RunConfig& cfg) {
            const auto ds = load_or_generate_dataset(cfg);
            const auto n = static_cast<py::ssize_t>(ds.size());
            const auto d = static_cast<py::ssize_t>(cfg.dataset.input_dim);
            Array base({n, d});
            auto view = base.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < n; ++i) {
                const auto& v = ds.records()[static_cast<std::size_t>(i)].base;
                for (py::ssize_t k = 0; k < d; ++k) view(i, k) = v[static_cast<std::size_t>(k)];
            }
            return py::make_tuple(base, GroundTruth::labels(ds));
        },
        py::arg("config"), "Clean base vectors (n x input_dim) and their class labels.");

    m.def(
        "candidate_pool",
        [](const Array& features, std::size_t pool_size) {
            const auto pool = build_candidate_pool(rows_of(features), PoolConfig{pool_size, 0});
            const auto n = static_cast<py::ssize_t>(pool.size());
            const auto p = static_cast<py::ssize_t>(pool_size);
            py::array_t<std::int64_t> ids({n, p});
            Array sims({n, p});
            auto iv = ids.mutable_unchecked<2>();
            auto sv = sims.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < n; ++i) {
                const auto row = pool.neighbors(static_cast<ImageId>(i));
                for (py::ssize_t k = 0; k < p; ++k) {
                    iv(i, k) = row[static_cast<std::size_t>(k)].id;
                    sv(i, k) = row[static_cast<std::size_t>(k)].similarity;
                }
            }
            return py::make_tuple(ids, sims);
        },
        py::arg("features"), py::arg("pool_size"),
        "Top-P cosine neighbours of every row (rows are normalized first), ties broken by id.");

    m.def(
        "evaluate",
        [](const Array& features, const std::vector<int>& labels, double query_fraction, std::uint64_t seed) {
            EvalConfig cfg;
            cfg.query_fraction = query_fraction;
            cfg.seed = seed;
            cfg.validate();
            return report_dict(evaluate_features(rows_of(features), labels, cfg));
        },
        py::arg("features"), py::arg("labels"), py::arg("query_fraction") = 0.1, py::arg("seed") = 0,
        "Retrieval mAP with a seeded per-class query split.");

    m.def(
        "average_precision",
        [](const std::vector<bool>& relevance, std::size_t num_relevant) {
            const std::vector<std::uint8_t> rel(relevance.begin(), relevance.end());
            return average_precision(rel, num_relevant);
        },
        py::arg("relevance"), py::arg("num_relevant"));
}
