#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cesagan/error.hpp"
#include "cesagan/evaluation.hpp"
#include "cesagan/json_io.hpp"
#include "cesagan/nn.hpp"
#include "cesagan/playability.hpp"
#include "cesagan/train.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace cesagan;
using nlohmann::json;

namespace {

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_python(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<std::string> rows_of(const LevelGrid& g) {
    std::vector<std::string> rows;
    std::istringstream s(serialize_level(g));
    for (std::string line; std::getline(s, line);) rows.push_back(line);
    return rows;
}

/// A trained generator plus what it was trained with.
struct Model {
    nn::ModelSnapshot snapshot;
    std::vector<LevelGrid> corpus;
    std::vector<IterationRecord> log;
    std::vector<RoundReport> rounds;

    std::vector<LevelGrid> generate(std::size_t count, std::uint64_t seed,
                                    const std::optional<std::vector<int>>& u) {
        std::optional<FeatureVector> fv;
        if (u) {
            if (u->size() != kTileCount) throw BadConfig("u needs exactly 8 counts");
            fv.emplace();
            std::copy(u->begin(), u->end(), fv->counts.begin());
        }
        Rng rng(seed);
        return nn::generate_levels(snapshot.params.generator, snapshot.conditioning_pool, fv, count, rng);
    }
};

Model train_model(const py::object& config, const std::vector<LevelGrid>& corpus) {
    const RunConfig cfg = config.is_none() ? RunConfig{} : run_config_from_json(from_python(config));
    std::vector<LevelGrid> levels = corpus.empty() ? load_corpus(cfg.corpus_dir) : corpus;
    py::gil_scoped_release release;
    Trainer trainer(levels, cfg.train, cfg.arch, cfg.bootstrap);
    trainer.run();
    return Model{nn::ModelSnapshot{trainer.params().clone(), trainer.corpus().human_features(), trainer.iteration()},
                 trainer.corpus().levels(), trainer.log(), trainer.rounds()};
}

}  // namespace

PYBIND11_MODULE(cesagan, m) {
    m.doc() = "CESAGAN level generation: codec, playability, evaluation, training and sampling";

    // Translators are tried newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_ValueError);
    py::register_exception<BadConfig>(m, "BadConfig", PyExc_ValueError);
    py::register_exception<MissingCheckpoint>(m, "MissingCheckpoint", PyExc_FileNotFoundError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<LevelGrid>(m, "Level")
        .def(py::init([](const std::string& text) { return parse_level(text); }), py::arg("text"))
        .def_property_readonly("height", &LevelGrid::height)
        .def_property_readonly("width", &LevelGrid::width)
        .def_property_readonly("rows", &rows_of)
        .def("features", [](const LevelGrid& g) { return extract_features(g).counts; },
             "Tile counts in channel order w . + g 1 2 3 A")
        .def("__str__", &serialize_level)
        .def("__repr__", [](const LevelGrid& g) {
            return "Level(" + std::to_string(g.height()) + "x" + std::to_string(g.width()) + ")";
        })
        .def("__hash__", &level_hash)
        .def(py::self == py::self);

    m.def("parse_level", [](const std::string& text) { return parse_level(text); }, py::arg("text"));
    m.def("serialize_level", &serialize_level, py::arg("level"));
    m.def("load_level", &load_level, py::arg("path"));
    m.def("save_level", &save_level, py::arg("path"), py::arg("level"));
    m.def("load_corpus", &load_corpus, py::arg("directory"));
    m.def("hamming", &hamming, py::arg("a"), py::arg("b"));

    m.def("check_playability", [](const LevelGrid& g) { return to_python(to_json(check_playability(g))); },
          py::arg("level"));
    m.def(
        "evaluate",
        [](const std::vector<LevelGrid>& levels, const std::vector<LevelGrid>& reference, std::size_t threads) {
            EvalReport r;
            {
                py::gil_scoped_release release;
                r = evaluate_set(levels, reference, threads);
            }
            return to_python(to_json(r));
        },
        py::arg("levels"), py::arg("reference") = std::vector<LevelGrid>{}, py::arg("threads") = 0);

    py::class_<Model>(m, "Model")
        .def("generate", &Model::generate, py::arg("count"), py::arg("seed") = 0, py::arg("u") = py::none(),
             py::call_guard<py::gil_scoped_release>())
        .def("save",
             [](Model& self, const std::filesystem::path& path) {
                 nn::save_model(path, self.snapshot.params, self.snapshot.conditioning_pool, self.snapshot.iteration);
             },
             py::arg("path"))
        .def_property_readonly("iteration", [](const Model& self) { return self.snapshot.iteration; })
        .def_property_readonly("arch", [](const Model& self) {
            return to_python(json::parse(nn::arch_to_json(self.snapshot.params.arch)));
        })
        .def_readonly("corpus", &Model::corpus)
        .def_property_readonly("log", [](const Model& self) {
            json a = json::array();
            for (const auto& r : self.log) a.push_back(to_json(r));
            return to_python(a);
        })
        .def_property_readonly("rounds", [](const Model& self) {
            json a = json::array();
            for (const auto& r : self.rounds) a.push_back(to_json(r));
            return to_python(a);
        });

    m.def("train", &train_model, py::arg("config") = py::none(), py::arg("corpus") = std::vector<LevelGrid>{},
          "Train from a run-config dict (same schema as the CLI config file). An empty corpus loads "
          "paths.corpus_dir.");
    m.def(
        "load_model",
        [](const std::filesystem::path& path) {
            nn::ModelSnapshot s = nn::load_model(path);
            return Model{std::move(s), {}, {}, {}};
        },
        py::arg("path"));

    m.def("render_ascii", &cli::render_ascii, py::arg("level"));
    m.def("write_png", &cli::write_png, py::arg("path"), py::arg("level"), py::arg("scale") = 16);
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one cesagan subcommand; returns (exit_code, stdout, stderr).");
}
