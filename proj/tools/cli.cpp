#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cesagan/error.hpp"
#include "cesagan/evaluation.hpp"
#include "cesagan/nn.hpp"
#include "cesagan/playability.hpp"
#include "cesagan/train.hpp"

namespace cesagan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) throw IoError("cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

const char* origin_name(Origin o) { return o == Origin::Human ? "human" : "bootstrapped"; }

bool same_path(const fs::path& a, const fs::path& b) {
    std::error_code ec;
    return fs::exists(a) && fs::exists(b) && fs::equivalent(a, b, ec);
}

class RunWriter : public TrainObserver {
public:
    RunWriter(const fs::path& log_path, fs::path checkpoint, std::size_t total, std::ostream* progress)
        : log_(log_path), checkpoint_(std::move(checkpoint)), total_(total), progress_(progress) {
        if (!log_) throw IoError("cannot write " + log_path.string());
    }

    void on_iteration(const IterationRecord& r) override {
        log_ << to_json(r).dump() << '\n';
        last_ = r;
    }
    void on_round(const RoundReport& r) override { log_ << to_json(r).dump() << '\n'; }
    void on_checkpoint(std::size_t iteration, nn::NetworkParams& params, const CorpusState& corpus) override {
        nn::save_model(checkpoint_, params, corpus.human_features(), iteration);
        log_.flush();
        if (progress_)
            *progress_ << "iteration " << iteration << "/" << total_ << " loss_d " << last_.loss_d << " loss_g "
                       << last_.loss_g << " corpus " << corpus.size() << '\n';
    }

private:
    std::ofstream log_;
    fs::path checkpoint_;
    std::size_t total_;
    std::ostream* progress_;
    IterationRecord last_;
};

struct TrainArgs {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> batch_size;
    std::optional<double> learning_rate;
    std::optional<std::size_t> checkpoint_every;
    std::optional<fs::path> corpus_dir;
    std::optional<fs::path> output_dir;
    std::optional<fs::path> checkpoint;
    std::optional<std::size_t> cadence;
    bool no_bootstrap = false;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    RunConfig cfg = a.config ? load_run_config(*a.config) : RunConfig{};
    if (a.seed) cfg.train.seed = *a.seed;
    if (a.iterations) cfg.train.total_iterations = *a.iterations;
    if (a.batch_size) cfg.train.batch_size = *a.batch_size;
    if (a.learning_rate) cfg.train.learning_rate = *a.learning_rate;
    if (a.checkpoint_every) cfg.train.checkpoint_every = *a.checkpoint_every;
    if (a.corpus_dir) cfg.corpus_dir = *a.corpus_dir;
    if (a.checkpoint) cfg.checkpoint = *a.checkpoint;
    if (a.no_bootstrap) cfg.bootstrap.reset();
    if (a.cadence) {
        if (!cfg.bootstrap) throw BadConfig("--cadence given with bootstrapping disabled");
        cfg.bootstrap->cadence = *a.cadence;
    }
    cfg.output_dir = resolve_out_dir(a.output_dir, cfg.output_dir);
    const fs::path checkpoint = cfg.checkpoint.empty() ? cfg.output_dir / "checkpoint.bin" : cfg.checkpoint;
    cfg.train.validate();
    if (cfg.bootstrap) cfg.bootstrap->validate();
    if (same_path(cfg.output_dir, cfg.corpus_dir)) throw BadConfig("output_dir must differ from corpus_dir");

    std::vector<LevelGrid> corpus = load_corpus(cfg.corpus_dir);
    ensure_dir(cfg.output_dir);
    if (checkpoint.has_parent_path()) ensure_dir(checkpoint.parent_path());
    write_text(cfg.output_dir / "effective_config.json", to_json(cfg).dump(2) + "\n");

    Trainer trainer(std::move(corpus), cfg.train, cfg.arch, cfg.bootstrap);
    RunWriter writer(cfg.output_dir / "train_log.jsonl", checkpoint, cfg.train.total_iterations,
                     a.quiet ? nullptr : &err);
    trainer.run(&writer);
    nn::save_model(checkpoint, trainer.params(), trainer.corpus().human_features(), trainer.iteration());
    write_text(cfg.output_dir / "corpus.json", corpus_manifest(trainer.corpus()).dump(2) + "\n");

    json summary = {{"command", "train"},
                    {"output_dir", cfg.output_dir.string()},
                    {"checkpoint", checkpoint.string()},
                    {"iterations", trainer.iteration()},
                    {"corpus_size", trainer.corpus().size()},
                    {"human_levels", trainer.corpus().human_count()},
                    {"bootstrap_rounds", trainer.rounds().size()}};
    if (!trainer.log().empty()) summary["final"] = to_json(trainer.log().back());
    out << summary.dump(2) << '\n';
    return kOk;
}

struct GenerateArgs {
    fs::path checkpoint;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    std::optional<std::string> u;
    std::optional<fs::path> u_from;
    std::optional<fs::path> out_dir;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (a.u && a.u_from) throw BadConfig("--u and --u-from are mutually exclusive");
    if (a.count == 0) throw BadConfig("--count must be positive");
    nn::ModelSnapshot model = nn::load_model(a.checkpoint);
    std::optional<FeatureVector> u;
    if (a.u) u = parse_feature_override(*a.u);
    if (a.u_from) u = extract_features(load_level(*a.u_from));
    const std::size_t cells = model.params.arch.cells();
    if (u && static_cast<std::size_t>(u->total()) != cells)
        throw BadConfig("feature override must sum to " + std::to_string(cells) + " tiles, got " +
                        std::to_string(u->total()));

    Rng rng(a.seed);
    const auto levels = nn::generate_levels(model.params.generator, model.conditioning_pool, u, a.count, rng);
    const fs::path dir = resolve_out_dir(a.out_dir, "generated");
    ensure_dir(dir);
    json files = json::array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const fs::path p = dir / generated_level_name(a.seed, i);
        save_level(p, levels[i]);
        files.push_back(p.string());
    }
    out << json{{"command", "generate"}, {"seed", a.seed}, {"count", levels.size()}, {"files", files}}.dump(2)
        << '\n';
    return kOk;
}

struct CheckArgs {
    std::vector<fs::path> paths;
    std::size_t threads = 0;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
    const auto files = expand_level_paths(a.paths);
    std::vector<LevelGrid> grids;
    std::vector<std::size_t> owner;
    json entries = json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            grids.push_back(load_level(files[i]));
            owner.push_back(i);
            entries.push_back({{"path", files[i].string()}});
        } catch (const Error& e) {
            entries.push_back({{"path", files[i].string()}, {"error", e.what()}});
        }
    }
    const auto reports = check_playability_batch(grids, a.threads);
    std::size_t playable = 0;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        entries[owner[k]].update(to_json(reports[k]));
        playable += reports[k].playable;
    }
    const std::size_t invalid = files.size() - grids.size();
    out << json{{"command", "check"},
                {"n_levels", files.size()},
                {"n_playable", playable},
                {"n_invalid", invalid},
                {"levels", entries}}
               .dump(2)
        << '\n';
    return invalid == 0 ? kOk : kInvalidInput;
}

struct EvaluateArgs {
    std::vector<fs::path> paths;
    std::vector<fs::path> reference;
    std::optional<fs::path> out_dir;
    bool csv = false;
    std::size_t threads = 0;
};

void write_histogram_csv(const fs::path& path, const DistributionSummary& d) {
    std::ostringstream s;
    s << "tiles,levels\n";
    for (const auto& [count, n] : d.histogram) s << count << ',' << n << '\n';
    write_text(path, s.str());
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    std::vector<LevelGrid> levels;
    for (const auto& p : expand_level_paths(a.paths)) levels.push_back(load_level(p));
    std::vector<LevelGrid> reference;
    for (const auto& p : expand_level_paths(a.reference)) reference.push_back(load_level(p));
    const EvalReport report = evaluate_set(levels, reference, a.threads);
    const fs::path dir = resolve_out_dir(a.out_dir, ".");
    ensure_dir(dir);
    json j = to_json(report);
    write_text(dir / "eval.json", j.dump(2) + "\n");
    if (a.csv) {
        const std::pair<const char*, const std::optional<DistributionSummary>*> tables[] = {
            {"empty", &report.empty}, {"wall", &report.wall}, {"enemy", &report.enemy}};
        for (const auto& [name, d] : tables)
            if (*d) write_histogram_csv(dir / (std::string("hist_") + name + ".csv"), **d);
    }
    out << j.dump(2) << '\n';
    return kOk;
}

struct ExportArgs {
    fs::path manifest;
    std::optional<fs::path> out_dir;
    std::string origin = "all";
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
    fs::path manifest = a.manifest;
    if (fs::is_directory(manifest)) manifest /= "corpus.json";
    const json m = read_json(manifest);
    if (!m.contains("levels") || !m["levels"].is_array()) throw IoError("corpus manifest has no levels array");
    const fs::path dir = resolve_out_dir(a.out_dir, "corpus");
    ensure_dir(dir);
    json files = json::array();
    for (const auto& entry : m["levels"]) {
        const std::string origin = entry.at("origin").get<std::string>();
        if (a.origin != "all" && origin != a.origin) continue;
        const LevelGrid grid = parse_level(entry.at("level").get<std::string>());
        char name[64];
        std::snprintf(name, sizeof name, "corpus_%04zu_%s.txt", entry.at("index").get<std::size_t>(), origin.c_str());
        save_level(dir / name, grid);
        files.push_back((dir / name).string());
    }
    out << json{{"command", "export-corpus"}, {"count", files.size()}, {"files", files}}.dump(2) << '\n';
    return kOk;
}

struct RenderArgs {
    fs::path path;
    std::string format = "ascii";
    std::optional<fs::path> out;
    unsigned scale = 16;
};

int cmd_render(const RenderArgs& a, std::ostream& out) {
    const LevelGrid grid = load_level(a.path);
    if (a.format == "ascii") {
        const std::string art = render_ascii(grid);
        if (a.out) {
            write_text(*a.out, art);
            out << json{{"command", "render"}, {"format", "ascii"}, {"file", a.out->string()}}.dump() << '\n';
        } else {
            out << art;
        }
        return kOk;
    }
    if (a.scale == 0 || a.scale > 256) throw BadConfig("--scale must be in 1..256");
    fs::path target = a.out ? *a.out : resolve_out_dir(std::nullopt, ".") / a.path.stem().concat(".png");
    if (target.has_parent_path()) ensure_dir(target.parent_path());
    write_png(target, grid, a.scale);
    out << json{{"command", "render"}, {"format", "png"}, {"file", target.string()}}.dump() << '\n';
    return kOk;
}

int report_error(std::ostream& err, ExitCode code, const std::string& type, const std::string& message) {
    err << json{{"error", {{"type", type}, {"message", message}, {"exit_code", static_cast<int>(code)}}}}.dump()
        << '\n';
    return code;
}

}  // namespace

fs::path resolve_out_dir(const std::optional<fs::path>& flag, const fs::path& fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return fallback;
}

std::vector<fs::path> expand_level_paths(const std::vector<fs::path>& paths) {
    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            const auto listed = list_level_files(p);
            files.insert(files.end(), listed.begin(), listed.end());
        } else if (fs::exists(p)) {
            files.push_back(p);
        } else {
            throw IoError("no such file or directory: " + p.string());
        }
    }
    return files;
}

FeatureVector parse_feature_override(const std::string& text) {
    FeatureVector u;
    std::stringstream s(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(s, item, ',')) {
        if (i == kTileCount) throw BadConfig("feature override needs exactly 8 counts");
        std::size_t used = 0;
        int v = -1;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 0) throw BadConfig("bad feature count '" + item + "'");
        u.counts[i++] = v;
    }
    if (i != kTileCount) throw BadConfig("feature override needs exactly 8 counts");
    return u;
}

std::string generated_level_name(std::uint64_t seed, std::size_t index) {
    return "level_" + std::to_string(seed) + "_" + std::to_string(index) + ".txt";
}

std::string render_ascii(const LevelGrid& grid) {
    auto glyph = [](Tile t) {
        switch (t) {
            case Tile::Wall: return '#';
            case Tile::Empty: return ' ';
            case Tile::Key: return 'K';
            case Tile::Door: return 'D';
            case Tile::Enemy1: return '1';
            case Tile::Enemy2: return '2';
            case Tile::Enemy3: return '3';
            case Tile::Avatar: return '@';
        }
        return '?';
    };
    const std::string rule = "+" + std::string(grid.width() * 2, '-') + "+\n";
    std::string out = rule;
    for (std::size_t r = 0; r < grid.height(); ++r) {
        out += '|';
        for (std::size_t c = 0; c < grid.width(); ++c) {
            const char g = glyph(grid.at(r, c));
            out += g;
            out += g == '#' ? '#' : ' ';
        }
        out += "|\n";
    }
    out += rule;
    out += "# wall  K key  D door  1 2 3 enemies  @ avatar\n";
    return out;
}

nlohmann::json corpus_manifest(const CorpusState& corpus) {
    json levels = json::array();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const CorpusEntry& e = corpus.entries()[i];
        levels.push_back({{"index", i},
                          {"origin", origin_name(e.origin)},
                          {"round", e.round},
                          {"level", serialize_level(e.level)}});
    }
    return {{"size", corpus.size()},
            {"human_count", corpus.human_count()},
            {"skipped_human_duplicates", corpus.skipped_human_duplicates()},
            {"levels", levels}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"CESAGAN level generation pipeline", "cesagan"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train a model on a level corpus");
    t->add_option("--config", train.config, "JSON run config");
    t->add_option("--seed", train.seed);
    t->add_option("--iterations", train.iterations);
    t->add_option("--batch-size", train.batch_size);
    t->add_option("--learning-rate", train.learning_rate);
    t->add_option("--checkpoint-every", train.checkpoint_every);
    t->add_option("--corpus-dir", train.corpus_dir);
    t->add_option("--output-dir", train.output_dir);
    t->add_option("--checkpoint", train.checkpoint);
    t->add_option("--cadence", train.cadence, "Iterations between bootstrap rounds");
    t->add_flag("--no-bootstrap", train.no_bootstrap);
    t->add_flag("--quiet", train.quiet, "No progress lines on stderr");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Sample levels from a checkpoint");
    g->add_option("--checkpoint", gen.checkpoint)->required();
    g->add_option("-n,--count", gen.count);
    g->add_option("--seed", gen.seed);
    g->add_option("--u", gen.u, "Feature override: 8 comma-separated tile counts");
    g->add_option("--u-from", gen.u_from, "Use the tile counts of this level file");
    g->add_option("--out-dir", gen.out_dir);

    CheckArgs check;
    auto* c = app.add_subcommand("check", "Playability report for level files or directories");
    c->add_option("paths", check.paths)->required();
    c->add_option("--threads", check.threads);

    EvaluateArgs eval;
    auto* e = app.add_subcommand("evaluate", "Playability, duplicate and diversity metrics for a level set");
    e->add_option("paths", eval.paths)->required();
    e->add_option("--reference", eval.reference, "Levels that generated copies count against");
    e->add_option("--out-dir", eval.out_dir);
    e->add_flag("--csv", eval.csv, "Also write tile-count histograms as CSV");
    e->add_option("--threads", eval.threads);

    ExportArgs exp;
    auto* x = app.add_subcommand("export-corpus", "Write a trained corpus back out as level files");
    x->add_option("manifest", exp.manifest, "corpus.json or the training output directory")->required();
    x->add_option("--out-dir", exp.out_dir);
    x->add_option("--origin", exp.origin)->check(CLI::IsMember({"all", "human", "bootstrapped"}));

    RenderArgs render;
    auto* r = app.add_subcommand("render", "Draw a level as ASCII art or PNG");
    r->add_option("path", render.path)->required();
    r->add_option("--format", render.format)->check(CLI::IsMember({"ascii", "png"}));
    r->add_option("--out", render.out);
    r->add_option("--scale", render.scale, "PNG pixels per tile");

    std::vector<const char*> argv{"cesagan"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& s) {
        return app.exit(s, out, err);
    } catch (const CLI::ParseError& p) {
        return report_error(err, kUsage, "UsageError", p.what());
    }

    try {
        if (*t) return cmd_train(train, out, err);
        if (*g) return cmd_generate(gen, out);
        if (*c) return cmd_check(check, out);
        if (*e) return cmd_evaluate(eval, out);
        if (*x) return cmd_export(exp, out);
        if (*r) return cmd_render(render, out);
    } catch (const BadConfig& ex) {
        return report_error(err, kBadConfig, "BadConfig", ex.what());
    } catch (const MissingCheckpoint& ex) {
        return report_error(err, kMissingCheckpoint, "MissingCheckpoint", ex.what());
    } catch (const IoError& ex) {
        return report_error(err, kIoError, "IoError", ex.what());
    } catch (const Error& ex) {
        return report_error(err, kInvalidInput, "InvalidInput", ex.what());
    } catch (const std::exception& ex) {
        return report_error(err, kInternal, "InternalError", ex.what());
    }
    return kInternal;
}

}  // namespace cesagan::cli
