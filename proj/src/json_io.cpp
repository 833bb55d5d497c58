#include "cesagan/json_io.hpp"

#include <fstream>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& section, const char* key, T& out, const std::string& where) {
    if (!section.contains(key)) return;
    try {
        out = section.at(key).get<T>();
    } catch (const json::exception&) {
        throw BadConfig(where + "." + key + " has the wrong type");
    }
}

void reject_unknown(const json& section, std::initializer_list<const char*> known, const std::string& where) {
    if (!section.is_object()) throw BadConfig(where + " must be an object");
    for (const auto& [key, _] : section.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw BadConfig("unknown config key " + where + "." + key);
    }
}

}  // namespace

json to_json(const RunConfig& c) {
    json j;
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"learning_rate", c.train.learning_rate},
                  {"total_iterations", c.train.total_iterations},
                  {"rmsprop_decay", c.train.rmsprop_decay},
                  {"rmsprop_epsilon", c.train.rmsprop_epsilon},
                  {"d_steps_per_g_step", c.train.d_steps_per_g_step},
                  {"seed", c.train.seed},
                  {"checkpoint_every", c.train.checkpoint_every}};
    const BootstrapConfig b = c.bootstrap.value_or(BootstrapConfig{});
    j["bootstrap"] = {{"enabled", c.bootstrap.has_value()},
                      {"cadence", b.cadence},
                      {"candidates_per_round", b.candidates_per_round},
                      {"max_corpus_size", b.max_corpus_size},
                      {"min_hamming_to_corpus", b.min_hamming_to_corpus}};
    j["arch"] = json::parse(nn::arch_to_json(c.arch));
    j["paths"] = {{"corpus_dir", c.corpus_dir.string()},
                  {"output_dir", c.output_dir.string()},
                  {"checkpoint", c.checkpoint.string()}};
    return j;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
    reject_unknown(j, {"train", "bootstrap", "arch", "paths"}, "config");
    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t, {"batch_size", "learning_rate", "total_iterations", "rmsprop_decay", "rmsprop_epsilon",
                           "d_steps_per_g_step", "seed", "checkpoint_every"},
                       "train");
        read_field(t, "batch_size", c.train.batch_size, "train");
        read_field(t, "learning_rate", c.train.learning_rate, "train");
        read_field(t, "total_iterations", c.train.total_iterations, "train");
        read_field(t, "rmsprop_decay", c.train.rmsprop_decay, "train");
        read_field(t, "rmsprop_epsilon", c.train.rmsprop_epsilon, "train");
        read_field(t, "d_steps_per_g_step", c.train.d_steps_per_g_step, "train");
        read_field(t, "seed", c.train.seed, "train");
        read_field(t, "checkpoint_every", c.train.checkpoint_every, "train");
    }
    if (j.contains("bootstrap")) {
        const json& b = j["bootstrap"];
        reject_unknown(b, {"enabled", "cadence", "candidates_per_round", "max_corpus_size", "min_hamming_to_corpus"},
                       "bootstrap");
        BootstrapConfig bc = c.bootstrap.value_or(BootstrapConfig{});
        bool enabled = c.bootstrap.has_value();
        read_field(b, "enabled", enabled, "bootstrap");
        read_field(b, "cadence", bc.cadence, "bootstrap");
        read_field(b, "candidates_per_round", bc.candidates_per_round, "bootstrap");
        read_field(b, "max_corpus_size", bc.max_corpus_size, "bootstrap");
        read_field(b, "min_hamming_to_corpus", bc.min_hamming_to_corpus, "bootstrap");
        if (enabled) bc.validate();
        c.bootstrap = enabled ? std::optional<BootstrapConfig>(bc) : std::nullopt;
    }
    if (j.contains("arch")) {
        const json& a = j["arch"];
        if (!a.is_object()) throw BadConfig("arch must be an object");
        json merged = json::parse(nn::arch_to_json(c.arch));
        for (const auto& [key, value] : a.items()) {
            if (!merged.contains(key)) throw BadConfig("unknown config key arch." + key);
            merged[key] = value;
        }
        c.arch = nn::arch_from_json(merged.dump());
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        reject_unknown(p, {"corpus_dir", "output_dir", "checkpoint"}, "paths");
        auto read_path = [&p](const char* key, std::filesystem::path& out) {
            std::string s = out.string();
            read_field(p, key, s, "paths");
            out = s;
        };
        read_path("corpus_dir", c.corpus_dir);
        read_path("output_dir", c.output_dir);
        read_path("checkpoint", c.checkpoint);
    }
    c.train.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw BadConfig("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

json to_json(const PlayabilityReport& r) {
    json verdicts = json::object();
    for (std::size_t i = 0; i < kHeuristicCount; ++i)
        verdicts[std::string(heuristic_name(static_cast<Heuristic>(i)))] = r.verdicts[i];
    auto path_json = [](const std::optional<Path>& p) -> json {
        if (!p) return nullptr;
        json arr = json::array();
        for (const Cell& c : *p) arr.push_back({c.row, c.col});
        return arr;
    };
    return {{"playable", r.playable},
            {"verdicts", verdicts},
            {"key_path", path_json(r.key_path)},
            {"door_path", path_json(r.door_path)}};
}

json to_json(const DistributionSummary& s) {
    json hist = json::object();
    for (const auto& [count, n] : s.histogram) hist[std::to_string(count)] = n;
    return {{"levels", s.levels}, {"mean", s.mean}, {"std", s.std}, {"histogram", hist}};
}

json to_json(const EvalReport& r) {
    auto dist = [](const std::optional<DistributionSummary>& d) -> json { return d ? to_json(*d) : json(nullptr); };
    json failures = json::object();
    for (std::size_t i = 0; i < kHeuristicCount; ++i)
        failures[std::string(heuristic_name(static_cast<Heuristic>(i)))] = r.failures[i];
    return {{"n_levels", r.n_levels},
            {"n_playable", r.n_playable},
            {"n_duplicates", r.n_duplicates},
            {"playable_ratio", r.playable_ratio},
            {"duplicate_ratio", r.duplicate_ratio},
            {"hamming_levels", r.hamming.levels},
            {"hamming_mean", r.hamming.mean},
            {"hamming_std", r.hamming.std},
            {"tile_distributions", {{"empty", dist(r.empty)}, {"wall", dist(r.wall)}, {"enemy", dist(r.enemy)}}},
            {"failures", failures}};
}

json to_json(const IterationRecord& r) {
    return {{"type", "iteration"},       {"iteration", r.iteration},   {"loss_d", r.loss_d},
            {"loss_g", r.loss_g},        {"real_score", r.real_score}, {"fake_score", r.fake_score},
            {"corpus_size", r.corpus_size}};
}

json to_json(const RoundReport& r) {
    return {{"type", "bootstrap_round"}, {"round", r.round},           {"candidates", r.candidates},
            {"survivors", r.survivors},  {"rejections", r.rejections}, {"corpus_size", r.corpus_size}};
}

CESAGAN_NAMESPACE_END
