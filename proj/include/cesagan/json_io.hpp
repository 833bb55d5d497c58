#pragma once

#include "cesagan/config.hpp"

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "cesagan/bootstrap.hpp"
#include "cesagan/evaluation.hpp"
#include "cesagan/nn.hpp"
#include "cesagan/playability.hpp"
#include "cesagan/train.hpp"

CESAGAN_NAMESPACE_BEGIN

/// Everything a run needs, loadable from one JSON file:
///   {"train": {...}, "bootstrap": {"enabled": bool, ...}, "arch": {...},
///    "paths": {"corpus_dir": str, "output_dir": str, "checkpoint": str}}
struct RunConfig {
    TrainConfig train;
    std::optional<BootstrapConfig> bootstrap = BootstrapConfig{};
    nn::ArchConfig arch;
    std::filesystem::path corpus_dir = "data/zelda";
    std::filesystem::path output_dir = "runs/default";
    std::filesystem::path checkpoint;  // empty: <output_dir>/checkpoint.bin
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown sections or bad values throw BadConfig.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const PlayabilityReport& report);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const DistributionSummary& summary);
/// {"type": "iteration", "iteration", "loss_d", "loss_g", "real_score", "fake_score", "corpus_size"}
nlohmann::json to_json(const IterationRecord& record);
/// {"type": "bootstrap_round", "round", "candidates", "survivors", "rejections", "corpus_size"}
nlohmann::json to_json(const RoundReport& report);

CESAGAN_NAMESPACE_END
