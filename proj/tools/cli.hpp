#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cesagan/json_io.hpp"
#include "cesagan/level.hpp"

namespace cesagan::cli {

/// Exit codes. Failures also print {"error": {"type", "message", "exit_code"}} to stderr.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kBadConfig = 3,
    kMissingCheckpoint = 4,
    kIoError = 5,
    kInvalidInput = 6,
};

inline constexpr const char* kOutDirEnv = "CESAGAN_OUT_DIR";

/// Parses `args` (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Output directory precedence: explicit flag, then CESAGAN_OUT_DIR, then `fallback`.
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& flag,
                                      const std::filesystem::path& fallback);

/// Level files named directly or found (*.txt, sorted) in named directories.
std::vector<std::filesystem::path> expand_level_paths(const std::vector<std::filesystem::path>& paths);

/// "c0,c1,...,c7" in tile order (w . + g 1 2 3 A).
FeatureVector parse_feature_override(const std::string& text);

std::string generated_level_name(std::uint64_t seed, std::size_t index);

std::string render_ascii(const LevelGrid& grid);
void write_png(const std::filesystem::path& path, const LevelGrid& grid, unsigned scale = 16);

/// RGB for each tile, indexed by tile id.
struct Rgb {
    unsigned char r, g, b;
};
Rgb tile_color(Tile tile) noexcept;

/// Corpus manifest written by `train` and read by `export-corpus`.
nlohmann::json corpus_manifest(const CorpusState& corpus);

}  // namespace cesagan::cli
