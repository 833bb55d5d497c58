#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cesagan/level.hpp"

namespace fixtures {

inline std::filesystem::path zelda_dir() { return std::filesystem::path(CESAGAN_DATA_DIR) / "zelda"; }

inline std::vector<std::filesystem::path> level_files() {
    std::vector<std::filesystem::path> out;
    for (int i = 0; i < 5; ++i) out.push_back(zelda_dir() / ("zelda_lvl" + std::to_string(i) + ".txt"));
    return out;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<cesagan::LevelGrid> levels() {
    std::vector<cesagan::LevelGrid> out;
    for (const auto& p : level_files()) out.push_back(cesagan::parse_level(read_text(p)));
    return out;
}

/// Hand tallies committed next to the fixture files: file name -> symbol -> count.
inline std::map<std::string, std::map<char, int>> tallies() {
    std::map<std::string, std::map<char, int>> out;
    const auto j = nlohmann::json::parse(read_text(zelda_dir() / "tile_counts.json"));
    for (const auto& [file, counts] : j.items())
        for (const auto& [sym, n] : counts.items()) out[file][sym.at(0)] = n.get<int>();
    return out;
}

}  // namespace fixtures
