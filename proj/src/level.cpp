#include "cesagan/level.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN

namespace {

constexpr std::array<char, kTileCount> kSymbols = {'w', '.', '+', 'g', '1', '2', '3', 'A'};

template <typename T>
LevelGrid decode_impl(std::span<const T> logits, std::size_t height, std::size_t width) {
    const std::size_t plane = height * width;
    if (logits.size() != kTileCount * plane) {
        throw ShapeMismatch("decode_onehot: expected " + std::to_string(kTileCount * plane) +
                            " values, got " + std::to_string(logits.size()));
    }
    std::vector<Tile> cells(plane);
    for (std::size_t p = 0; p < plane; ++p) {
        std::size_t best = 0;
        T best_value = logits[p];
        for (std::size_t t = 0; t < kTileCount; ++t) {
            const T v = logits[t * plane + p];
            if (!std::isfinite(v)) throw NonFiniteInput("decode_onehot: non-finite logit");
            if (v > best_value) {
                best_value = v;
                best = t;
            }
        }
        cells[p] = static_cast<Tile>(best);
    }
    return LevelGrid(height, width, std::move(cells));
}

}  // namespace

char tile_symbol(Tile tile) noexcept { return kSymbols[tile_index(tile)]; }

std::optional<Tile> tile_from_symbol(char symbol) noexcept {
    for (std::size_t i = 0; i < kSymbols.size(); ++i) {
        if (kSymbols[i] == symbol) return static_cast<Tile>(i);
    }
    return std::nullopt;
}

LevelGrid::LevelGrid(std::size_t height, std::size_t width, std::vector<Tile> cells)
    : height_(height), width_(width), cells_(std::move(cells)) {
    if (height_ < 3 || width_ < 3) {
        throw InvalidLevel("level must be at least 3x3, got " + std::to_string(height_) + "x" +
                           std::to_string(width_));
    }
    if (cells_.size() != height_ * width_) throw InvalidLevel("cell count does not match dimensions");
    for (Tile t : cells_) {
        if (tile_index(t) >= kTileCount) throw InvalidLevel("cell holds an invalid tile id");
    }
}

LevelGrid LevelGrid::filled(std::size_t height, std::size_t width, Tile tile) {
    return LevelGrid(height, width, std::vector<Tile>(height * width, tile));
}

int FeatureVector::total() const noexcept {
    int sum = 0;
    for (int c : counts) sum += c;
    return sum;
}

LevelGrid parse_level(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    // A single trailing newline ends the last row; it is not an extra row.
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InvalidLevel("empty level text");

    const std::size_t width = lines.front().size();
    std::vector<Tile> cells;
    cells.reserve(lines.size() * width);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].empty()) throw RaggedLines("line " + std::to_string(r) + " is empty");
        if (lines[r].size() != width) {
            throw RaggedLines("line " + std::to_string(r) + " has length " + std::to_string(lines[r].size()) +
                              ", expected " + std::to_string(width));
        }
        for (std::size_t c = 0; c < width; ++c) {
            auto tile = tile_from_symbol(lines[r][c]);
            if (!tile) throw UnknownSymbol(lines[r][c], r, c);
            cells.push_back(*tile);
        }
    }
    return LevelGrid(lines.size(), width, std::move(cells));
}

std::string serialize_level(const LevelGrid& grid) {
    std::string out;
    out.reserve(grid.height() * (grid.width() + 1));
    for (std::size_t r = 0; r < grid.height(); ++r) {
        if (r > 0) out.push_back('\n');
        for (std::size_t c = 0; c < grid.width(); ++c) out.push_back(tile_symbol(grid.at(r, c)));
    }
    return out;
}

OneHotLevel encode_onehot(const LevelGrid& grid) {
    OneHotLevel out{grid.height(), grid.width(), std::vector<float>(kTileCount * grid.size(), 0.0f)};
    const auto cells = grid.cells();
    for (std::size_t p = 0; p < cells.size(); ++p) out.data[tile_index(cells[p]) * grid.size() + p] = 1.0f;
    return out;
}

LevelGrid decode_onehot(std::span<const float> logits, std::size_t height, std::size_t width) {
    return decode_impl(logits, height, width);
}

LevelGrid decode_onehot(std::span<const double> logits, std::size_t height, std::size_t width) {
    return decode_impl(logits, height, width);
}

FeatureVector extract_features(const LevelGrid& grid) {
    FeatureVector fv;
    for (Tile t : grid.cells()) ++fv.counts[tile_index(t)];
    return fv;
}

std::size_t level_hash(const LevelGrid& grid) noexcept {
    // FNV-1a over dimensions and cells.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(grid.height());
    mix(grid.width());
    for (Tile t : grid.cells()) mix(tile_index(t));
    return static_cast<std::size_t>(h);
}

LevelGrid load_level(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open level file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_level(ss.str());
}

void save_level(const std::filesystem::path& path, const LevelGrid& grid) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write level file " + path.string());
    out << serialize_level(grid);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::filesystem::path> list_level_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<LevelGrid> load_corpus(const std::filesystem::path& dir) {
    std::vector<LevelGrid> levels;
    for (const auto& f : list_level_files(dir)) levels.push_back(load_level(f));
    return levels;
}

CESAGAN_NAMESPACE_END
