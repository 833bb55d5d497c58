#pragma once

#include "cesagan/config.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

CESAGAN_NAMESPACE_BEGIN

// Zelda tile identities. The numeric values are the one-hot channel indices.
enum class Tile : std::uint8_t {
    Wall = 0,
    Empty = 1,
    Key = 2,
    Door = 3,
    Enemy1 = 4,
    Enemy2 = 5,
    Enemy3 = 6,
    Avatar = 7,
};

inline constexpr std::size_t kTileCount = 8;
inline constexpr std::size_t kCanonicalHeight = 9;
inline constexpr std::size_t kCanonicalWidth = 13;

char tile_symbol(Tile tile) noexcept;
std::optional<Tile> tile_from_symbol(char symbol) noexcept;
constexpr std::size_t tile_index(Tile tile) noexcept { return static_cast<std::size_t>(tile); }
constexpr bool is_enemy(Tile tile) noexcept {
    return tile == Tile::Enemy1 || tile == Tile::Enemy2 || tile == Tile::Enemy3;
}

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// A rectangular tile grid, stored row-major. Both dimensions are at least 3 so a
/// wall border always leaves an interior.
class LevelGrid {
public:
    LevelGrid(std::size_t height, std::size_t width, std::vector<Tile> cells);
    static LevelGrid filled(std::size_t height, std::size_t width, Tile tile);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return cells_.size(); }
    std::span<const Tile> cells() const noexcept { return cells_; }

    Tile at(std::size_t row, std::size_t col) const { return cells_[row * width_ + col]; }
    Tile at(Cell c) const { return at(static_cast<std::size_t>(c.row), static_cast<std::size_t>(c.col)); }
    void set(std::size_t row, std::size_t col, Tile tile) { cells_[row * width_ + col] = tile; }
    bool in_bounds(Cell c) const noexcept {
        return c.row >= 0 && c.col >= 0 && static_cast<std::size_t>(c.row) < height_ &&
               static_cast<std::size_t>(c.col) < width_;
    }
    bool same_shape(const LevelGrid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const LevelGrid&, const LevelGrid&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<Tile> cells_;
};

struct FeatureVector {
    std::array<int, kTileCount> counts{};

    int operator[](Tile t) const noexcept { return counts[tile_index(t)]; }
    int total() const noexcept;
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Channel-major one-hot tensor data: data[t * H * W + r * W + c].
struct OneHotLevel {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> data;

    float at(std::size_t channel, std::size_t row, std::size_t col) const {
        return data[(channel * height + row) * width + col];
    }
};

LevelGrid parse_level(std::string_view text);
std::string serialize_level(const LevelGrid& grid);

OneHotLevel encode_onehot(const LevelGrid& grid);
/// Argmax over the 8 channels of a [8 x H x W] array; ties go to the lowest tile id.
LevelGrid decode_onehot(std::span<const float> logits, std::size_t height, std::size_t width);
LevelGrid decode_onehot(std::span<const double> logits, std::size_t height, std::size_t width);

FeatureVector extract_features(const LevelGrid& grid);

std::size_t level_hash(const LevelGrid& grid) noexcept;

LevelGrid load_level(const std::filesystem::path& path);
void save_level(const std::filesystem::path& path, const LevelGrid& grid);
/// Every `*.txt` file in `dir`, sorted by file name.
std::vector<LevelGrid> load_corpus(const std::filesystem::path& dir);
std::vector<std::filesystem::path> list_level_files(const std::filesystem::path& dir);

CESAGAN_NAMESPACE_END

template <>
struct std::hash<cesagan::LevelGrid> {
    std::size_t operator()(const cesagan::LevelGrid& g) const noexcept { return cesagan::level_hash(g); }
};
