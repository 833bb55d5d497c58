#pragma once

#include "cesagan/config.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cesagan/level.hpp"

CESAGAN_NAMESPACE_BEGIN

/// The seven static checks, in the order the report stores them.
enum class Heuristic : std::size_t {
    SingleAvatar = 0,
    SingleKey = 1,
    SingleDoor = 2,
    EnemyDensity = 3,
    AvatarReachesKey = 4,
    AvatarReachesDoor = 5,
    WallBorder = 6,
};

inline constexpr std::size_t kHeuristicCount = 7;
inline constexpr double kMaxEnemyDensity = 0.6;

std::string_view heuristic_name(Heuristic h) noexcept;

using Path = std::vector<Cell>;

struct PlayabilityReport {
    std::array<bool, kHeuristicCount> verdicts{};
    bool playable = false;
    std::optional<Path> key_path;
    std::optional<Path> door_path;

    bool passed(Heuristic h) const noexcept { return verdicts[static_cast<std::size_t>(h)]; }
    std::optional<Heuristic> first_failure() const noexcept;
};

PlayabilityReport check_playability(const LevelGrid& grid);

/// Reports for many levels, fanned out over up to `threads` workers (0 = hardware concurrency).
std::vector<PlayabilityReport> check_playability_batch(std::span<const LevelGrid> levels, std::size_t threads = 0);

/// enemies / (enemies + empty); 0 when the level has neither.
double enemy_density(const LevelGrid& grid);

/// A* with a Manhattan heuristic over 4-connected moves. Only walls block. Returns a
/// minimal-length cell sequence from `from` to `to` inclusive, or nothing.
std::optional<Path> shortest_path(const LevelGrid& grid, Cell from, Cell to);

CESAGAN_NAMESPACE_END
