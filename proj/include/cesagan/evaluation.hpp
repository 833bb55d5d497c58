#pragma once

#include "cesagan/config.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cesagan/level.hpp"
#include "cesagan/playability.hpp"

CESAGAN_NAMESPACE_BEGIN

enum class TileClass { Empty, Wall, Enemy };

struct DistributionSummary {
    std::size_t levels = 0;
    double mean = 0.0;
    double std = 0.0;                           // population standard deviation
    std::map<int, std::size_t> histogram;       // tile count -> number of levels
};

struct HammingStats {
    std::size_t levels = 0;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> per_level;              // mean distance from each level to all others
};

struct EvalReport {
    std::size_t n_levels = 0;
    std::size_t n_playable = 0;
    std::size_t n_duplicates = 0;
    double playable_ratio = 0.0;
    double duplicate_ratio = 0.0;
    HammingStats hamming;                       // over playable levels
    std::optional<DistributionSummary> empty;   // over playable levels; unset when none are playable
    std::optional<DistributionSummary> wall;
    std::optional<DistributionSummary> enemy;
    std::array<std::size_t, kHeuristicCount> failures{};  // levels failing each heuristic
};

/// Per-level tile counts for one class (Enemy sums the three enemy types). Throws EmptyInput.
DistributionSummary tile_distribution(std::span<const LevelGrid> levels, TileClass tile_class);

/// Each level's mean hamming distance to every other level, then mean/std over levels.
/// Pairwise distances are computed once and accumulated into both endpoints.
HammingStats hamming_statistics(std::span<const LevelGrid> levels);

/// Throws EmptyInput / MixedDimensions. With `reference`, levels equal to a reference level
/// also count as duplicates.
EvalReport evaluate_set(std::span<const LevelGrid> levels, std::span<const LevelGrid> reference = {},
                        std::size_t threads = 0);

CESAGAN_NAMESPACE_END
