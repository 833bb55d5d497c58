#include "cesagan/evaluation.hpp"

#include <cmath>
#include <unordered_set>

#include "cesagan/bootstrap.hpp"
#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN

namespace {

int class_count(const FeatureVector& fv, TileClass tc) {
    switch (tc) {
        case TileClass::Empty: return fv[Tile::Empty];
        case TileClass::Wall: return fv[Tile::Wall];
        case TileClass::Enemy: return fv[Tile::Enemy1] + fv[Tile::Enemy2] + fv[Tile::Enemy3];
    }
    return 0;
}

std::pair<double, double> mean_std(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double s = 0.0;
    for (double x : xs) s += x;
    const double m = s / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - m) * (x - m);
    return {m, std::sqrt(sq / static_cast<double>(xs.size()))};
}

}  // namespace

DistributionSummary tile_distribution(std::span<const LevelGrid> levels, TileClass tile_class) {
    if (levels.empty()) throw EmptyInput("tile_distribution: no levels");
    DistributionSummary out;
    out.levels = levels.size();
    std::vector<double> counts;
    counts.reserve(levels.size());
    for (const auto& lvl : levels) {
        const int c = class_count(extract_features(lvl), tile_class);
        counts.push_back(c);
        ++out.histogram[c];
    }
    std::tie(out.mean, out.std) = mean_std(counts);
    return out;
}

HammingStats hamming_statistics(std::span<const LevelGrid> levels) {
    HammingStats out;
    out.levels = levels.size();
    if (levels.size() < 2) {
        out.per_level.assign(levels.size(), 0.0);
        return out;
    }
    std::vector<std::size_t> totals(levels.size(), 0);
    for (std::size_t i = 0; i < levels.size(); ++i)
        for (std::size_t j = i + 1; j < levels.size(); ++j) {
            const std::size_t d = hamming(levels[i], levels[j]);
            totals[i] += d;
            totals[j] += d;
        }
    const double others = static_cast<double>(levels.size() - 1);
    out.per_level.reserve(levels.size());
    for (std::size_t t : totals) out.per_level.push_back(static_cast<double>(t) / others);
    std::tie(out.mean, out.std) = mean_std(out.per_level);
    return out;
}

EvalReport evaluate_set(std::span<const LevelGrid> levels, std::span<const LevelGrid> reference, std::size_t threads) {
    if (levels.empty()) throw EmptyInput("evaluate_set: no levels");
    for (const auto& lvl : levels)
        if (!lvl.same_shape(levels.front())) throw MixedDimensions("evaluate_set: levels do not share one size");

    EvalReport r;
    r.n_levels = levels.size();
    const auto reports = check_playability_batch(levels, threads);
    std::vector<LevelGrid> playable;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (reports[i].playable) playable.push_back(levels[i]);
        for (std::size_t h = 0; h < kHeuristicCount; ++h) r.failures[h] += !reports[i].verdicts[h];
    }
    r.n_playable = playable.size();
    r.playable_ratio = static_cast<double>(r.n_playable) / static_cast<double>(r.n_levels);

    std::unordered_set<LevelGrid> ref(reference.begin(), reference.end());
    std::unordered_set<LevelGrid> seen;
    for (const auto& lvl : levels) {
        const bool first = seen.insert(lvl).second;
        if (!first || ref.contains(lvl)) ++r.n_duplicates;
    }
    r.duplicate_ratio = static_cast<double>(r.n_duplicates) / static_cast<double>(r.n_levels);

    r.hamming = hamming_statistics(playable);
    if (!playable.empty()) {
        r.empty = tile_distribution(playable, TileClass::Empty);
        r.wall = tile_distribution(playable, TileClass::Wall);
        r.enemy = tile_distribution(playable, TileClass::Enemy);
    }
    return r;
}

CESAGAN_NAMESPACE_END
