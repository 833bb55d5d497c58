#include "cesagan/playability.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <queue>
#include <thread>

CESAGAN_NAMESPACE_BEGIN

namespace {

constexpr std::array<std::string_view, kHeuristicCount> kNames = {
    "single_avatar", "single_key", "single_door", "enemy_density",
    "avatar_reaches_key", "avatar_reaches_door", "wall_border",
};

constexpr std::array<Cell, 4> kMoves = {Cell{-1, 0}, Cell{1, 0}, Cell{0, -1}, Cell{0, 1}};

std::optional<Cell> unique_cell(const LevelGrid& grid, Tile tile) {
    std::optional<Cell> found;
    for (std::size_t r = 0; r < grid.height(); ++r)
        for (std::size_t c = 0; c < grid.width(); ++c)
            if (grid.at(r, c) == tile) {
                if (found) return std::nullopt;
                found = Cell{static_cast<int>(r), static_cast<int>(c)};
            }
    return found;
}

bool has_wall_border(const LevelGrid& grid) {
    const std::size_t h = grid.height(), w = grid.width();
    for (std::size_t c = 0; c < w; ++c)
        if (grid.at(0, c) != Tile::Wall || grid.at(h - 1, c) != Tile::Wall) return false;
    for (std::size_t r = 0; r < h; ++r)
        if (grid.at(r, 0) != Tile::Wall || grid.at(r, w - 1) != Tile::Wall) return false;
    return true;
}

}  // namespace

std::string_view heuristic_name(Heuristic h) noexcept { return kNames[static_cast<std::size_t>(h)]; }

std::optional<Heuristic> PlayabilityReport::first_failure() const noexcept {
    for (std::size_t i = 0; i < kHeuristicCount; ++i)
        if (!verdicts[i]) return static_cast<Heuristic>(i);
    return std::nullopt;
}

double enemy_density(const LevelGrid& grid) {
    const FeatureVector fv = extract_features(grid);
    const int enemies = fv[Tile::Enemy1] + fv[Tile::Enemy2] + fv[Tile::Enemy3];
    const int denom = enemies + fv[Tile::Empty];
    return denom == 0 ? 0.0 : static_cast<double>(enemies) / denom;
}

std::optional<Path> shortest_path(const LevelGrid& grid, Cell from, Cell to) {
    if (!grid.in_bounds(from) || !grid.in_bounds(to)) return std::nullopt;
    if (grid.at(from) == Tile::Wall || grid.at(to) == Tile::Wall) return std::nullopt;
    const int w = static_cast<int>(grid.width());
    auto index = [w](Cell c) { return static_cast<std::size_t>(c.row * w + c.col); };
    auto manhattan = [&to](Cell c) { return std::abs(c.row - to.row) + std::abs(c.col - to.col); };

    struct Node {
        int f;
        int g;
        std::size_t id;
        bool operator>(const Node& o) const { return f != o.f ? f > o.f : (g != o.g ? g < o.g : id > o.id); }
    };
    constexpr int kUnseen = -1;
    std::vector<int> cost(grid.size(), kUnseen);
    std::vector<std::size_t> parent(grid.size(), grid.size());
    std::vector<bool> closed(grid.size(), false);
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    cost[index(from)] = 0;
    open.push({manhattan(from), 0, index(from)});

    while (!open.empty()) {
        const Node cur = open.top();
        open.pop();
        if (closed[cur.id]) continue;
        closed[cur.id] = true;
        const Cell cell{static_cast<int>(cur.id) / w, static_cast<int>(cur.id) % w};
        if (cell == to) {
            Path path;
            for (std::size_t id = cur.id; id != grid.size(); id = parent[id])
                path.push_back(Cell{static_cast<int>(id) / w, static_cast<int>(id) % w});
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (const Cell& m : kMoves) {
            const Cell next{cell.row + m.row, cell.col + m.col};
            if (!grid.in_bounds(next) || grid.at(next) == Tile::Wall) continue;
            const std::size_t nid = index(next);
            const int g = cur.g + 1;
            if (closed[nid] || (cost[nid] != kUnseen && cost[nid] <= g)) continue;
            cost[nid] = g;
            parent[nid] = cur.id;
            open.push({g + manhattan(next), g, nid});
        }
    }
    return std::nullopt;
}

PlayabilityReport check_playability(const LevelGrid& grid) {
    PlayabilityReport report;
    auto& v = report.verdicts;
    const auto avatar = unique_cell(grid, Tile::Avatar);
    const auto key = unique_cell(grid, Tile::Key);
    const auto door = unique_cell(grid, Tile::Door);
    v[0] = avatar.has_value();
    v[1] = key.has_value();
    v[2] = door.has_value();
    v[3] = enemy_density(grid) < kMaxEnemyDensity;
    if (avatar && key && door) {
        report.key_path = shortest_path(grid, *avatar, *key);
        report.door_path = shortest_path(grid, *avatar, *door);
    }
    v[4] = report.key_path.has_value();
    v[5] = report.door_path.has_value();
    v[6] = has_wall_border(grid);
    report.playable = std::all_of(v.begin(), v.end(), [](bool b) { return b; });
    return report;
}

std::vector<PlayabilityReport> check_playability_batch(std::span<const LevelGrid> levels, std::size_t threads) {
    std::vector<PlayabilityReport> out(levels.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, levels.size() / 64));
    if (threads <= 1) {
        for (std::size_t i = 0; i < levels.size(); ++i) out[i] = check_playability(levels[i]);
        return out;
    }
    {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                for (std::size_t i = t; i < levels.size(); i += threads) out[i] = check_playability(levels[i]);
            });
        }
    }
    return out;
}

CESAGAN_NAMESPACE_END
