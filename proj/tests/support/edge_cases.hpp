#pragma once

#include <string>
#include <vector>

#include "cesagan/level.hpp"
#include "support/fixtures.hpp"

namespace edge_cases {

struct Case {
    std::string name;
    cesagan::LevelGrid grid;
};

inline cesagan::LevelGrid L(const std::string& text) { return cesagan::parse_level(text); }

/// Fifty hand-written levels: extra or missing sprites, sealed rooms, broken borders,
/// enemy-density boundaries and degenerate sizes.
inline std::vector<Case> all() {
    using cesagan::LevelGrid;
    using cesagan::Tile;
    std::vector<Case> c;
    auto add = [&](std::string name, LevelGrid g) { c.push_back({std::move(name), std::move(g)}); };

    add("minimal_pass", L("wwwww\nwA+gw\nwwwww"));
    add("clear_row_5x5", L("wwwww\nw...w\nwA+gw\nw...w\nwwwww"));
    add("two_avatars", L("wwwww\nwA+gw\nwA..w\nwwwww"));
    add("three_avatars", L("wwwwww\nwAAA+w\nw...gw\nwwwwww"));
    add("no_avatar", L("wwwww\nw.+gw\nwwwww"));
    add("missing_key", L("wwwww\nwA.gw\nwwwww"));
    add("two_keys", L("wwwww\nwA++w\nw.g.w\nwwwww"));
    add("missing_door", L("wwwww\nwA+.w\nwwwww"));
    add("two_doors", L("wwwww\nwAggw\nw.+.w\nwwwww"));
    add("nothing_but_walls", LevelGrid::filled(3, 3, Tile::Wall));
    add("all_empty", LevelGrid::filled(9, 13, Tile::Empty));
    add("all_avatar", LevelGrid::filled(4, 4, Tile::Avatar));
    add("sealed_key", L("wwwwwww\nwA.w+ww\nw..wwww\nw.g...w\nwwwwwww"));
    add("sealed_door", L("wwwwwww\nwA.wgww\nw..wwww\nw.+...w\nwwwwwww"));
    add("sealed_avatar", L("wwwwwww\nwAw...w\nwww.+.w\nw...g.w\nwwwwwww"));
    add("sealed_both", L("wwwwwww\nwAw+w.w\nwwwwwgw\nwwwwwww"));
    add("diagonal_only", L("wwwww\nwAw.w\nww+ww\nw.wgw\nwwwww"));
    add("diagonal_key", L("wwwww\nwAwgw\nww+.w\nwwwww"));
    add("broken_top", L("ww.ww\nwA+gw\nwwwww"));
    add("broken_bottom", L("wwwww\nwA+gw\nww1ww"));
    add("broken_left", L("wwwww\n.A+gw\nwwwww"));
    add("broken_right", L("wwwww\nwA+g.\nwwwww"));
    add("avatar_on_border", L("wAwww\nw.+gw\nwwwww"));
    add("key_on_border", L("wwwww\nwA.g+\nwwwww"));
    add("door_on_corner", L("wwwwg\nwA+.w\nwwwww"));
    add("enemy_on_border", L("wwwww\n3A+gw\nwwwww"));
    add("no_border_at_all", L("....\n.A+.\n..g.\n...."));
    add("enemies_block_nothing", L("wwwwwww\nwA123+w\nw11111w\nw..g..w\nwwwwwww"));
    add("enemy_density_low", L("wwwwwww\nwA1..+w\nw.....w\nwg....w\nwwwwwww"));
    // 3 enemies, 2 empty: 0.6 is not below the limit
    add("enemy_density_exact_limit", L("wwwwwww\nwA123+w\nw..wwgw\nwwwwwww"));
    // 2 enemies, 2 empty: 0.5
    add("enemy_density_half", L("wwwwwww\nwA12+.w\nw.wwwgw\nwwwwwww"));
    add("enemy_density_high", L("wwwwwww\nwA123+w\nw1.22gw\nwwwwwww"));
    add("only_enemies_no_empty", L("wwwwwww\nwA123+w\nwgwwwww\nwwwwwww"));
    add("no_enemies_no_empty", L("wwwww\nwA+gw\nwwwww"));
    add("wall_maze_long_path", L("wwwwwwwww\nwA.w...ww\nww.w.w.ww\nw..w.w..w\nw.ww.ww.w\nw....w+gw\nwwwwwwwww"));
    add("wall_maze_cut", L("wwwwwwwww\nwA.w...ww\nww.w.w.ww\nw..w.w..w\nw.ww.wwww\nw....w+gw\nwwwwwwwww"));
    add("key_reachable_door_not", L("wwwwwww\nwA.+www\nw...wgw\nwwwwwww"));
    add("door_reachable_key_not", L("wwwwwww\nwA.gwww\nw...w+w\nwwwwwww"));
    add("two_avatars_sealed", L("wwwwwww\nwAw+g.w\nwwwwwAw\nwwwwwww"));
    add("key_door_adjacent_avatar", L("wwwww\nw+Agw\nw...w\nwwwww"));
    add("tall_thin", L("www\nwAw\nw.w\nw+w\nw1w\nwgw\nwww"));
    add("wide_thin", L("wwwwwwwwwwwwwwwwwwww\nwA..1.....2....3.+gw\nwwwwwwwwwwwwwwwwwwww"));
    add("interior_wall_ring", L("wwwwwwwww\nw.......w\nw.wwwww.w\nw.wA+gw.w\nw.wwwww.w\nw.......w\nwwwwwwwww"));
    add("ring_with_gap", L("wwwwwwwww\nw...+...w\nw.wwwww.w\nw.wA..w.w\nw.ww.ww.w\nw.....g.w\nwwwwwwwww"));
    add("key_behind_enemy_line", L("wwwwwww\nwA.1.+w\nw.w1www\nwg.2..w\nwwwwwww"));
    add("inner_border_only", L("wwwww\nwwwww\nwA+gw\nwwwww\nwwwww"));
    add("ragged_interior_walls", L("wwwwwwwwwwwww\nwA.w.w.w.w.+w\nw.w.w.w.w.w.w\nw...........w\nw.w.w.w.w.wgw\nwwwwwwwwwwwww"));
    for (std::size_t i = 0; i < 3; ++i) {
        auto g = fixtures::levels()[i];
        g.set(4, 0, Tile::Empty);
        add("fixture_" + std::to_string(i) + "_broken_border", g);
    }
    return c;
}

}  // namespace edge_cases
