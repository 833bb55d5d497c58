#include "doctest.h"

#include <algorithm>
#include <random>

#include "cesagan/error.hpp"
#include "cesagan/evaluation.hpp"
#include "cesagan/playability.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cesagan;

TEST_CASE("identical levels") {
    const LevelGrid g = fixtures::levels()[1];
    for (std::size_t n : {1u, 2u, 7u, 200u}) {
        const std::vector<LevelGrid> set(n, g);
        const auto rep = evaluate_set(set);
        CHECK(rep.playable_ratio == 1.0);
        CHECK(rep.duplicate_ratio == static_cast<double>(n - 1) / static_cast<double>(n));
        CHECK(rep.hamming.mean == 0.0);
        CHECK(rep.hamming.std == 0.0);
    }
}

TEST_CASE("fixture set") {
    const auto fx = fixtures::levels();
    const auto rep = evaluate_set(fx);
    CHECK(rep.n_levels == 5);
    CHECK(rep.n_playable == 5);
    CHECK(rep.duplicate_ratio == 0.0);
    const auto [m, s] = oracle::naive_hamming_mean_std(fx);
    CHECK(std::abs(rep.hamming.mean - m) < 1e-9);
    CHECK(std::abs(rep.hamming.std - s) < 1e-9);

    const auto tallies = fixtures::tallies();
    double wall_sum = 0;
    for (const auto& [_, counts] : tallies) wall_sum += counts.at('w');
    REQUIRE(rep.wall.has_value());
    CHECK(rep.wall->mean == doctest::Approx(wall_sum / 5));
    for (TileClass tc : {TileClass::Empty, TileClass::Wall, TileClass::Enemy}) {
        const auto d = tile_distribution(fx, tc);
        std::size_t hist_total = 0;
        for (const auto& [_, n] : d.histogram) hist_total += n;
        CHECK(hist_total == 5);
        double expect = 0;
        for (const auto& g : fx) {
            const auto f = extract_features(g);
            expect += tc == TileClass::Empty ? f[Tile::Empty]
                      : tc == TileClass::Wall ? f[Tile::Wall]
                                              : f[Tile::Enemy1] + f[Tile::Enemy2] + f[Tile::Enemy3];
        }
        CHECK(d.mean == doctest::Approx(expect / 5));
    }
}

TEST_CASE("reference duplicates") {
    const auto fx = fixtures::levels();
    const std::vector<LevelGrid> set{fx[0], fx[1]};
    const std::vector<LevelGrid> ref{fx[1], fx[2]};
    CHECK(evaluate_set(set).duplicate_ratio == 0.0);
    const auto rep = evaluate_set(set, ref);
    CHECK(rep.n_duplicates == 1);
    CHECK(rep.duplicate_ratio == 0.5);
}

TEST_CASE("all-wall distribution") {
    const std::vector<LevelGrid> walls(4, LevelGrid::filled(9, 13, Tile::Wall));
    const auto d = tile_distribution(walls, TileClass::Wall);
    CHECK(d.mean == 117.0);
    CHECK(d.std == 0.0);
    CHECK(d.histogram.at(117) == 4);
    const auto rep = evaluate_set(walls);
    CHECK(rep.n_playable == 0);
    CHECK_FALSE(rep.wall.has_value());
    CHECK(rep.failures[0] == 4);
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(evaluate_set({}), EmptyInput);
    CHECK_THROWS_AS(tile_distribution({}, TileClass::Wall), EmptyInput);
    const std::vector<LevelGrid> mixed{fixtures::levels()[0], LevelGrid::filled(3, 3, Tile::Wall)};
    CHECK_THROWS_AS(evaluate_set(mixed), MixedDimensions);
}

TEST_CASE("incremental hamming matches the naive oracle on 200-level sets") {
    oracle::Rng rng(61);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<LevelGrid> set;
        for (int k = 0; k < 200; ++k) set.push_back(oracle::structured_grid(rng, 9, 13, 0.1 * trial + 0.1));
        const auto hs = hamming_statistics(set);
        const auto [m, s] = oracle::naive_hamming_mean_std(set);
        CHECK(std::abs(hs.mean - m) < 1e-9);
        CHECK(std::abs(hs.std - s) < 1e-9);
    }
}

TEST_CASE("evaluation is permutation invariant and agrees with the batch API") {
    oracle::Rng rng(62);
    std::vector<LevelGrid> set;
    for (int k = 0; k < 120; ++k) set.push_back(oracle::structured_grid(rng, 9, 13, 0.25));
    for (int k = 0; k < 30; ++k) set.push_back(set[static_cast<std::size_t>(k) * 3]);
    const auto a = evaluate_set(set);
    std::shuffle(set.begin(), set.end(), rng);
    const auto b = evaluate_set(set, {}, 2);
    CHECK(a.n_playable == b.n_playable);
    CHECK(a.n_duplicates == b.n_duplicates);
    CHECK(a.hamming.mean == doctest::Approx(b.hamming.mean).epsilon(1e-12));
    CHECK(a.hamming.std == doctest::Approx(b.hamming.std).epsilon(1e-12));
    CHECK(a.failures == b.failures);

    std::size_t playable = 0;
    for (const auto& r : check_playability_batch(set)) playable += r.playable;
    CHECK(b.n_playable == playable);
    CHECK(b.playable_ratio == static_cast<double>(playable) / set.size());
}
