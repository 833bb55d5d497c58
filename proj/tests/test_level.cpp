#include "doctest.h"

#include <cmath>
#include <random>

#include "cesagan/error.hpp"
#include "cesagan/level.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cesagan;

TEST_CASE("symbol map is a bijection over the eight tiles") {
    const std::string symbols = "w.+g123A";
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const Tile t = static_cast<Tile>(i);
        CHECK(tile_symbol(t) == symbols[i]);
        REQUIRE(tile_from_symbol(symbols[i]).has_value());
        CHECK(*tile_from_symbol(symbols[i]) == t);
    }
    CHECK_FALSE(tile_from_symbol('x').has_value());
    CHECK_FALSE(tile_from_symbol(' ').has_value());
}

TEST_CASE("parse small grids") {
    const LevelGrid g = parse_level("www\nwAw\nwww");
    CHECK(g.height() == 3);
    CHECK(g.width() == 3);
    const std::vector<Tile> expected{Tile::Wall, Tile::Wall, Tile::Wall, Tile::Wall, Tile::Avatar,
                                     Tile::Wall, Tile::Wall, Tile::Wall, Tile::Wall};
    CHECK(std::vector<Tile>(g.cells().begin(), g.cells().end()) == expected);
    CHECK(parse_level("www\nwww\nwww") == LevelGrid::filled(3, 3, Tile::Wall));
}

TEST_CASE("parse tolerates a trailing newline and CRLF") {
    CHECK(parse_level("www\nwAw\nwww\n") == parse_level("www\nwAw\nwww"));
    CHECK(parse_level("www\r\nwAw\r\nwww\r\n") == parse_level("www\nwAw\nwww"));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(parse_level("www\nww\nwww"), RaggedLines);
    try {
        parse_level("www\nwxw\nwww");
        FAIL("expected UnknownSymbol");
    } catch (const UnknownSymbol& e) {
        CHECK(e.symbol() == 'x');
        CHECK(e.row() == 1);
        CHECK(e.col() == 1);
    }
    CHECK_THROWS_AS(parse_level("ww\nww"), InvalidLevel);
    CHECK_THROWS_AS(parse_level("www"), InvalidLevel);
    CHECK_THROWS_AS(parse_level(""), Error);
    CHECK_THROWS_AS(parse_level("www\n\nwww\nwww"), Error);
}

TEST_CASE("serialize") {
    CHECK(serialize_level(LevelGrid::filled(3, 3, Tile::Wall)) == "www\nwww\nwww");
    for (const auto& path : fixtures::level_files()) {
        const std::string text = fixtures::read_text(path);
        std::string normalized;
        for (char c : text)
            if (c != '\r') normalized += c;
        while (!normalized.empty() && normalized.back() == '\n') normalized.pop_back();
        CHECK(serialize_level(parse_level(text)) == normalized);
    }
}

TEST_CASE("one-hot encoding") {
    const LevelGrid walls = LevelGrid::filled(3, 3, Tile::Wall);
    const OneHotLevel oh = encode_onehot(walls);
    REQUIRE(oh.data.size() == 8 * 9);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(oh.at(0, r, c) == 1.0f);
            for (std::size_t t = 1; t < 8; ++t) CHECK(oh.at(t, r, c) == 0.0f);
        }

    const LevelGrid a = parse_level("www\nwAw\nwww");
    const OneHotLevel oa = encode_onehot(a);
    float avatar_sum = 0;
    for (std::size_t i = 0; i < 9; ++i) avatar_sum += oa.data[7 * 9 + i];
    CHECK(avatar_sum == 1.0f);
    CHECK(oa.at(7, 1, 1) == 1.0f);

    const LevelGrid lvl0 = fixtures::levels()[0];
    const OneHotLevel o0 = encode_onehot(lvl0);
    const FeatureVector f0 = extract_features(lvl0);
    const std::size_t hw = lvl0.size();
    for (std::size_t t = 0; t < 8; ++t) {
        float s = 0;
        for (std::size_t i = 0; i < hw; ++i) s += o0.data[t * hw + i];
        CHECK(static_cast<int>(s) == f0.counts[t]);
    }
}

TEST_CASE("decode ties, errors and perturbation stability") {
    std::vector<float> equal(8 * 9, 0.25f);
    CHECK(decode_onehot(std::span<const float>(equal), 3, 3) == LevelGrid::filled(3, 3, Tile::Wall));

    std::vector<float> bad(8 * 9, 0.0f);
    bad[5] = std::nanf("");
    CHECK_THROWS_AS(decode_onehot(std::span<const float>(bad), 3, 3), NonFiniteInput);
    std::vector<float> shortv(8 * 9 - 1, 0.0f);
    CHECK_THROWS_AS(decode_onehot(std::span<const float>(shortv), 3, 3), ShapeMismatch);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> noise(-0.39f, 0.39f);
    for (int k = 0; k < 100; ++k) {
        const LevelGrid g = oracle::uniform_grid(rng, 9, 13);
        OneHotLevel oh = encode_onehot(g);
        for (auto& v : oh.data) v += noise(rng);
        CHECK(decode_onehot(std::span<const float>(oh.data), 9, 13) == g);
    }
}

TEST_CASE("decode accepts double logits") {
    const LevelGrid g = parse_level("www\nw+w\nwgw");
    const OneHotLevel oh = encode_onehot(g);
    std::vector<double> d(oh.data.begin(), oh.data.end());
    CHECK(decode_onehot(std::span<const double>(d), 3, 3) == g);
}

TEST_CASE("feature extraction") {
    const FeatureVector fw = extract_features(LevelGrid::filled(3, 3, Tile::Wall));
    CHECK(fw.counts == std::array<int, 8>{9, 0, 0, 0, 0, 0, 0, 0});
    const FeatureVector fa = extract_features(parse_level("www\nwAw\nwww"));
    CHECK(fa.counts == std::array<int, 8>{8, 0, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("fixtures match their committed tallies") {
    const auto tallies = fixtures::tallies();
    REQUIRE(tallies.size() == 5);
    for (const auto& path : fixtures::level_files()) {
        const LevelGrid g = load_level(path);
        CHECK(g.height() == kCanonicalHeight);
        CHECK(g.width() == kCanonicalWidth);
        const FeatureVector f = extract_features(g);
        CHECK(f[Tile::Avatar] == 1);
        CHECK(f[Tile::Key] == 1);
        CHECK(f[Tile::Door] == 1);
        const auto& expect = tallies.at(path.filename().string());
        for (const auto& [sym, n] : expect) CHECK(f[*tile_from_symbol(sym)] == n);
        CHECK(f.total() == static_cast<int>(g.size()));
    }
}

TEST_CASE("random grids round-trip through every codec") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(3, 16);
    for (int k = 0; k < 2000; ++k) {
        const LevelGrid g = oracle::uniform_grid(rng, dim(rng), dim(rng));
        CHECK(parse_level(serialize_level(g)) == g);
        const OneHotLevel oh = encode_onehot(g);
        CHECK(decode_onehot(std::span<const float>(oh.data), g.height(), g.width()) == g);
        const FeatureVector f = extract_features(g);
        CHECK(f.total() == static_cast<int>(g.size()));
        for (std::size_t t = 0; t < 8; ++t) {
            int s = 0;
            for (std::size_t i = 0; i < g.size(); ++i) s += oh.data[t * g.size() + i] == 1.0f;
            CHECK(s == f.counts[t]);
        }
    }
}

TEST_CASE("corpus loading") {
    const auto files = list_level_files(fixtures::zelda_dir());
    CHECK(files.size() == 5);
    CHECK(load_corpus(fixtures::zelda_dir()) == fixtures::levels());
    CHECK_THROWS_AS(load_level("/nonexistent/level.txt"), IoError);
}

TEST_CASE("save then load") {
    const auto dir = std::filesystem::temp_directory_path() / "cesagan_test_level";
    std::filesystem::create_directories(dir);
    const LevelGrid g = fixtures::levels()[2];
    save_level(dir / "x.txt", g);
    CHECK(load_level(dir / "x.txt") == g);
    CHECK(fixtures::read_text(dir / "x.txt") == serialize_level(g));
    std::filesystem::remove_all(dir);
}
