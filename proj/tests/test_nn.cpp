#include "doctest.h"

#include <cmath>
#include <cstring>

#include "cesagan/error.hpp"
#include "cesagan/nn.hpp"
#include "support/fixtures.hpp"

using namespace cesagan;
using namespace cesagan::nn;
using ad::Shape;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    std::vector<Real> d(ad::shape_numel(shape));
    for (auto& v : d) v = static_cast<Real>(normal(rng, 0.0, scale));
    return Tensor(std::move(shape), std::move(d));
}

SelfAttentionParams random_attention(std::size_t c, Rng& rng, Real merge) {
    const std::size_t ck = attention_key_channels(c, 8);
    return {random_tensor({ck, c}, rng, 0.5), random_tensor({ck, c}, rng, 0.5), random_tensor({c, c}, rng, 0.5),
            random_tensor({c, c}, rng, 0.5), Tensor::full({1}, merge)};
}

std::vector<FeatureVector> fixture_features() {
    std::vector<FeatureVector> out;
    for (const auto& g : fixtures::levels()) out.push_back(extract_features(g));
    return out;
}

}  // namespace

TEST_CASE("attention key width floors at one") {
    CHECK(attention_key_channels(32, 8) == 4);
    CHECK(attention_key_channels(7, 8) == 1);
    CHECK(attention_key_channels(1, 8) == 1);
}

TEST_CASE("attention rows sum to one") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        const auto p = random_attention(16, rng, 0.5f);
        const Tensor x = random_tensor({2, 16, 3, 5}, rng, 2.0);
        const auto res = self_attention(x, p);
        REQUIRE(res.beta.shape() == Shape{2, 15, 15});
        for (std::size_t row = 0; row < 30; ++row) {
            double s = 0;
            for (std::size_t i = 0; i < 15; ++i) s += res.beta[row * 15 + i];
            CHECK(std::abs(s - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("zero merge weight is the identity") {
    Rng rng(4);
    const auto p = random_attention(8, rng, 0.0f);
    const Tensor x = random_tensor({8, 9, 13}, rng);
    const Tensor y = self_attention(x, p).output;
    REQUIRE(y.shape() == x.shape());
    CHECK(std::memcmp(y.data().data(), x.data().data(), x.numel() * sizeof(Real)) == 0);
}

TEST_CASE("single-position attention") {
    Rng rng(5);
    const auto p = random_attention(4, rng, 0.75f);
    const Tensor x = random_tensor({4, 1, 1}, rng);
    const auto res = self_attention(x, p);
    CHECK(res.beta.numel() == 1);
    CHECK(res.beta[0] == 1.0f);
    const Tensor none;
    const Tensor vh = ad::conv1x1(ad::conv1x1(x, p.w_h, none), p.w_v, none);
    for (std::size_t c = 0; c < 4; ++c) CHECK(res.output[c] == doctest::Approx(x[c] + 0.75f * vh[c]).epsilon(1e-5));
}

TEST_CASE("attention rejects wrong channel counts") {
    Rng rng(6);
    const auto p = random_attention(8, rng, 0.0f);
    CHECK_THROWS_AS(self_attention(random_tensor({4, 3, 3}, rng), p), ShapeMismatch);
}

TEST_CASE("embedding") {
    Rng rng(7);
    EmbeddingParams zero{{Tensor::zeros({16, 8}), Tensor::zeros({16})}, {Tensor::zeros({8, 16}), Tensor::zeros({8})}};
    const auto feats = fixture_features();
    const Tensor e = embed_features(feats[0], 117, zero);
    CHECK(e.shape() == Shape{8});
    for (std::size_t i = 0; i < 8; ++i) CHECK(e[i] == 0.0f);

    Generator g(ArchConfig{}, rng);
    const Tensor a = embed_features(feats[1], 117, g.embedding());
    const Tensor b = embed_features(feats[1], 117, g.embedding());
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));

    const Tensor u = features_tensor(feats, 117);
    CHECK(u.shape() == Shape{5, 8});
    double row = 0;
    for (std::size_t i = 0; i < 8; ++i) row += u[i];
    CHECK(row == doctest::Approx(1.0));
}

TEST_CASE("generator and discriminator shapes") {
    Rng rng(8);
    NetworkParams net(ArchConfig{}, rng);
    for (std::size_t n : {1u, 3u}) {
        const Tensor z = sample_latent(rng, n, 32);
        CHECK(z.shape() == Shape{n, 32});
        for (Real v : z.data()) CHECK((v >= -1 && v <= 1));
        std::vector<FeatureVector> f(n, fixture_features()[0]);
        const Tensor u = features_tensor(f, 117);
        const Tensor logits = net.generator.forward(z, u, Mode::Train);
        CHECK(logits.shape() == Shape{n, 8, 9, 13});
        const Tensor scores = net.discriminator.forward(logits, u, Mode::Train);
        CHECK(scores.shape() == Shape{n});
    }
    CHECK_THROWS_AS(net.generator.forward(sample_latent(rng, 2, 31), features_tensor(fixture_features(), 117), Mode::Train),
                    Error);
}

TEST_CASE("ablation architecture has no attention or embedding") {
    Rng rng(9);
    ArchConfig arch;
    arch.use_attention = false;
    arch.use_conditioning = false;
    NetworkParams net(arch, rng);
    for (const auto& p : net.generator.parameters()) {
        CHECK(p.name.find("attention") == std::string::npos);
        CHECK(p.name.find("embed") == std::string::npos);
    }
    const auto feats = fixture_features();
    const Tensor out = net.generator.forward(sample_latent(rng, 2, 32), features_tensor(std::span(feats).first(2), 117),
                                             Mode::Train);
    CHECK(out.shape() == Shape{2, 8, 9, 13});
}

TEST_CASE("zero head gives zero scores") {
    Rng rng(10);
    for (auto head : {DiscriminatorHead::Flatten, DiscriminatorHead::AvgPool}) {
        ArchConfig arch;
        arch.d_head = head;
        Discriminator d(arch, rng);
        std::fill(d.head().weight.mutable_data().begin(), d.head().weight.mutable_data().end(), Real(0));
        std::fill(d.head().bias.mutable_data().begin(), d.head().bias.mutable_data().end(), Real(0));
        const auto levels = fixtures::levels();
        const auto feats = fixture_features();
        const Tensor s = d.forward(levels_tensor(levels), features_tensor(feats, 117), Mode::Train);
        for (Real v : s.data()) CHECK(v == 0.0f);
    }
}

TEST_CASE("eval-mode scores are per-sample") {
    Rng rng(11);
    NetworkParams net(ArchConfig{}, rng);
    const auto levels = fixtures::levels();
    const auto feats = fixture_features();
    net.discriminator.forward(levels_tensor(levels), features_tensor(feats, 117), Mode::Train);

    const Tensor s = net.discriminator.forward(levels_tensor(levels), features_tensor(feats, 117), Mode::Eval);
    std::vector<LevelGrid> swapped{levels[1], levels[0], levels[2], levels[3], levels[4]};
    std::vector<FeatureVector> fswapped{feats[1], feats[0], feats[2], feats[3], feats[4]};
    const Tensor t = net.discriminator.forward(levels_tensor(swapped), features_tensor(fswapped, 117), Mode::Eval);
    CHECK(t[0] == s[1]);
    CHECK(t[1] == s[0]);
    for (std::size_t i = 2; i < 5; ++i) CHECK(t[i] == s[i]);
}

TEST_CASE("same seed gives bit-identical outputs") {
    auto run = [] {
        Rng rng(12);
        NetworkParams net(ArchConfig{}, rng);
        const auto feats = fixture_features();
        const Tensor z = sample_latent(rng, 5, 32);
        const Tensor logits = net.generator.forward(z, features_tensor(feats, 117), Mode::Train);
        return std::vector<Real>(logits.data().begin(), logits.data().end());
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0);
}

TEST_CASE("initialization statistics") {
    Rng rng(13);
    NetworkParams net(ArchConfig{}, rng);
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (const auto& p : net.discriminator.parameters()) {
        if (!p.name.ends_with(".weight") && p.name.find(".w_") == std::string::npos) continue;
        for (Real v : p.tensor.data()) sum += v, sq += v * v, ++n;
    }
    REQUIRE(n > 1000);
    CHECK(std::abs(sum / n) < 0.002);
    CHECK(std::sqrt(sq / n) == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("generate_levels honours the conditioning override") {
    Rng rng(14);
    NetworkParams net(ArchConfig{}, rng);
    const auto feats = fixture_features();
    net.generator.forward(sample_latent(rng, 5, 32), features_tensor(feats, 117), Mode::Train);
    Rng r1(99), r2(99);
    const auto a = generate_levels(net.generator, feats, feats[2], 10, r1);
    const auto b = generate_levels(net.generator, feats, feats[2], 10, r2, 3);
    CHECK(a == b);
    CHECK(a.size() == 10);
    for (const auto& g : a) CHECK((g.height() == 9 && g.width() == 13));
}

TEST_CASE("arch json round trip") {
    ArchConfig arch;
    arch.use_attention = false;
    arch.d_head = DiscriminatorHead::AvgPool;
    arch.g_channels = 16;
    CHECK(arch_from_json(arch_to_json(arch)) == arch);
    CHECK_THROWS_AS(arch_from_json("{\"bogus\": 1}"), BadConfig);
    CHECK_THROWS_AS(arch_from_json("not json"), BadConfig);
}
