#include "doctest.h"

#include "cesagan/nn.hpp"
#include "cesagan/train.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace cesagan;
using namespace cesagan::nn;

static_assert(std::is_same_v<Real, double>, "gradient checks run in double precision");

namespace {

std::vector<std::pair<std::string, Tensor>> named(std::vector<ad::NamedTensor> ps) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& p : ps) out.emplace_back(p.name, p.tensor);
    return out;
}

/// Turns the residual attention branch on so its weights receive gradient.
void open_attention(SelfAttentionParams& a) { a.merge_weight.mutable_data()[0] = 0.7; }

struct Setup {
    NetworkParams net;
    Tensor real;
    Tensor u;
    Tensor fake;
    Tensor z;
};

Setup make_setup(std::uint64_t seed) {
    Rng rng(seed);
    ArchConfig arch;
    arch.init_std = 0.1;
    NetworkParams net(arch, rng);
    open_attention(net.generator.attention());
    open_attention(net.discriminator.attention());
    const auto levels = fixtures::levels();
    const std::vector<LevelGrid> two{levels[0], levels[3]};
    const std::vector<FeatureVector> feats{extract_features(levels[0]), extract_features(levels[3])};
    Tensor u = features_tensor(feats, arch.cells());
    Tensor z = sample_latent(rng, 2, arch.latent_dim);
    Tensor fake = ad::softmax_channels(net.generator.forward(z, u, Mode::Train)).detach();
    return {std::move(net), levels_tensor(two), u, fake, z};
}

}  // namespace

TEST_CASE("discriminator loss gradient on a 2-sample batch") {
    Setup s = make_setup(31);
    auto& d = s.net.discriminator;
    auto loss = [&] { return discriminator_loss(d.forward(s.real, s.u, Mode::Train), d.forward(s.fake, s.u, Mode::Train)); };
    const auto r = gradcheck::check(loss, named(d.parameters()), {.max_per_tensor = 48});
    INFO("worst: " << r.worst << ", skipped " << r.skipped << " of " << r.checked + r.skipped);
    CHECK(r.max_rel_error < 1e-3);
    CHECK(r.skipped_fraction() < 0.5);
    CHECK(r.fallback_max_rel_error < 1e-3);
    for (const auto& name : r.unchecked_tensors) MESSAGE("no verified entries in " << name);
    CHECK(r.unchecked_tensors.empty());
    CHECK(r.max_abs_error_small < 1e-6);
}

TEST_CASE("generator loss gradient through the discriminator") {
    Setup s = make_setup(32);
    auto& g = s.net.generator;
    auto& d = s.net.discriminator;
    auto loss = [&] {
        Tensor fake = ad::softmax_channels(g.forward(s.z, s.u, Mode::Train));
        return generator_loss(d.forward(fake, s.u, Mode::Train));
    };
    const auto r = gradcheck::check(loss, named(g.parameters()), {.max_per_tensor = 48});
    INFO("worst: " << r.worst << ", skipped " << r.skipped << " of " << r.checked + r.skipped);
    CHECK(r.max_rel_error < 1e-3);
    CHECK(r.skipped_fraction() < 0.5);
    CHECK(r.fallback_max_rel_error < 1e-3);
    for (const auto& name : r.unchecked_tensors) MESSAGE("no verified entries in " << name);
    CHECK(r.unchecked_tensors.empty());
    CHECK(r.max_abs_error_small < 1e-6);
}

TEST_CASE("score gradient with respect to the input level") {
    Setup s = make_setup(33);
    auto& d = s.net.discriminator;
    Tensor x = s.fake.clone();
    x.set_requires_grad(true);
    auto loss = [&] { return ad::sum(d.forward(x, s.u, Mode::Train)); };
    const auto r = gradcheck::check(loss, {{"x", x}}, {.max_per_tensor = 200});
    INFO("worst: " << r.worst << ", skipped " << r.skipped << " of " << r.checked + r.skipped);
    CHECK(r.max_rel_error < 1e-3);
    CHECK(r.skipped_fraction() < 0.5);
    CHECK(r.fallback_max_rel_error < 1e-3);
    for (const auto& name : r.unchecked_tensors) MESSAGE("no verified entries in " << name);
    CHECK(r.unchecked_tensors.empty());
}

TEST_CASE("embedding gradient") {
    Setup s = make_setup(34);
    auto& e = s.net.generator.embedding();
    Rng rng(5);
    Tensor w({2, 8}, std::vector<Real>(16));
    for (auto& v : w.mutable_data()) v = normal(rng, 0, 1);
    auto loss = [&] { return ad::sum(ad::mul(embed_features(s.u, e), w)); };
    const auto r = gradcheck::check(loss, {{"hidden.weight", e.hidden.weight}, {"hidden.bias", e.hidden.bias},
                                           {"output.weight", e.output.weight}, {"output.bias", e.output.bias}});
    INFO("worst: " << r.worst);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("attention gradient") {
    Rng rng(35);
    const std::size_t c = 8;
    auto rt = [&](ad::Shape sh) {
        std::vector<Real> v(ad::shape_numel(sh));
        for (auto& x : v) x = normal(rng, 0, 0.5);
        return Tensor(sh, v, true);
    };
    SelfAttentionParams p{rt({1, c}), rt({1, c}), rt({c, c}), rt({c, c}), Tensor::full({1}, 0.6, true)};
    Tensor x = rt({2, c, 3, 4});
    Tensor w = rt({2, c, 3, 4});
    w.set_requires_grad(false);
    auto loss = [&] { return ad::sum(ad::mul(self_attention(x, p).output, w)); };
    const auto r = gradcheck::check(loss, {{"x", x}, {"w_f", p.w_f}, {"w_g", p.w_g}, {"w_h", p.w_h}, {"w_v", p.w_v},
                                           {"merge", p.merge_weight}});
    INFO("worst: " << r.worst);
    CHECK(r.max_rel_error < 1e-4);
}
