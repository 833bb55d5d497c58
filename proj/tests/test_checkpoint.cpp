#include "doctest.h"

#include <cstring>
#include <sstream>

#include "cesagan/error.hpp"
#include "cesagan/nn.hpp"
#include "support/fixtures.hpp"

using namespace cesagan;

namespace {

bool same_bits(const ad::Tensor& a, const ad::Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(Real)) == 0;
}

}  // namespace

TEST_CASE("raw checkpoint round trip") {
    ad::CheckpointData d;
    d.metadata = R"({"k": 1})";
    d.tensors.push_back({"a", ad::Tensor({2, 3}, {1.5f, -0.0f, 3e-39f, 1e30f, -7.25f, 0.1f})});
    d.tensors.push_back({"s", ad::Tensor::scalar(42.0f)});
    ad::RunningStats st(2);
    st.mean = {0.5f, -1.0f};
    st.var = {2.0f, 3.0f};
    st.initialized = true;
    d.stats.push_back({"bn", st});
    std::stringstream ss;
    ad::write_checkpoint(ss, d);
    const auto back = ad::read_checkpoint(ss);
    CHECK(back.metadata == d.metadata);
    REQUIRE(back.tensors.size() == 2);
    CHECK(back.tensors[0].name == "a");
    CHECK(same_bits(back.tensors[0].tensor, d.tensors[0].tensor));
    CHECK(same_bits(back.tensors[1].tensor, d.tensors[1].tensor));
    REQUIRE(back.stats.size() == 1);
    CHECK(back.stats[0].stats == st);
}

TEST_CASE("corrupt checkpoints") {
    std::stringstream bad("NOTACKPT");
    CHECK_THROWS_AS(ad::read_checkpoint(bad), IoError);
    ad::CheckpointData d;
    d.tensors.push_back({"a", ad::Tensor::zeros({4})});
    std::stringstream ss;
    ad::write_checkpoint(ss, d);
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 3);
    std::stringstream trunc(bytes);
    CHECK_THROWS_AS(ad::read_checkpoint(trunc), IoError);
    CHECK_THROWS_AS(ad::load_checkpoint("/nonexistent/ckpt.bin"), MissingCheckpoint);
}

TEST_CASE("model save and load is bit exact") {
    Rng rng(71);
    nn::ArchConfig arch;
    arch.d_head = nn::DiscriminatorHead::AvgPool;
    nn::NetworkParams net(arch, rng);
    std::vector<FeatureVector> pool;
    for (const auto& g : fixtures::levels()) pool.push_back(extract_features(g));
    net.generator.forward(nn::sample_latent(rng, 5, 32), nn::features_tensor(pool, 117), ad::Mode::Train);

    const auto path = std::filesystem::temp_directory_path() / "cesagan_test_model.bin";
    nn::save_model(path, net, pool, 1234);
    auto snap = nn::load_model(path, arch);
    CHECK(snap.iteration == 1234);
    CHECK(snap.conditioning_pool == pool);
    CHECK(snap.params.arch == arch);
    const auto a = net.generator.parameters();
    const auto b = snap.params.generator.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(same_bits(a[i].tensor, b[i].tensor));
    }
    const auto sa = net.generator.running_stats();
    const auto sb = snap.params.generator.running_stats();
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK(*sa[i].second == *sb[i].second);

    // save again from the loaded copy: identical bytes
    const auto path2 = std::filesystem::temp_directory_path() / "cesagan_test_model2.bin";
    nn::save_model(path2, snap.params, snap.conditioning_pool, snap.iteration);
    CHECK(fixtures::read_text(path) == fixtures::read_text(path2));

    nn::ArchConfig other = arch;
    other.g_channels = 16;
    CHECK_THROWS_AS(nn::load_model(path, other), BadConfig);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("clone shares nothing") {
    Rng rng(72);
    nn::NetworkParams net(nn::ArchConfig{}, rng);
    auto copy = net.clone();
    auto pa = net.generator.parameters();
    auto pb = copy.generator.parameters();
    pa[0].tensor.mutable_data()[0] += 1.0f;
    CHECK(pa[0].tensor[0] != pb[0].tensor[0]);
}
