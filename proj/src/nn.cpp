#include "cesagan/nn.hpp"

#include <algorithm>
#include <json.hpp>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace nn {

namespace {

Tensor normal_tensor(ad::Shape shape, double stddev, Rng& rng) {
    std::vector<Real> v(ad::shape_numel(shape));
    for (auto& x : v) x = static_cast<Real>(normal(rng, 0.0, stddev));
    return Tensor(std::move(shape), std::move(v), true);
}

Linear make_linear(std::size_t in, std::size_t out, double stddev, Rng& rng) {
    return {normal_tensor({out, in}, stddev, rng), Tensor::zeros({out}, true)};
}

Conv1x1 make_conv(std::size_t in, std::size_t out, double stddev, Rng& rng) {
    return {normal_tensor({out, in}, stddev, rng), Tensor::zeros({out}, true)};
}

BatchNorm make_bn(std::size_t channels) {
    return {Tensor::full({channels}, Real(1), true), Tensor::zeros({channels}, true), ad::RunningStats(channels)};
}

SelfAttentionParams make_attention(std::size_t c, std::size_t reduction, double stddev, Rng& rng) {
    const std::size_t ck = attention_key_channels(c, reduction);
    SelfAttentionParams p;
    p.w_f = normal_tensor({ck, c}, stddev, rng);
    p.w_g = normal_tensor({ck, c}, stddev, rng);
    p.w_h = normal_tensor({c, c}, stddev, rng);
    p.w_v = normal_tensor({c, c}, stddev, rng);
    p.merge_weight = Tensor::zeros({1}, true);
    return p;
}

EmbeddingParams make_embedding(const ArchConfig& a, Rng& rng) {
    return {make_linear(kTileCount, a.embed_hidden, a.init_std, rng),
            make_linear(a.embed_hidden, a.embed_dim, a.init_std, rng)};
}

template <typename F>
void visit_linear(const std::string& prefix, Linear& l, F& f) {
    f(prefix + ".weight", l.weight);
    f(prefix + ".bias", l.bias);
}

template <typename F>
void visit_bn(const std::string& prefix, BatchNorm& b, F& f) {
    f(prefix + ".gamma", b.gamma);
    f(prefix + ".beta", b.beta);
}

template <typename F>
void visit_attention(const std::string& prefix, SelfAttentionParams& p, F& f) {
    f(prefix + ".w_f", p.w_f);
    f(prefix + ".w_g", p.w_g);
    f(prefix + ".w_h", p.w_h);
    f(prefix + ".w_v", p.w_v);
    f(prefix + ".merge_weight", p.merge_weight);
}

template <typename F>
void visit_embedding(const std::string& prefix, EmbeddingParams& e, F& f) {
    visit_linear(prefix + ".hidden", e.hidden, f);
    visit_linear(prefix + ".output", e.output, f);
}

}  // namespace

std::size_t attention_key_channels(std::size_t channels, std::size_t reduction) noexcept {
    return std::max<std::size_t>(1, reduction == 0 ? channels : channels / reduction);
}

AttentionResult self_attention(const Tensor& x, const SelfAttentionParams& params) {
    if (x.rank() == 3) {
        auto batched = self_attention(ad::reshape(x, {1, x.dim(0), x.dim(1), x.dim(2)}), params);
        return {ad::reshape(batched.output, x.shape()), batched.beta};
    }
    if (x.rank() != 4) throw ShapeMismatch("self_attention: expects [C x H x W] or [N x C x H x W]");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (params.w_h.rank() != 2 || params.w_h.dim(1) != c)
        throw ShapeMismatch("self_attention: channel count " + std::to_string(c) + " does not match parameters");
    const std::size_t ck = params.w_f.dim(0);

    const Tensor none;
    Tensor f = ad::reshape(ad::conv1x1(x, params.w_f, none), {n, ck, hw});
    Tensor g = ad::reshape(ad::conv1x1(x, params.w_g, none), {n, ck, hw});
    Tensor h = ad::reshape(ad::conv1x1(x, params.w_h, none), {n, c, hw});
    // scores[j][i] = g(x_j) . f(x_i) = s_{i,j}; row-softmax normalizes over i.
    Tensor scores = ad::bmm(ad::transpose_last2(g), f);
    Tensor beta = ad::softmax_rows(scores);
    // attended[c][j] = sum_i h[c][i] * beta[j][i]
    Tensor attended = ad::bmm(h, ad::transpose_last2(beta));
    Tensor o = ad::conv1x1(ad::reshape(attended, x.shape()), params.w_v, none);
    return {ad::scale_add(x, o, params.merge_weight), beta};
}

Tensor embed_features(const Tensor& u, const EmbeddingParams& params) {
    if (u.rank() != 2 || u.dim(1) != kTileCount) throw ShapeMismatch("embed_features: expects [N x 8]");
    return params.output(ad::relu(params.hidden(u)));
}

Tensor embed_features(const FeatureVector& u, std::size_t cells, const EmbeddingParams& params) {
    const FeatureVector one[] = {u};
    Tensor e = embed_features(features_tensor(one, cells), params);
    return ad::reshape(e, {e.dim(1)});
}

Tensor features_tensor(std::span<const FeatureVector> features, std::size_t cells) {
    std::vector<Real> v;
    v.reserve(features.size() * kTileCount);
    for (const auto& f : features)
        for (int c : f.counts) v.push_back(static_cast<Real>(c) / static_cast<Real>(cells));
    return Tensor({features.size(), kTileCount}, std::move(v));
}

Tensor levels_tensor(std::span<const LevelGrid> levels) {
    if (levels.empty()) throw EmptyInput("levels_tensor: no levels");
    const std::size_t h = levels.front().height(), w = levels.front().width();
    std::vector<Real> v;
    v.reserve(levels.size() * kTileCount * h * w);
    for (const auto& lvl : levels) {
        if (lvl.height() != h || lvl.width() != w) throw MixedDimensions("levels_tensor: mixed level sizes");
        const auto oh = encode_onehot(lvl);
        v.insert(v.end(), oh.data.begin(), oh.data.end());
    }
    return Tensor({levels.size(), kTileCount, h, w}, std::move(v));
}

Tensor sample_latent(Rng& rng, std::size_t count, std::size_t latent_dim) {
    std::vector<Real> v(count * latent_dim);
    for (auto& x : v) x = static_cast<Real>(uniform(rng, -1.0, 1.0));
    return Tensor({count, latent_dim}, std::move(v));
}

// ---------------------------------------------------------------------------------------------

Generator::Generator(const ArchConfig& arch, Rng& rng) : arch_(arch) {
    const std::size_t c = arch.g_channels;
    project_ = make_linear(arch.latent_dim, c * arch.cells(), arch.init_std, rng);
    project_bn_ = make_bn(c);
    for (std::size_t i = 0; i < arch.g_blocks; ++i) {
        convs_.push_back(make_conv(c, c, arch.init_std, rng));
        bns_.push_back(make_bn(c));
    }
    if (arch.use_attention) attention_ = make_attention(c, arch.attention_reduction, arch.init_std, rng);
    if (arch.use_conditioning) embedding_ = make_embedding(arch, rng);
    out_ = make_conv(c + (arch.use_conditioning ? arch.embed_dim : 0), kTileCount, arch.init_std, rng);
}

Tensor Generator::forward(const Tensor& z, const Tensor& u, Mode mode) {
    if (z.rank() != 2 || z.dim(1) != arch_.latent_dim)
        throw ShapeMismatch("generator: z must be [N x " + std::to_string(arch_.latent_dim) + "]");
    const std::size_t n = z.dim(0);
    Tensor h = ad::reshape(project_(z), {n, arch_.g_channels, arch_.height, arch_.width});
    h = ad::relu(project_bn_(h, mode, arch_.batchnorm));
    for (std::size_t i = 0; i < convs_.size(); ++i) h = ad::relu(bns_[i](convs_[i](h), mode, arch_.batchnorm));
    if (arch_.use_attention) h = self_attention(h, attention_).output;
    if (arch_.use_conditioning) {
        if (u.rank() != 2 || u.dim(0) != n) throw ShapeMismatch("generator: u must be [N x 8]");
        h = ad::concat_channels(h, ad::broadcast_spatial(embed_features(u, embedding_), arch_.height, arch_.width));
    }
    return out_(h);
}

template <typename F>
void Generator::visit_tensors(F&& f) {
    visit_linear("g.project", project_, f);
    visit_bn("g.project_bn", project_bn_, f);
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        f("g.conv" + std::to_string(i) + ".weight", convs_[i].weight);
        f("g.conv" + std::to_string(i) + ".bias", convs_[i].bias);
        visit_bn("g.bn" + std::to_string(i), bns_[i], f);
    }
    if (arch_.use_attention) visit_attention("g.attention", attention_, f);
    if (arch_.use_conditioning) visit_embedding("g.embedding", embedding_, f);
    f("g.out.weight", out_.weight);
    f("g.out.bias", out_.bias);
}

std::vector<ad::NamedTensor> Generator::parameters() {
    std::vector<ad::NamedTensor> out;
    visit_tensors([&](const std::string& name, Tensor& t) { out.push_back({name, t}); });
    return out;
}

std::vector<std::pair<std::string, ad::RunningStats*>> Generator::running_stats() {
    std::vector<std::pair<std::string, ad::RunningStats*>> out{{"g.project_bn", &project_bn_.stats}};
    for (std::size_t i = 0; i < bns_.size(); ++i) out.emplace_back("g.bn" + std::to_string(i), &bns_[i].stats);
    return out;
}

// ---------------------------------------------------------------------------------------------

Discriminator::Discriminator(const ArchConfig& arch, Rng& rng) : arch_(arch) {
    const std::size_t c = arch.d_channels;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, arch.d_blocks); ++i) {
        convs_.push_back(make_conv(i == 0 ? kTileCount : c, c, arch.init_std, rng));
        bns_.push_back(make_bn(c));
    }
    if (arch.use_attention) attention_ = make_attention(c, arch.attention_reduction, arch.init_std, rng);
    if (arch.use_conditioning) embedding_ = make_embedding(arch, rng);
    merge_ = make_conv(c + (arch.use_conditioning ? arch.embed_dim : 0), c, arch.init_std, rng);
    merge_bn_ = make_bn(c);
    const std::size_t head_in = arch.d_head == DiscriminatorHead::Flatten ? c * arch.cells() : c;
    head_ = make_linear(head_in, 1, arch.init_std, rng);
}

Tensor Discriminator::forward(const Tensor& x, const Tensor& u, Mode mode) {
    if (x.rank() != 4 || x.dim(1) != kTileCount || x.dim(2) != arch_.height || x.dim(3) != arch_.width)
        throw ShapeMismatch("discriminator: x must be [N x 8 x H x W], got " + ad::shape_str(x.shape()));
    const std::size_t n = x.dim(0);
    Tensor h = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) h = ad::relu(bns_[i](convs_[i](h), mode, arch_.batchnorm));
    if (arch_.use_attention) h = self_attention(h, attention_).output;
    if (arch_.use_conditioning) {
        if (u.rank() != 2 || u.dim(0) != n) throw ShapeMismatch("discriminator: u must be [N x 8]");
        h = ad::concat_channels(h, ad::broadcast_spatial(embed_features(u, embedding_), arch_.height, arch_.width));
    }
    h = ad::relu(merge_bn_(merge_(h), mode, arch_.batchnorm));
    Tensor pooled = arch_.d_head == DiscriminatorHead::Flatten ? ad::reshape(h, {n, arch_.d_channels * arch_.cells()})
                                                               : ad::global_avg_pool(h);
    return ad::reshape(head_(pooled), {n});
}

template <typename F>
void Discriminator::visit_tensors(F&& f) {
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        f("d.conv" + std::to_string(i) + ".weight", convs_[i].weight);
        f("d.conv" + std::to_string(i) + ".bias", convs_[i].bias);
        visit_bn("d.bn" + std::to_string(i), bns_[i], f);
    }
    if (arch_.use_attention) visit_attention("d.attention", attention_, f);
    if (arch_.use_conditioning) visit_embedding("d.embedding", embedding_, f);
    f("d.merge.weight", merge_.weight);
    f("d.merge.bias", merge_.bias);
    visit_bn("d.merge_bn", merge_bn_, f);
    visit_linear("d.head", head_, f);
}

std::vector<ad::NamedTensor> Discriminator::parameters() {
    std::vector<ad::NamedTensor> out;
    visit_tensors([&](const std::string& name, Tensor& t) { out.push_back({name, t}); });
    return out;
}

std::vector<std::pair<std::string, ad::RunningStats*>> Discriminator::running_stats() {
    std::vector<std::pair<std::string, ad::RunningStats*>> out;
    for (std::size_t i = 0; i < bns_.size(); ++i) out.emplace_back("d.bn" + std::to_string(i), &bns_[i].stats);
    out.emplace_back("d.merge_bn", &merge_bn_.stats);
    return out;
}

// ---------------------------------------------------------------------------------------------

NetworkParams::NetworkParams(const ArchConfig& a, Rng& rng) : arch(a), generator(a, rng), discriminator(a, rng) {}

NetworkParams NetworkParams::clone() const {
    NetworkParams copy = *this;
    auto deep = [](const std::string&, Tensor& t) { t = t.clone(); };
    copy.generator.visit_tensors(deep);
    copy.discriminator.visit_tensors(deep);
    return copy;
}

std::vector<LevelGrid> generate_levels(Generator& generator, std::span<const FeatureVector> conditioning_pool,
                                       const std::optional<FeatureVector>& u_override, std::size_t count,
                                       Rng& rng, std::size_t chunk) {
    const ArchConfig& a = generator.arch();
    if (a.use_conditioning && !u_override && conditioning_pool.empty())
        throw EmptyInput("generate_levels: empty conditioning pool");
    ad::TapeScope no_grad(nullptr);
    std::vector<LevelGrid> out;
    out.reserve(count);
    const std::size_t plane = kTileCount * a.cells();
    chunk = std::max<std::size_t>(1, chunk);
    while (out.size() < count) {
        const std::size_t n = std::min(chunk, count - out.size());
        Tensor z = sample_latent(rng, n, a.latent_dim);
        std::vector<FeatureVector> us(n);
        for (auto& u : us) {
            if (u_override) u = *u_override;
            else if (!conditioning_pool.empty()) u = conditioning_pool[uniform_index(rng, conditioning_pool.size())];
        }
        Tensor logits = generator.forward(z, features_tensor(us, a.cells()), Mode::Eval);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(decode_onehot(logits.data().subspan(i * plane, plane), a.height, a.width));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

const char* head_name(DiscriminatorHead h) { return h == DiscriminatorHead::Flatten ? "flatten" : "avgpool"; }

nlohmann::json arch_json(const ArchConfig& a) {
    return {{"height", a.height},
            {"width", a.width},
            {"latent_dim", a.latent_dim},
            {"g_channels", a.g_channels},
            {"d_channels", a.d_channels},
            {"g_blocks", a.g_blocks},
            {"d_blocks", a.d_blocks},
            {"embed_hidden", a.embed_hidden},
            {"embed_dim", a.embed_dim},
            {"attention_reduction", a.attention_reduction},
            {"use_attention", a.use_attention},
            {"use_conditioning", a.use_conditioning},
            {"d_head", head_name(a.d_head)},
            {"attention_norm", "over_keys"},
            {"init_std", a.init_std},
            {"batchnorm_epsilon", a.batchnorm.epsilon},
            {"batchnorm_momentum", a.batchnorm.momentum}};
}

ArchConfig arch_parse(const nlohmann::json& j) {
    ArchConfig a;
    if (!j.is_object()) throw BadConfig("architecture config must be a JSON object");
    const nlohmann::json known = arch_json(a);
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw BadConfig("unknown architecture key '" + key + "'");
    try {
        a.height = j.value("height", a.height);
        a.width = j.value("width", a.width);
        a.latent_dim = j.value("latent_dim", a.latent_dim);
        a.g_channels = j.value("g_channels", a.g_channels);
        a.d_channels = j.value("d_channels", a.d_channels);
        a.g_blocks = j.value("g_blocks", a.g_blocks);
        a.d_blocks = j.value("d_blocks", a.d_blocks);
        a.embed_hidden = j.value("embed_hidden", a.embed_hidden);
        a.embed_dim = j.value("embed_dim", a.embed_dim);
        a.attention_reduction = j.value("attention_reduction", a.attention_reduction);
        a.use_attention = j.value("use_attention", a.use_attention);
        a.use_conditioning = j.value("use_conditioning", a.use_conditioning);
        const std::string head = j.value("d_head", std::string(head_name(a.d_head)));
        if (head == "flatten") a.d_head = DiscriminatorHead::Flatten;
        else if (head == "avgpool") a.d_head = DiscriminatorHead::AvgPool;
        else throw BadConfig("unknown d_head '" + head + "'");
        if (j.value("attention_norm", std::string("over_keys")) != "over_keys")
            throw BadConfig("attention_norm must be \"over_keys\"");
        a.init_std = j.value("init_std", a.init_std);
        a.batchnorm.epsilon = j.value("batchnorm_epsilon", a.batchnorm.epsilon);
        a.batchnorm.momentum = j.value("batchnorm_momentum", a.batchnorm.momentum);
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig(std::string("architecture config: ") + e.what());
    }
    if (a.height < 3 || a.width < 3 || a.latent_dim == 0 || a.g_channels == 0 || a.d_channels == 0 ||
        a.embed_hidden == 0 || a.embed_dim == 0)
        throw BadConfig("architecture config: dimensions must be positive (levels at least 3x3)");
    return a;
}

}  // namespace

std::string arch_to_json(const ArchConfig& arch) { return arch_json(arch).dump(); }

ArchConfig arch_from_json(const std::string& text) {
    try {
        return arch_parse(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(std::string("architecture config: ") + e.what());
    }
}

ad::CheckpointData to_checkpoint(NetworkParams& params, std::span<const FeatureVector> pool, std::uint64_t iteration) {
    nlohmann::json meta;
    meta["format"] = "cesagan-checkpoint";
    meta["arch"] = arch_json(params.arch);
    meta["iteration"] = iteration;
    meta["conditioning_pool"] = nlohmann::json::array();
    for (const auto& u : pool) meta["conditioning_pool"].push_back(u.counts);

    ad::CheckpointData data;
    data.metadata = meta.dump();
    for (auto& p : params.generator.parameters()) data.tensors.push_back(p);
    for (auto& p : params.discriminator.parameters()) data.tensors.push_back(p);
    for (auto& [name, st] : params.generator.running_stats()) data.stats.push_back({name, *st});
    for (auto& [name, st] : params.discriminator.running_stats()) data.stats.push_back({name, *st});
    return data;
}

ModelSnapshot from_checkpoint(const ad::CheckpointData& data, const std::optional<ArchConfig>& expected) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(data.metadata);
    } catch (const nlohmann::json::parse_error& e) {
        throw BadConfig(std::string("checkpoint metadata: ") + e.what());
    }
    if (meta.value("format", std::string()) != "cesagan-checkpoint") throw BadConfig("checkpoint metadata: wrong format tag");
    const ArchConfig arch = arch_parse(meta.at("arch"));
    if (expected && !(*expected == arch)) throw BadConfig("checkpoint architecture does not match the run config");

    Rng dummy(0);
    ModelSnapshot snap{NetworkParams(arch, dummy), {}, meta.value("iteration", std::uint64_t{0})};
    for (const auto& counts : meta.value("conditioning_pool", nlohmann::json::array())) {
        FeatureVector fv;
        fv.counts = counts.get<std::array<int, kTileCount>>();
        snap.conditioning_pool.push_back(fv);
    }

    auto assign = [&](std::vector<ad::NamedTensor> targets) {
        for (auto& target : targets) {
            auto it = std::find_if(data.tensors.begin(), data.tensors.end(),
                                   [&](const ad::NamedTensor& t) { return t.name == target.name; });
            if (it == data.tensors.end()) throw BadConfig("checkpoint lacks parameter " + target.name);
            if (it->tensor.shape() != target.tensor.shape())
                throw BadConfig("checkpoint parameter " + target.name + " has shape " + ad::shape_str(it->tensor.shape()));
            std::copy(it->tensor.data().begin(), it->tensor.data().end(), target.tensor.mutable_data().begin());
        }
    };
    auto assign_stats = [&](std::vector<std::pair<std::string, ad::RunningStats*>> targets) {
        for (auto& [name, st] : targets) {
            auto it = std::find_if(data.stats.begin(), data.stats.end(),
                                   [&](const ad::NamedStats& s) { return s.name == name; });
            if (it == data.stats.end()) throw BadConfig("checkpoint lacks batchnorm stats " + name);
            if (it->stats.channels() != st->channels()) throw BadConfig("checkpoint stats " + name + " channel mismatch");
            *st = it->stats;
        }
    };
    assign(snap.params.generator.parameters());
    assign(snap.params.discriminator.parameters());
    assign_stats(snap.params.generator.running_stats());
    assign_stats(snap.params.discriminator.running_stats());
    return snap;
}

void save_model(const std::filesystem::path& path, NetworkParams& params, std::span<const FeatureVector> pool,
                std::uint64_t iteration) {
    ad::save_checkpoint(path, to_checkpoint(params, pool, iteration));
}

ModelSnapshot load_model(const std::filesystem::path& path, const std::optional<ArchConfig>& expected) {
    return from_checkpoint(ad::load_checkpoint(path), expected);
}

}  // namespace nn
CESAGAN_NAMESPACE_END
