#pragma once

#include "cesagan/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cesagan/checkpoint.hpp"
#include "cesagan/level.hpp"
#include "cesagan/ops.hpp"
#include "cesagan/random.hpp"
#include "cesagan/tensor.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace nn {

using ad::Mode;
using ad::Tensor;

enum class DiscriminatorHead { Flatten, AvgPool };

/// Which axis of the score matrix s[i][j] = f(x_i) . g(x_j) the attention softmax runs over.
/// OverKeys normalizes over i for every output position j.
enum class AttentionNormalization { OverKeys };

struct ArchConfig {
    std::size_t height = kCanonicalHeight;
    std::size_t width = kCanonicalWidth;
    std::size_t latent_dim = 32;
    std::size_t g_channels = 32;
    std::size_t d_channels = 32;
    std::size_t g_blocks = 2;
    std::size_t d_blocks = 2;
    std::size_t embed_hidden = 16;
    std::size_t embed_dim = 8;
    std::size_t attention_reduction = 8;
    bool use_attention = true;
    bool use_conditioning = true;
    DiscriminatorHead d_head = DiscriminatorHead::Flatten;
    AttentionNormalization attention_norm = AttentionNormalization::OverKeys;
    double init_std = 0.02;
    ad::BatchNormOptions batchnorm{};

    std::size_t cells() const noexcept { return height * width; }
    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

/// Query/key width: C / reduction, floored at 1.
std::size_t attention_key_channels(std::size_t channels, std::size_t reduction) noexcept;

struct Linear {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
    Tensor operator()(const Tensor& x) const { return ad::linear(x, weight, bias); }
};

struct Conv1x1 {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
    Tensor operator()(const Tensor& x) const { return ad::conv1x1(x, weight, bias); }
};

struct BatchNorm {
    Tensor gamma;
    Tensor beta;
    ad::RunningStats stats;
    Tensor operator()(const Tensor& x, Mode mode, const ad::BatchNormOptions& opts) {
        return ad::batchnorm(x, gamma, beta, stats, mode, opts);
    }
};

struct SelfAttentionParams {
    Tensor w_f;           // [C/8 x C] query
    Tensor w_g;           // [C/8 x C] key
    Tensor w_h;           // [C x C] value
    Tensor w_v;           // [C x C] output
    Tensor merge_weight;  // scalar, residual mixing
};

struct AttentionResult {
    Tensor output;  // same shape as the input
    Tensor beta;    // [N x HW x HW]; row j holds the weights position j puts on every position i
};

/// x: [C x H x W] or [N x C x H x W]. Returns x + merge_weight * v(sum_i beta[j][i] h(x_i)).
AttentionResult self_attention(const Tensor& x, const SelfAttentionParams& params);

struct EmbeddingParams {
    Linear hidden;  // 8 -> 16
    Linear output;  // 16 -> 8
};

/// u: [N x 8] counts already divided by the cell count. Returns t(u): [N x embed_dim].
Tensor embed_features(const Tensor& u, const EmbeddingParams& params);
Tensor embed_features(const FeatureVector& u, std::size_t cells, const EmbeddingParams& params);

/// Counts / cells as an [N x 8] tensor.
Tensor features_tensor(std::span<const FeatureVector> features, std::size_t cells);
/// One-hot levels as an [N x 8 x H x W] tensor.
Tensor levels_tensor(std::span<const LevelGrid> levels);
/// Uniform [-1, 1]^latent_dim samples as [N x latent_dim].
Tensor sample_latent(Rng& rng, std::size_t count, std::size_t latent_dim);

class Generator {
public:
    Generator(const ArchConfig& arch, Rng& rng);

    /// z: [N x latent_dim], u: [N x 8] normalized features. Returns logits [N x 8 x H x W].
    Tensor forward(const Tensor& z, const Tensor& u, Mode mode);

    std::vector<ad::NamedTensor> parameters();
    std::vector<std::pair<std::string, ad::RunningStats*>> running_stats();

    const ArchConfig& arch() const noexcept { return arch_; }
    SelfAttentionParams& attention() noexcept { return attention_; }
    EmbeddingParams& embedding() noexcept { return embedding_; }

private:
    friend struct NetworkParams;
    template <typename F>
    void visit_tensors(F&& f);

    ArchConfig arch_;
    Linear project_;
    BatchNorm project_bn_;
    std::vector<Conv1x1> convs_;
    std::vector<BatchNorm> bns_;
    SelfAttentionParams attention_;
    EmbeddingParams embedding_;
    Conv1x1 out_;
};

class Discriminator {
public:
    Discriminator(const ArchConfig& arch, Rng& rng);

    /// x: [N x 8 x H x W], u: [N x 8] normalized features. Returns raw scores [N].
    Tensor forward(const Tensor& x, const Tensor& u, Mode mode);

    std::vector<ad::NamedTensor> parameters();
    std::vector<std::pair<std::string, ad::RunningStats*>> running_stats();

    const ArchConfig& arch() const noexcept { return arch_; }
    SelfAttentionParams& attention() noexcept { return attention_; }
    EmbeddingParams& embedding() noexcept { return embedding_; }
    Linear& head() noexcept { return head_; }

private:
    friend struct NetworkParams;
    template <typename F>
    void visit_tensors(F&& f);

    ArchConfig arch_;
    std::vector<Conv1x1> convs_;
    std::vector<BatchNorm> bns_;
    SelfAttentionParams attention_;
    EmbeddingParams embedding_;
    Conv1x1 merge_;
    BatchNorm merge_bn_;
    Linear head_;
};

struct NetworkParams {
    ArchConfig arch;
    Generator generator;
    Discriminator discriminator;

    /// Initializes G then D from `rng`.
    NetworkParams(const ArchConfig& arch, Rng& rng);
    /// Deep copy: parameters and running stats share nothing with the original.
    NetworkParams clone() const;
};

/// Samples `count` levels with eval-mode batchnorm. u comes from `u_override` when set,
/// otherwise uniformly from `conditioning_pool`.
std::vector<LevelGrid> generate_levels(Generator& generator, std::span<const FeatureVector> conditioning_pool,
                                       const std::optional<FeatureVector>& u_override, std::size_t count,
                                       Rng& rng, std::size_t chunk = 64);

/// A trained model as stored on disk.
struct ModelSnapshot {
    NetworkParams params;
    std::vector<FeatureVector> conditioning_pool;
    std::uint64_t iteration = 0;
};

std::string arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const std::string& text);

ad::CheckpointData to_checkpoint(NetworkParams& params, std::span<const FeatureVector> pool,
                                 std::uint64_t iteration);
/// Rebuilds a snapshot. When `expected` is given the stored architecture must equal it (BadConfig).
ModelSnapshot from_checkpoint(const ad::CheckpointData& data, const std::optional<ArchConfig>& expected = {});

void save_model(const std::filesystem::path& path, NetworkParams& params, std::span<const FeatureVector> pool,
                std::uint64_t iteration);
ModelSnapshot load_model(const std::filesystem::path& path, const std::optional<ArchConfig>& expected = {});

}  // namespace nn
CESAGAN_NAMESPACE_END
