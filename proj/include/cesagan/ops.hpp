#pragma once

#include "cesagan/config.hpp"

#include <vector>

#include "cesagan/tensor.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace ad {

enum class Mode { Train, Eval };

struct BatchNormOptions {
    double epsilon = 1e-5;
    double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
    friend bool operator==(const BatchNormOptions&, const BatchNormOptions&) = default;
};

/// Per-channel running mean/variance for batchnorm.
struct RunningStats {
    std::vector<Real> mean;
    std::vector<Real> var;
    bool initialized = false;

    explicit RunningStats(std::size_t channels = 0) : mean(channels, 0), var(channels, 1) {}
    std::size_t channels() const noexcept { return mean.size(); }
    friend bool operator==(const RunningStats&, const RunningStats&) = default;
};

Tensor matmul(const Tensor& a, const Tensor& b);
/// [B x m x k] * [B x k x n] -> [B x m x n]
Tensor bmm(const Tensor& a, const Tensor& b);
/// Swaps the last two axes of a rank-2 or rank-3 tensor.
Tensor transpose_last2(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

/// x: [Cin x H x W] or [N x Cin x H x W]; w: [Cout x Cin]; bias: [Cout] or undefined.
Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& bias);
/// x: [N x in]; w: [out x in]; bias: [out] or undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

/// x: [N x C] or [N x C x H x W]. Train mode normalizes with batch statistics and updates
/// `stats`; eval mode uses `stats` and throws UninitializedStats if none were recorded.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& stats, Mode mode,
                 const BatchNormOptions& options = {});

Tensor relu(const Tensor& x);
/// Softmax along the last axis with max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Softmax along axis 1 of an [N x C x H x W] tensor.
Tensor softmax_channels(const Tensor& x);

/// Concatenates along the channel axis (axis 0 for rank 3, axis 1 for rank 4).
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// a + alpha * b.
Tensor scale_add(const Tensor& a, const Tensor& b, Real alpha);
/// a + alpha * b with a learnable scalar alpha.
Tensor scale_add(const Tensor& a, const Tensor& b, const Tensor& alpha);

/// [N x C] -> [N x C x H x W], repeating each value over all positions.
Tensor broadcast_spatial(const Tensor& x, std::size_t height, std::size_t width);
/// [N x C x H x W] -> [N x C]
Tensor global_avg_pool(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace ad
CESAGAN_NAMESPACE_END
