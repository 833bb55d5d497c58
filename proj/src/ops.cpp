#include "cesagan/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN
namespace ad {

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const Mat>;
using Map = Eigen::Map<Mat>;
using VecC = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
using Vec = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

void require(bool cond, const std::string& what) {
    if (!cond) throw ShapeMismatch(what);
}

// Splits a rank-3 [C x H x W] or rank-4 [N x C x H x W] tensor into (N, C, H*W).
struct Nchw {
    std::size_t n, c, hw;
    Shape spatial;  // {H, W}
};

Nchw as_nchw(const Tensor& x, const char* op) {
    if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3), {x.dim(2), x.dim(3)}};
    if (x.rank() == 3) return {1, x.dim(0), x.dim(1) * x.dim(2), {x.dim(1), x.dim(2)}};
    throw ShapeMismatch(std::string(op) + ": expected rank 3 or 4 input, got " + shape_str(x.shape()));
}

Shape with_channels(const Tensor& x, std::size_t channels) {
    Shape s = x.shape();
    s[x.rank() == 4 ? 1 : 0] = channels;
    return s;
}

void accumulate(const Tensor& t, std::span<const Real> g) {
    auto buf = t.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: expects rank-2 operands");
    require(a.dim(1) == b.dim(0), "matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                      shape_str(b.shape()));
    const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Buffer out(m * n);
    Map(out.data(), m, n).noalias() = MapC(a.data().data(), m, k) * MapC(b.data().data(), k, n);
    return make_result({m, n}, std::move(out), {&a, &b}, [a, b, m, k, n](std::span<const Real> og) mutable {
        MapC dout(og.data(), m, n);
        if (a.requires_grad()) Map(a.grad_buffer().data(), m, k).noalias() += dout * MapC(b.data().data(), k, n).transpose();
        if (b.requires_grad()) Map(b.grad_buffer().data(), k, n).noalias() += MapC(a.data().data(), m, k).transpose() * dout;
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    require(a.rank() == 3 && b.rank() == 3, "bmm: expects rank-3 operands");
    require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1),
            "bmm: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const auto bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    Buffer out(bs * m * n);
    for (std::size_t i = 0; i < bs; ++i) {
        Map(out.data() + i * m * n, m, n).noalias() =
            MapC(a.data().data() + i * m * k, m, k) * MapC(b.data().data() + i * k * n, k, n);
    }
    return make_result({bs, m, n}, std::move(out), {&a, &b}, [a, b, bs, m, k, n](std::span<const Real> og) mutable {
        for (std::size_t i = 0; i < bs; ++i) {
            MapC dout(og.data() + i * m * n, m, n);
            if (a.requires_grad())
                Map(a.grad_buffer().data() + i * m * k, m, k).noalias() +=
                    dout * MapC(b.data().data() + i * k * n, k, n).transpose();
            if (b.requires_grad())
                Map(b.grad_buffer().data() + i * k * n, k, n).noalias() +=
                    MapC(a.data().data() + i * m * k, m, k).transpose() * dout;
        }
    });
}

Tensor transpose_last2(const Tensor& a) {
    require(a.rank() == 2 || a.rank() == 3, "transpose_last2: expects rank 2 or 3");
    const std::size_t bs = a.rank() == 3 ? a.dim(0) : 1;
    const std::size_t m = a.dim(a.rank() - 2), n = a.dim(a.rank() - 1);
    Buffer out(a.numel());
    for (std::size_t i = 0; i < bs; ++i)
        Map(out.data() + i * m * n, n, m) = MapC(a.data().data() + i * m * n, m, n).transpose();
    Shape s = a.shape();
    std::swap(s[s.size() - 2], s[s.size() - 1]);
    return make_result(std::move(s), std::move(out), {&a}, [a, bs, m, n](std::span<const Real> og) mutable {
        auto g = a.grad_buffer();
        for (std::size_t i = 0; i < bs; ++i)
            Map(g.data() + i * m * n, m, n) += MapC(og.data() + i * m * n, n, m).transpose();
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    require(shape_numel(shape) == a.numel(),
            "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    Buffer out(a.data().begin(), a.data().end());
    return make_result(std::move(shape), std::move(out), {&a},
                       [a](std::span<const Real> og) mutable { accumulate(a, og); });
}

Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& bias) {
    const Nchw d = as_nchw(x, "conv1x1");
    require(w.rank() == 2 && w.dim(1) == d.c,
            "conv1x1: weight " + shape_str(w.shape()) + " does not match input " + shape_str(x.shape()));
    const std::size_t cout = w.dim(0), cin = d.c, hw = d.hw, n = d.n;
    require(!bias.defined() || (bias.rank() == 1 && bias.dim(0) == cout), "conv1x1: bias length mismatch");
    Buffer out(n * cout * hw);
    MapC wm(w.data().data(), cout, cin);
    for (std::size_t i = 0; i < n; ++i) {
        Map o(out.data() + i * cout * hw, cout, hw);
        o.noalias() = wm * MapC(x.data().data() + i * cin * hw, cin, hw);
        if (bias.defined()) o.colwise() += VecC(bias.data().data(), cout);
    }
    return make_result(with_channels(x, cout), std::move(out), {&x, &w, &bias},
                       [x, w, bias, n, cin, cout, hw](std::span<const Real> og) mutable {
                           MapC wm(w.data().data(), cout, cin);
                           for (std::size_t i = 0; i < n; ++i) {
                               MapC dout(og.data() + i * cout * hw, cout, hw);
                               MapC xi(x.data().data() + i * cin * hw, cin, hw);
                               if (w.requires_grad()) Map(w.grad_buffer().data(), cout, cin).noalias() += dout * xi.transpose();
                               if (x.requires_grad())
                                   Map(x.grad_buffer().data() + i * cin * hw, cin, hw).noalias() += wm.transpose() * dout;
                               if (bias.defined() && bias.requires_grad())
                                   Vec(bias.grad_buffer().data(), cout) += dout.rowwise().sum();
                           }
                       });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    require(x.rank() == 2 && w.rank() == 2 && w.dim(1) == x.dim(1),
            "linear: input " + shape_str(x.shape()) + " does not match weight " + shape_str(w.shape()));
    const std::size_t n = x.dim(0), in = x.dim(1), outd = w.dim(0);
    require(!bias.defined() || (bias.rank() == 1 && bias.dim(0) == outd), "linear: bias length mismatch");
    Buffer out(n * outd);
    Map o(out.data(), n, outd);
    o.noalias() = MapC(x.data().data(), n, in) * MapC(w.data().data(), outd, in).transpose();
    if (bias.defined()) o.rowwise() += VecC(bias.data().data(), outd).transpose();
    return make_result({n, outd}, std::move(out), {&x, &w, &bias},
                       [x, w, bias, n, in, outd](std::span<const Real> og) mutable {
                           MapC dout(og.data(), n, outd);
                           if (x.requires_grad())
                               Map(x.grad_buffer().data(), n, in).noalias() += dout * MapC(w.data().data(), outd, in);
                           if (w.requires_grad())
                               Map(w.grad_buffer().data(), outd, in).noalias() += dout.transpose() * MapC(x.data().data(), n, in);
                           if (bias.defined() && bias.requires_grad())
                               Vec(bias.grad_buffer().data(), outd) += dout.colwise().sum().transpose();
                       });
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& stats, Mode mode,
                 const BatchNormOptions& options) {
    require(x.rank() == 2 || x.rank() == 4, "batchnorm: expects [N x C] or [N x C x H x W]");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
    require(n >= 1, "batchnorm: empty batch");
    require(gamma.numel() == c && beta.numel() == c && stats.channels() == c, "batchnorm: channel count mismatch");
    if (mode == Mode::Eval && !stats.initialized)
        throw UninitializedStats("batchnorm: eval mode before any training step");

    const double count = static_cast<double>(n * hw);
    Buffer xhat(x.numel());
    std::vector<double> inv_std(c);
    auto xs = x.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        double mu, var;
        if (mode == Mode::Train) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < hw; ++p) s += xs[(i * c + ch) * hw + p];
            mu = s / count;
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < hw; ++p) {
                    const double dv = xs[(i * c + ch) * hw + p] - mu;
                    sq += dv * dv;
                }
            var = sq / count;
            stats.mean[ch] = static_cast<Real>(options.momentum * stats.mean[ch] + (1.0 - options.momentum) * mu);
            stats.var[ch] = static_cast<Real>(options.momentum * stats.var[ch] + (1.0 - options.momentum) * var);
        } else {
            mu = stats.mean[ch];
            var = stats.var[ch];
        }
        inv_std[ch] = 1.0 / std::sqrt(var + options.epsilon);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < hw; ++p) {
                const std::size_t idx = (i * c + ch) * hw + p;
                xhat[idx] = static_cast<Real>((xs[idx] - mu) * inv_std[ch]);
            }
    }
    if (mode == Mode::Train) stats.initialized = true;

    Buffer out(x.numel());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < hw; ++p) {
                const std::size_t idx = (i * c + ch) * hw + p;
                out[idx] = gamma[ch] * xhat[idx] + beta[ch];
            }

    return make_result(x.shape(), std::move(out), {&x, &gamma, &beta},
                       [x, gamma, beta, mode, n, c, hw, count, xhat = std::move(xhat),
                        inv_std = std::move(inv_std)](std::span<const Real> og) mutable {
                           for (std::size_t ch = 0; ch < c; ++ch) {
                               double sum_dy = 0.0, sum_dy_xhat = 0.0;
                               for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t p = 0; p < hw; ++p) {
                                       const std::size_t idx = (i * c + ch) * hw + p;
                                       sum_dy += og[idx];
                                       sum_dy_xhat += static_cast<double>(og[idx]) * xhat[idx];
                                   }
                               if (gamma.requires_grad()) gamma.grad_buffer()[ch] += static_cast<Real>(sum_dy_xhat);
                               if (beta.requires_grad()) beta.grad_buffer()[ch] += static_cast<Real>(sum_dy);
                               if (!x.requires_grad()) continue;
                               auto gx = x.grad_buffer();
                               const double scale = gamma[ch] * inv_std[ch];
                               for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t p = 0; p < hw; ++p) {
                                       const std::size_t idx = (i * c + ch) * hw + p;
                                       if (mode == Mode::Train) {
                                           gx[idx] += static_cast<Real>(
                                               scale / count * (count * og[idx] - sum_dy - xhat[idx] * sum_dy_xhat));
                                       } else {
                                           gx[idx] += static_cast<Real>(scale * og[idx]);
                                       }
                                   }
                           }
                       });
}

Tensor relu(const Tensor& x) {
    Buffer out(x.numel());
    auto xs = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xs[i] > 0 ? xs[i] : Real(0);
    return make_result(x.shape(), std::move(out), {&x}, [x](std::span<const Real> og) mutable {
        auto g = x.grad_buffer();
        auto xs = x.data();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xs[i] > 0) g[i] += og[i];
    });
}

Tensor softmax_rows(const Tensor& x) {
    require(x.rank() >= 1 && x.numel() > 0, "softmax_rows: empty input");
    const std::size_t m = x.dim(x.rank() - 1), rows = x.numel() / m;
    Buffer out(x.numel());
    auto xs = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const Real* in = xs.data() + r * m;
        Real* o = out.data() + r * m;
        const Real mx = *std::max_element(in, in + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        const Real inv = static_cast<Real>(1.0 / z);
        for (std::size_t j = 0; j < m; ++j) o[j] *= inv;
    }
    Buffer y = out;
    return make_result(x.shape(), std::move(out), {&x}, [x, y = std::move(y), m, rows](std::span<const Real> og) mutable {
        auto g = x.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) dot += static_cast<double>(og[r * m + j]) * y[r * m + j];
            for (std::size_t j = 0; j < m; ++j)
                g[r * m + j] += static_cast<Real>(y[r * m + j] * (og[r * m + j] - dot));
        }
    });
}

Tensor softmax_channels(const Tensor& x) {
    require(x.rank() == 4, "softmax_channels: expects [N x C x H x W]");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Buffer out(x.numel());
    auto xs = x.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < hw; ++p) {
            const std::size_t base = i * c * hw + p;
            Real mx = xs[base];
            for (std::size_t ch = 1; ch < c; ++ch) mx = std::max(mx, xs[base + ch * hw]);
            double z = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) z += std::exp(static_cast<double>(xs[base + ch * hw] - mx));
            for (std::size_t ch = 0; ch < c; ++ch)
                out[base + ch * hw] = static_cast<Real>(std::exp(static_cast<double>(xs[base + ch * hw] - mx)) / z);
        }
    Buffer y = out;
    return make_result(x.shape(), std::move(out), {&x}, [x, y = std::move(y), n, c, hw](std::span<const Real> og) mutable {
        auto g = x.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < hw; ++p) {
                const std::size_t base = i * c * hw + p;
                double dot = 0.0;
                for (std::size_t ch = 0; ch < c; ++ch)
                    dot += static_cast<double>(og[base + ch * hw]) * y[base + ch * hw];
                for (std::size_t ch = 0; ch < c; ++ch)
                    g[base + ch * hw] += static_cast<Real>(y[base + ch * hw] * (og[base + ch * hw] - dot));
            }
    });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const Nchw da = as_nchw(a, "concat_channels"), db = as_nchw(b, "concat_channels");
    require(a.rank() == b.rank() && da.n == db.n && da.spatial == db.spatial,
            "concat_channels: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t n = da.n, ca = da.c, cb = db.c, hw = da.hw;
    Buffer out(n * (ca + cb) * hw);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(a.data().data() + i * ca * hw, ca * hw, out.data() + i * (ca + cb) * hw);
        std::copy_n(b.data().data() + i * cb * hw, cb * hw, out.data() + (i * (ca + cb) + ca) * hw);
    }
    return make_result(with_channels(a, ca + cb), std::move(out), {&a, &b},
                       [a, b, n, ca, cb, hw](std::span<const Real> og) mutable {
                           for (std::size_t i = 0; i < n; ++i) {
                               const Real* src = og.data() + i * (ca + cb) * hw;
                               if (a.requires_grad()) {
                                   Real* dst = a.grad_buffer().data() + i * ca * hw;
                                   for (std::size_t k = 0; k < ca * hw; ++k) dst[k] += src[k];
                               }
                               if (b.requires_grad()) {
                                   Real* dst = b.grad_buffer().data() + i * cb * hw;
                                   for (std::size_t k = 0; k < cb * hw; ++k) dst[k] += src[ca * hw + k];
                               }
                           }
                       });
}

Tensor scale_add(const Tensor& a, const Tensor& b, Real alpha) {
    require(a.shape() == b.shape(), "scale_add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + alpha * b[i];
    return make_result(a.shape(), std::move(out), {&a, &b}, [a, b, alpha](std::span<const Real> og) mutable {
        if (a.requires_grad()) accumulate(a, og);
        if (b.requires_grad()) {
            auto g = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * og[i];
        }
    });
}

Tensor scale_add(const Tensor& a, const Tensor& b, const Tensor& alpha) {
    require(a.shape() == b.shape(), "scale_add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    require(alpha.numel() == 1, "scale_add: alpha must be a scalar");
    const Real s = alpha[0];
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + s * b[i];
    return make_result(a.shape(), std::move(out), {&a, &b, &alpha}, [a, b, alpha](std::span<const Real> og) mutable {
        const Real s = alpha[0];
        if (a.requires_grad()) accumulate(a, og);
        if (b.requires_grad()) {
            auto g = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * og[i];
        }
        if (alpha.requires_grad()) {
            double d = 0.0;
            for (std::size_t i = 0; i < og.size(); ++i) d += static_cast<double>(og[i]) * b[i];
            alpha.grad_buffer()[0] += static_cast<Real>(d);
        }
    });
}

Tensor broadcast_spatial(const Tensor& x, std::size_t height, std::size_t width) {
    require(x.rank() == 2, "broadcast_spatial: expects [N x C]");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = height * width;
    Buffer out(n * c * hw);
    for (std::size_t i = 0; i < n * c; ++i) std::fill_n(out.data() + i * hw, hw, x[i]);
    return make_result({n, c, height, width}, std::move(out), {&x}, [x, n, c, hw](std::span<const Real> og) mutable {
        auto g = x.grad_buffer();
        for (std::size_t i = 0; i < n * c; ++i) {
            double s = 0.0;
            for (std::size_t p = 0; p < hw; ++p) s += og[i * hw + p];
            g[i] += static_cast<Real>(s);
        }
    });
}

Tensor global_avg_pool(const Tensor& x) {
    require(x.rank() == 4, "global_avg_pool: expects [N x C x H x W]");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Buffer out(n * c);
    for (std::size_t i = 0; i < n * c; ++i) {
        double s = 0.0;
        for (std::size_t p = 0; p < hw; ++p) s += x[i * hw + p];
        out[i] = static_cast<Real>(s / static_cast<double>(hw));
    }
    return make_result({n, c}, std::move(out), {&x}, [x, n, c, hw](std::span<const Real> og) mutable {
        auto g = x.grad_buffer();
        const Real inv = Real(1) / static_cast<Real>(hw);
        for (std::size_t i = 0; i < n * c; ++i)
            for (std::size_t p = 0; p < hw; ++p) g[i * hw + p] += og[i] * inv;
    });
}

Tensor add(const Tensor& a, const Tensor& b) { return scale_add(a, b, Real(1)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return make_result(a.shape(), std::move(out), {&a, &b}, [a, b](std::span<const Real> og) mutable {
        if (a.requires_grad()) {
            auto g = a.grad_buffer();
            for (std::size_t i = 0; i < og.size(); ++i) g[i] += og[i] * b[i];
        }
        if (b.requires_grad()) {
            auto g = b.grad_buffer();
            for (std::size_t i = 0; i < og.size(); ++i) g[i] += og[i] * a[i];
        }
    });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (Real v : x.data()) s += v;
    return make_result({1}, {static_cast<Real>(s)}, {&x}, [x](std::span<const Real> og) mutable {
        for (auto& g : x.grad_buffer()) g += og[0];
    });
}

Tensor mean(const Tensor& x) {
    require(x.numel() > 0, "mean: empty tensor");
    double s = 0.0;
    for (Real v : x.data()) s += v;
    const double n = static_cast<double>(x.numel());
    return make_result({1}, {static_cast<Real>(s / n)}, {&x}, [x, n](std::span<const Real> og) mutable {
        const Real g0 = static_cast<Real>(og[0] / n);
        for (auto& g : x.grad_buffer()) g += g0;
    });
}

}  // namespace ad
CESAGAN_NAMESPACE_END
