#include <algorithm>
#include <cmath>
#include <vector>

#include "parallel.hpp"
#include "scnet/kernels/kernels.hpp"

namespace scnet::kernels {
namespace {

void check_index_grid(const Shape& values, const Tensor<std::int32_t>& indices, const Shape& full) {
    if (!(indices.shape() == values))
        throw ShapeError("unpool: index grid " + to_string(indices.shape()) +
                         " does not match pooled map " + to_string(values));
    if (full.channels != values.channels || full.height != 2 * values.height ||
        full.width != 2 * values.width)
        throw ShapeError("unpool: target " + to_string(full) + " is not twice " + to_string(values));
}

// Source sampling table for one axis of a half-pixel-centered bilinear resize.
struct AxisTable {
    std::vector<int> lo;
    std::vector<int> hi;
    std::vector<double> frac;
};

AxisTable axis_table(int in, int out) {
    AxisTable t;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        const double src = std::max((o + 0.5) * scale - 0.5, 0.0);
        const int i0 = std::min(static_cast<int>(src), in - 1);
        t.lo[o] = i0;
        t.hi[o] = std::min(i0 + 1, in - 1);
        t.frac[o] = src - i0;
    }
    return t;
}

}  // namespace

template <typename T>
PoolResult<T> max_pool2x2(const Tensor<T>& x) {
    if (x.height() % 2 != 0 || x.width() % 2 != 0)
        throw ShapeError("max_pool2x2: spatial size must be even, got " + to_string(x.shape()));
    const int oh = x.height() / 2;
    const int ow = x.width() / 2;
    const int w = x.width();
    PoolResult<T> r{Tensor<T>(x.channels(), oh, ow), Tensor<std::int32_t>(x.channels(), oh, ow)};
    SCNET_PARALLEL_FOR
    for (int c = 0; c < x.channels(); ++c) {
        const T* in = x.channel(c).data();
        T* out = r.output.channel(c).data();
        std::int32_t* idx = r.indices.channel(c).data();
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int base = 2 * oy * w + 2 * ox;
                const int cand[4] = {base, base + 1, base + w, base + w + 1};
                int best = cand[0];
                for (int i = 1; i < 4; ++i)
                    if (in[cand[i]] > in[best]) best = cand[i];
                out[oy * ow + ox] = in[best];
                idx[oy * ow + ox] = best;
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> max_pool2x2_backward(const Tensor<T>& grad_y, const Tensor<std::int32_t>& indices,
                               const Shape& input_shape) {
    return max_unpool2x2(grad_y, indices, input_shape);
}

template <typename T>
Tensor<T> max_unpool2x2(const Tensor<T>& x, const Tensor<std::int32_t>& indices,
                        const Shape& output_shape) {
    check_index_grid(x.shape(), indices, output_shape);
    Tensor<T> y(output_shape);
    const int ow = x.width();
    const int w = output_shape.width;
    std::vector<char> bad(static_cast<std::size_t>(x.channels()), 0);
    SCNET_PARALLEL_FOR
    for (int c = 0; c < x.channels(); ++c) {
        const T* in = x.channel(c).data();
        const std::int32_t* idx = indices.channel(c).data();
        T* out = y.channel(c).data();
        for (int oy = 0; oy < x.height(); ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const std::int32_t pos = idx[oy * ow + ox];
                const int py = pos / w;
                const int px = pos % w;
                if (pos < 0 || py / 2 != oy || px / 2 != ox) {
                    bad[c] = 1;
                    continue;
                }
                out[pos] = in[oy * ow + ox];
            }
        }
    }
    if (std::find(bad.begin(), bad.end(), 1) != bad.end())
        throw ShapeError("unpool: an index points outside its 2x2 pooling window");
    return y;
}

template <typename T>
Tensor<T> max_unpool2x2_backward(const Tensor<T>& grad_y, const Tensor<std::int32_t>& indices) {
    const Shape pooled = indices.shape();
    check_index_grid(pooled, indices, grad_y.shape());
    Tensor<T> g(pooled);
    SCNET_PARALLEL_FOR
    for (int c = 0; c < pooled.channels; ++c) {
        const T* in = grad_y.channel(c).data();
        const std::int32_t* idx = indices.channel(c).data();
        T* out = g.channel(c).data();
        for (std::size_t i = 0; i < pooled.plane(); ++i) out[i] = in[idx[i]];
    }
    return g;
}

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: target size must be positive");
    if (out_h == x.height() && out_w == x.width()) return x;
    const AxisTable ty = axis_table(x.height(), out_h);
    const AxisTable tx = axis_table(x.width(), out_w);
    Tensor<T> y(x.channels(), out_h, out_w);
    const int w = x.width();
    SCNET_PARALLEL_FOR
    for (int c = 0; c < x.channels(); ++c) {
        const T* in = x.channel(c).data();
        T* out = y.channel(c).data();
        for (int oy = 0; oy < out_h; ++oy) {
            const T fy = static_cast<T>(ty.frac[oy]);
            const T* r0 = in + static_cast<std::size_t>(ty.lo[oy]) * w;
            const T* r1 = in + static_cast<std::size_t>(ty.hi[oy]) * w;
            for (int ox = 0; ox < out_w; ++ox) {
                const T fx = static_cast<T>(tx.frac[ox]);
                const T top = r0[tx.lo[ox]] * (1 - fx) + r0[tx.hi[ox]] * fx;
                const T bot = r1[tx.lo[ox]] * (1 - fx) + r1[tx.hi[ox]] * fx;
                out[static_cast<std::size_t>(oy) * out_w + ox] = top * (1 - fy) + bot * fy;
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_y, const Shape& input_shape) {
    if (grad_y.channels() != input_shape.channels)
        throw ShapeError("resize_bilinear_backward: channel mismatch");
    if (grad_y.shape() == input_shape) return grad_y;
    const int out_h = grad_y.height();
    const int out_w = grad_y.width();
    const AxisTable ty = axis_table(input_shape.height, out_h);
    const AxisTable tx = axis_table(input_shape.width, out_w);
    Tensor<T> g(input_shape);
    const int w = input_shape.width;
    SCNET_PARALLEL_FOR
    for (int c = 0; c < input_shape.channels; ++c) {
        const T* in = grad_y.channel(c).data();
        T* out = g.channel(c).data();
        for (int oy = 0; oy < out_h; ++oy) {
            const T fy = static_cast<T>(ty.frac[oy]);
            T* r0 = out + static_cast<std::size_t>(ty.lo[oy]) * w;
            T* r1 = out + static_cast<std::size_t>(ty.hi[oy]) * w;
            for (int ox = 0; ox < out_w; ++ox) {
                const T fx = static_cast<T>(tx.frac[ox]);
                const T v = in[static_cast<std::size_t>(oy) * out_w + ox];
                r0[tx.lo[ox]] += v * (1 - fy) * (1 - fx);
                r0[tx.hi[ox]] += v * (1 - fy) * fx;
                r1[tx.lo[ox]] += v * fy * (1 - fx);
                r1[tx.hi[ox]] += v * fy * fx;
            }
        }
    }
    return g;
}

template <typename T>
InstanceNormResult<T> instance_norm_forward(const Tensor<T>& x, std::span<const T> gamma,
                                            std::span<const T> beta, T eps) {
    const int channels = x.channels();
    if (gamma.size() != static_cast<std::size_t>(channels) || beta.size() != gamma.size())
        throw ShapeError("instance_norm: affine parameters do not match " + to_string(x.shape()));
    InstanceNormResult<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape()),
                            std::vector<T>(static_cast<std::size_t>(channels))};
    const double n = static_cast<double>(x.shape().plane());
    SCNET_PARALLEL_FOR
    for (int c = 0; c < channels; ++c) {
        const auto in = x.channel(c);
        double mean = 0.0;
        for (T v : in) mean += v;
        mean /= n;
        double var = 0.0;
        for (T v : in) var += (v - mean) * (v - mean);
        var /= n;
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        r.inv_std[c] = static_cast<T>(inv);
        auto xh = r.normalized.channel(c);
        auto out = r.output.channel(c);
        for (std::size_t i = 0; i < in.size(); ++i) {
            xh[i] = static_cast<T>((in[i] - mean) * inv);
            out[i] = gamma[c] * xh[i] + beta[c];
        }
    }
    return r;
}

template <typename T>
Tensor<T> instance_norm_backward(const Tensor<T>& grad_y, const Tensor<T>& normalized,
                                 std::span<const T> inv_std, std::span<const T> gamma,
                                 std::span<T> grad_gamma, std::span<T> grad_beta) {
    require_same_shape(grad_y.shape(), normalized.shape(), "instance_norm_backward");
    Tensor<T> g(grad_y.shape());
    const double n = static_cast<double>(grad_y.shape().plane());
    SCNET_PARALLEL_FOR
    for (int c = 0; c < grad_y.channels(); ++c) {
        const auto dy = grad_y.channel(c);
        const auto xh = normalized.channel(c);
        double sum_dy = 0.0;
        double sum_dy_xh = 0.0;
        for (std::size_t i = 0; i < dy.size(); ++i) {
            sum_dy += dy[i];
            sum_dy_xh += static_cast<double>(dy[i]) * xh[i];
        }
        grad_gamma[c] += static_cast<T>(sum_dy_xh);
        grad_beta[c] += static_cast<T>(sum_dy);
        const double scale = static_cast<double>(gamma[c]) * inv_std[c] / n;
        auto out = g.channel(c);
        for (std::size_t i = 0; i < dy.size(); ++i)
            out[i] = static_cast<T>(scale * (n * dy[i] - sum_dy - xh[i] * sum_dy_xh));
    }
    return g;
}

template <typename T>
void relu_inplace(Tensor<T>& x) {
    auto v = x.values();
    const std::size_t n = v.size();
    SCNET_PARALLEL_FOR
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > T{} ? v[i] : T{};
}

template <typename T>
void relu_backward_inplace(Tensor<T>& grad, const Tensor<T>& activation) {
    require_same_shape(grad.shape(), activation.shape(), "relu_backward");
    auto g = grad.values();
    auto a = activation.values();
    const std::size_t n = g.size();
    SCNET_PARALLEL_FOR
    for (std::size_t i = 0; i < n; ++i)
        if (!(a[i] > T{})) g[i] = T{};
}

template <typename T>
T sigmoid(T v) noexcept {
    if (v >= 0) return T{1} / (T{1} + std::exp(-v));
    const T e = std::exp(v);
    return e / (T{1} + e);
}

#define SCNET_INSTANTIATE_SPATIAL(T)                                                               \
    template PoolResult<T> max_pool2x2(const Tensor<T>&);                                          \
    template Tensor<T> max_pool2x2_backward(const Tensor<T>&, const Tensor<std::int32_t>&,         \
                                            const Shape&);                                         \
    template Tensor<T> max_unpool2x2(const Tensor<T>&, const Tensor<std::int32_t>&, const Shape&); \
    template Tensor<T> max_unpool2x2_backward(const Tensor<T>&, const Tensor<std::int32_t>&);      \
    template Tensor<T> resize_bilinear(const Tensor<T>&, int, int);                                \
    template Tensor<T> resize_bilinear_backward(const Tensor<T>&, const Shape&);                   \
    template InstanceNormResult<T> instance_norm_forward(const Tensor<T>&, std::span<const T>,     \
                                                         std::span<const T>, T);                   \
    template Tensor<T> instance_norm_backward(const Tensor<T>&, const Tensor<T>&,                  \
                                              std::span<const T>, std::span<const T>,              \
                                              std::span<T>, std::span<T>);                         \
    template void relu_inplace(Tensor<T>&);                                                        \
    template void relu_backward_inplace(Tensor<T>&, const Tensor<T>&);                             \
    template T sigmoid(T) noexcept;

SCNET_INSTANTIATE_SPATIAL(float)
SCNET_INSTANTIATE_SPATIAL(double)

}  // namespace scnet::kernels
