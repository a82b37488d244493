#include "scnet/kernels/reference.hpp"

#include <algorithm>
#include <cmath>

namespace scnet::reference {

template <typename T>
void gemm(int m, int n, int k, kernels::MatrixRef<T> a, kernels::MatrixRef<T> b, T* c,
          std::ptrdiff_t ldc, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            T acc = accumulate ? c[i * ldc + j] : T{};
            for (int p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
            c[i * ldc + j] = acc;
        }
    }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias,
                         int out_channels, int kernel) {
    const int cin = x.channels();
    const int pad = (kernel - 1) / 2;
    if (weight.size() != static_cast<std::size_t>(out_channels) * cin * kernel * kernel)
        throw ShapeError("reference conv2d: weight size mismatch");
    Tensor<T> y(out_channels, x.height(), x.width());
    for (int co = 0; co < out_channels; ++co) {
        for (int oy = 0; oy < x.height(); ++oy) {
            for (int ox = 0; ox < x.width(); ++ox) {
                T acc = bias[co];
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < kernel; ++ky) {
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int iy = oy + ky - pad;
                            const int ix = ox + kx - pad;
                            if (iy < 0 || iy >= x.height() || ix < 0 || ix >= x.width()) continue;
                            acc += weight[((static_cast<std::size_t>(co) * cin + ci) * kernel + ky) *
                                              kernel + kx] *
                                   x(ci, iy, ix);
                        }
                    }
                }
                y(co, oy, ox) = acc;
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& grad_y,
                          int kernel, std::span<T> grad_weight, std::span<T> grad_bias) {
    const int cin = x.channels();
    const int cout = grad_y.channels();
    const int pad = (kernel - 1) / 2;
    Tensor<T> grad_x(x.shape());
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < x.height(); ++oy) {
            for (int ox = 0; ox < x.width(); ++ox) {
                const T g = grad_y(co, oy, ox);
                grad_bias[co] += g;
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < kernel; ++ky) {
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int iy = oy + ky - pad;
                            const int ix = ox + kx - pad;
                            if (iy < 0 || iy >= x.height() || ix < 0 || ix >= x.width()) continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(co) * cin + ci) * kernel + ky) * kernel + kx;
                            grad_weight[wi] += g * x(ci, iy, ix);
                            grad_x(ci, iy, ix) += g * weight[wi];
                        }
                    }
                }
            }
        }
    }
    return grad_x;
}

template <typename T>
kernels::PoolResult<T> max_pool2x2(const Tensor<T>& x) {
    const int oh = x.height() / 2;
    const int ow = x.width() / 2;
    kernels::PoolResult<T> r{Tensor<T>(x.channels(), oh, ow),
                             Tensor<std::int32_t>(x.channels(), oh, ow)};
    for (int c = 0; c < x.channels(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int by = 2 * oy;
                int bx = 2 * ox;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        if (x(c, 2 * oy + dy, 2 * ox + dx) > x(c, by, bx)) {
                            by = 2 * oy + dy;
                            bx = 2 * ox + dx;
                        }
                r.output(c, oy, ox) = x(c, by, bx);
                r.indices(c, oy, ox) = by * x.width() + bx;
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> max_unpool2x2(const Tensor<T>& x, const Tensor<std::int32_t>& indices,
                        const Shape& output_shape) {
    Tensor<T> y(output_shape);
    for (int c = 0; c < x.channels(); ++c)
        for (int oy = 0; oy < x.height(); ++oy)
            for (int ox = 0; ox < x.width(); ++ox) {
                const int pos = indices(c, oy, ox);
                y(c, pos / output_shape.width, pos % output_shape.width) = x(c, oy, ox);
            }
    return y;
}

namespace {

// Half-pixel-centered source coordinate, clamped like the optimized kernel.
void source_coord(int o, int in, int out, int& i0, int& i1, double& f) {
    double s = (o + 0.5) * in / out - 0.5;
    if (s < 0) s = 0;
    i0 = static_cast<int>(std::floor(s));
    if (i0 > in - 1) i0 = in - 1;
    i1 = i0 + 1 < in ? i0 + 1 : in - 1;
    f = s - i0;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
    Tensor<T> y(x.channels(), out_h, out_w);
    for (int c = 0; c < x.channels(); ++c)
        for (int oy = 0; oy < out_h; ++oy)
            for (int ox = 0; ox < out_w; ++ox) {
                int y0, y1, x0, x1;
                double fy, fx;
                source_coord(oy, x.height(), out_h, y0, y1, fy);
                source_coord(ox, x.width(), out_w, x0, x1, fx);
                const double v = (1 - fy) * ((1 - fx) * x(c, y0, x0) + fx * x(c, y0, x1)) +
                                 fy * ((1 - fx) * x(c, y1, x0) + fx * x(c, y1, x1));
                y(c, oy, ox) = static_cast<T>(v);
            }
    return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_y, const Shape& input_shape) {
    Tensor<T> g(input_shape);
    for (int c = 0; c < input_shape.channels; ++c)
        for (int oy = 0; oy < grad_y.height(); ++oy)
            for (int ox = 0; ox < grad_y.width(); ++ox) {
                int y0, y1, x0, x1;
                double fy, fx;
                source_coord(oy, input_shape.height, grad_y.height(), y0, y1, fy);
                source_coord(ox, input_shape.width, grad_y.width(), x0, x1, fx);
                const double v = grad_y(c, oy, ox);
                g(c, y0, x0) += static_cast<T>(v * (1 - fy) * (1 - fx));
                g(c, y0, x1) += static_cast<T>(v * (1 - fy) * fx);
                g(c, y1, x0) += static_cast<T>(v * fy * (1 - fx));
                g(c, y1, x1) += static_cast<T>(v * fy * fx);
            }
    return g;
}

template <typename T>
kernels::InstanceNormResult<T> instance_norm_forward(const Tensor<T>& x,
                                                     std::span<const T> gamma,
                                                     std::span<const T> beta, T eps) {
    kernels::InstanceNormResult<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape()),
                                     std::vector<T>(static_cast<std::size_t>(x.channels()))};
    const auto n = static_cast<double>(x.shape().plane());
    for (int c = 0; c < x.channels(); ++c) {
        double sum = 0.0;
        double sq = 0.0;
        for (int yy = 0; yy < x.height(); ++yy)
            for (int xx = 0; xx < x.width(); ++xx) sum += x(c, yy, xx);
        const double mean = sum / n;
        for (int yy = 0; yy < x.height(); ++yy)
            for (int xx = 0; xx < x.width(); ++xx) sq += std::pow(x(c, yy, xx) - mean, 2);
        const double sd = std::sqrt(sq / n + eps);
        r.inv_std[c] = static_cast<T>(1.0 / sd);
        for (int yy = 0; yy < x.height(); ++yy)
            for (int xx = 0; xx < x.width(); ++xx) {
                const double z = (x(c, yy, xx) - mean) / sd;
                r.normalized(c, yy, xx) = static_cast<T>(z);
                r.output(c, yy, xx) = static_cast<T>(gamma[c] * z + beta[c]);
            }
    }
    return r;
}

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, std::span<const T> weight,
                                   std::span<const T> bias, int out_channels, int kernel,
                                   int stride, int pad) {
    // Gather form: each output pixel collects the input taps that land on it.
    const int oh = (x.height() - 1) * stride - 2 * pad + kernel;
    const int ow = (x.width() - 1) * stride - 2 * pad + kernel;
    Tensor<T> y(out_channels, oh, ow);
    for (int co = 0; co < out_channels; ++co)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                T acc = bias[co];
                for (int ci = 0; ci < x.channels(); ++ci)
                    for (int ky = 0; ky < kernel; ++ky)
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ny = oy + pad - ky;
                            const int nx = ox + pad - kx;
                            if (ny < 0 || nx < 0 || ny % stride != 0 || nx % stride != 0) continue;
                            const int iy = ny / stride;
                            const int ix = nx / stride;
                            if (iy >= x.height() || ix >= x.width()) continue;
                            acc += x(ci, iy, ix) *
                                   weight[((static_cast<std::size_t>(ci) * out_channels + co) * kernel +
                                           ky) * kernel + kx];
                        }
                y(co, oy, ox) = acc;
            }
    return y;
}

#define SCNET_INSTANTIATE_REFERENCE(T)                                                             \
    template void gemm(int, int, int, kernels::MatrixRef<T>, kernels::MatrixRef<T>, T*,            \
                       std::ptrdiff_t, bool);                                                      \
    template Tensor<T> conv2d_forward(const Tensor<T>&, std::span<const T>, std::span<const T>,    \
                                      int, int);                                                   \
    template Tensor<T> conv2d_backward(const Tensor<T>&, std::span<const T>, const Tensor<T>&, int, \
                                       std::span<T>, std::span<T>);                                \
    template kernels::PoolResult<T> max_pool2x2(const Tensor<T>&);                                 \
    template Tensor<T> max_unpool2x2(const Tensor<T>&, const Tensor<std::int32_t>&, const Shape&); \
    template Tensor<T> resize_bilinear(const Tensor<T>&, int, int);                                \
    template Tensor<T> resize_bilinear_backward(const Tensor<T>&, const Shape&);                   \
    template kernels::InstanceNormResult<T> instance_norm_forward(                                 \
        const Tensor<T>&, std::span<const T>, std::span<const T>, T);                              \
    template Tensor<T> conv_transpose2d_forward(const Tensor<T>&, std::span<const T>,              \
                                                std::span<const T>, int, int, int, int);

SCNET_INSTANTIATE_REFERENCE(float)
SCNET_INSTANTIATE_REFERENCE(double)

}  // namespace scnet::reference
