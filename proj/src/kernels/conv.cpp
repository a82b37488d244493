#include <algorithm>
#include <vector>

#include "parallel.hpp"
#include "scnet/kernels/kernels.hpp"

namespace scnet::kernels {
namespace {

// Upper bound on im2col buffer elements; the image is processed in row bands.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

void check_conv_args(const Shape& x, std::size_t weight_size, int out_channels, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw ShapeError("conv2d: kernel must be odd, got " + std::to_string(kernel));
    const std::size_t expected = static_cast<std::size_t>(out_channels) * x.channels * kernel * kernel;
    if (weight_size != expected)
        throw ShapeError("conv2d: weight holds " + std::to_string(weight_size) +
                         " values but input " + to_string(x) + " with " +
                         std::to_string(out_channels) + " outputs needs " + std::to_string(expected));
}

int band_rows(int channels, int kernel, int height, int width) {
    const std::size_t per_row = static_cast<std::size_t>(channels) * kernel * kernel * width;
    return static_cast<int>(std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_row, 1), 1,
                                                    static_cast<std::size_t>(height)));
}

// col[(c, ky, kx)][r * W + x] = x(c, y0 + r + ky - pad, x + kx - pad), zero outside.
template <typename T>
void im2col(const Tensor<T>& x, int kernel, int y0, int rows, T* col) {
    const int width = x.width();
    const int height = x.height();
    const int pad = (kernel - 1) / 2;
    const std::size_t npix = static_cast<std::size_t>(rows) * width;
    SCNET_PARALLEL_FOR
    for (int c = 0; c < x.channels(); ++c) {
        const T* src = x.channel(c).data();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                T* dst = col + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * npix;
                for (int r = 0; r < rows; ++r) {
                    const int sy = y0 + r + ky - pad;
                    T* out = dst + static_cast<std::size_t>(r) * width;
                    if (sy < 0 || sy >= height) {
                        std::fill_n(out, width, T{});
                        continue;
                    }
                    const T* in = src + static_cast<std::size_t>(sy) * width;
                    const int shift = kx - pad;
                    const int lo = std::max(0, -shift);
                    const int hi = std::min(width, width - shift);
                    std::fill_n(out, lo, T{});
                    std::copy(in + lo + shift, in + hi + shift, out + lo);
                    std::fill(out + hi, out + width, T{});
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, int kernel, int y0, int rows, Tensor<T>& grad_x) {
    const int width = grad_x.width();
    const int height = grad_x.height();
    const int pad = (kernel - 1) / 2;
    const std::size_t npix = static_cast<std::size_t>(rows) * width;
    SCNET_PARALLEL_FOR
    for (int c = 0; c < grad_x.channels(); ++c) {
        T* dst = grad_x.channel(c).data();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const T* src =
                    col + (static_cast<std::size_t>(c) * kernel * kernel + ky * kernel + kx) * npix;
                const int shift = kx - pad;
                const int lo = std::max(0, -shift);
                const int hi = std::min(width, width - shift);
                for (int r = 0; r < rows; ++r) {
                    const int sy = y0 + r + ky - pad;
                    if (sy < 0 || sy >= height) continue;
                    const T* in = src + static_cast<std::size_t>(r) * width;
                    T* out = dst + static_cast<std::size_t>(sy) * width;
                    for (int xx = lo; xx < hi; ++xx) out[xx + shift] += in[xx];
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias,
                         int out_channels, int kernel) {
    check_conv_args(x.shape(), weight.size(), out_channels, kernel);
    if (bias.size() != static_cast<std::size_t>(out_channels))
        throw ShapeError("conv2d: bias size mismatch");
    const int cin = x.channels();
    const int width = x.width();
    const auto plane = static_cast<std::ptrdiff_t>(x.shape().plane());
    Tensor<T> y(out_channels, x.height(), width);
    SCNET_PARALLEL_FOR
    for (int co = 0; co < out_channels; ++co) {
        auto ch = y.channel(co);
        std::fill(ch.begin(), ch.end(), bias[co]);
    }

    const int kdim = cin * kernel * kernel;
    const auto w = row_major(weight.data(), kdim);
    if (kernel == 1) {
        gemm(out_channels, static_cast<int>(plane), cin, w, row_major(x.data(), plane), y.data(),
             plane, true);
        return y;
    }

    const int band = band_rows(cin, kernel, x.height(), width);
    std::vector<T> col(static_cast<std::size_t>(kdim) * band * width);
    for (int y0 = 0; y0 < x.height(); y0 += band) {
        const int rows = std::min(band, x.height() - y0);
        const int npix = rows * width;
        im2col(x, kernel, y0, rows, col.data());
        gemm(out_channels, npix, kdim, w, row_major(col.data(), npix),
             y.data() + static_cast<std::ptrdiff_t>(y0) * width, plane, true);
    }
    return y;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& grad_y,
                          int kernel, std::span<T> grad_weight, std::span<T> grad_bias) {
    const int out_channels = grad_y.channels();
    check_conv_args(x.shape(), weight.size(), out_channels, kernel);
    if (!grad_y.shape().spatially_equal(x.shape()))
        throw ShapeError("conv2d_backward: gradient " + to_string(grad_y.shape()) +
                         " does not match input " + to_string(x.shape()));
    if (grad_weight.size() != weight.size() || grad_bias.size() != static_cast<std::size_t>(out_channels))
        throw ShapeError("conv2d_backward: gradient buffer size mismatch");

    const int cin = x.channels();
    const int width = x.width();
    const auto plane = static_cast<std::ptrdiff_t>(x.shape().plane());
    const int kdim = cin * kernel * kernel;

    SCNET_PARALLEL_FOR
    for (int co = 0; co < out_channels; ++co) {
        T acc{};
        for (T g : grad_y.channel(co)) acc += g;
        grad_bias[co] += acc;
    }

    Tensor<T> grad_x(x.shape());
    const MatrixRef<T> w_t{weight.data(), 1, kdim};
    if (kernel == 1) {
        gemm(out_channels, cin, static_cast<int>(plane), row_major(grad_y.data(), plane),
             MatrixRef<T>{x.data(), 1, plane}, grad_weight.data(), kdim, true);
        gemm(cin, static_cast<int>(plane), out_channels, w_t, row_major(grad_y.data(), plane),
             grad_x.data(), plane, false);
        return grad_x;
    }

    const int band = band_rows(cin, kernel, x.height(), width);
    std::vector<T> col(static_cast<std::size_t>(kdim) * band * width);
    std::vector<T> dcol(col.size());
    for (int y0 = 0; y0 < x.height(); y0 += band) {
        const int rows = std::min(band, x.height() - y0);
        const int npix = rows * width;
        const T* gy = grad_y.data() + static_cast<std::ptrdiff_t>(y0) * width;
        im2col(x, kernel, y0, rows, col.data());
        gemm(out_channels, kdim, npix, MatrixRef<T>{gy, plane, 1}, MatrixRef<T>{col.data(), 1, npix},
             grad_weight.data(), kdim, true);
        gemm(kdim, npix, out_channels, w_t, MatrixRef<T>{gy, plane, 1}, dcol.data(), npix, false);
        col2im_add(dcol.data(), kernel, y0, rows, grad_x);
    }
    return grad_x;
}

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, std::span<const T> weight,
                                   std::span<const T> bias, int out_channels, int kernel,
                                   int stride, int pad) {
    const int cin = x.channels();
    if (weight.size() != static_cast<std::size_t>(cin) * out_channels * kernel * kernel ||
        bias.size() != static_cast<std::size_t>(out_channels))
        throw ShapeError("conv_transpose2d: parameter size mismatch");
    const int oh = (x.height() - 1) * stride - 2 * pad + kernel;
    const int ow = (x.width() - 1) * stride - 2 * pad + kernel;
    Tensor<T> y(out_channels, oh, ow);
    const std::size_t kk = static_cast<std::size_t>(kernel) * kernel;
    SCNET_PARALLEL_FOR
    for (int co = 0; co < out_channels; ++co) {
        auto out = y.channel(co);
        std::fill(out.begin(), out.end(), bias[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const T* w = weight.data() + (static_cast<std::size_t>(ci) * out_channels + co) * kk;
            for (int iy = 0; iy < x.height(); ++iy) {
                for (int ix = 0; ix < x.width(); ++ix) {
                    const T v = x(ci, iy, ix);
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int oy = iy * stride - pad + ky;
                        if (oy < 0 || oy >= oh) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ox = ix * stride - pad + kx;
                            if (ox < 0 || ox >= ow) continue;
                            out[static_cast<std::size_t>(oy) * ow + ox] += v * w[ky * kernel + kx];
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> conv_transpose2d_backward(const Tensor<T>& x, std::span<const T> weight,
                                    const Tensor<T>& grad_y, int kernel, int stride, int pad,
                                    std::span<T> grad_weight, std::span<T> grad_bias) {
    const int cin = x.channels();
    const int cout = grad_y.channels();
    const int oh = grad_y.height();
    const int ow = grad_y.width();
    if (oh != (x.height() - 1) * stride - 2 * pad + kernel ||
        ow != (x.width() - 1) * stride - 2 * pad + kernel)
        throw ShapeError("conv_transpose2d_backward: gradient shape " + to_string(grad_y.shape()) +
                         " inconsistent with input " + to_string(x.shape()));
    if (grad_weight.size() != weight.size() || grad_bias.size() != static_cast<std::size_t>(cout))
        throw ShapeError("conv_transpose2d_backward: gradient buffer size mismatch");
    const std::size_t kk = static_cast<std::size_t>(kernel) * kernel;

    for (int co = 0; co < cout; ++co) {
        T acc{};
        for (T g : grad_y.channel(co)) acc += g;
        grad_bias[co] += acc;
    }

    Tensor<T> grad_x(x.shape());
    SCNET_PARALLEL_FOR
    for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
            const T* w = weight.data() + (static_cast<std::size_t>(ci) * cout + co) * kk;
            T* gw = grad_weight.data() + (static_cast<std::size_t>(ci) * cout + co) * kk;
            for (int iy = 0; iy < x.height(); ++iy) {
                for (int ix = 0; ix < x.width(); ++ix) {
                    const T v = x(ci, iy, ix);
                    T g{};
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int oy = iy * stride - pad + ky;
                        if (oy < 0 || oy >= oh) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ox = ix * stride - pad + kx;
                            if (ox < 0 || ox >= ow) continue;
                            const T gyv = grad_y(co, oy, ox);
                            g += gyv * w[ky * kernel + kx];
                            gw[ky * kernel + kx] += gyv * v;
                        }
                    }
                    grad_x(ci, iy, ix) += g;
                }
            }
        }
    }
    return grad_x;
}

#define SCNET_INSTANTIATE_CONV(T)                                                                  \
    template Tensor<T> conv2d_forward(const Tensor<T>&, std::span<const T>, std::span<const T>,    \
                                      int, int);                                                   \
    template Tensor<T> conv2d_backward(const Tensor<T>&, std::span<const T>, const Tensor<T>&, int, \
                                       std::span<T>, std::span<T>);                                \
    template Tensor<T> conv_transpose2d_forward(const Tensor<T>&, std::span<const T>,              \
                                                std::span<const T>, int, int, int, int);           \
    template Tensor<T> conv_transpose2d_backward(const Tensor<T>&, std::span<const T>,             \
                                                 const Tensor<T>&, int, int, int, std::span<T>,    \
                                                 std::span<T>);

SCNET_INSTANTIATE_CONV(float)
SCNET_INSTANTIATE_CONV(double)

}  // namespace scnet::kernels
