#pragma once

// Data-parallel CPU kernels used by the network. Every kernel has a serial
// counterpart in reference.hpp with identical semantics; the test suite checks
// the two against each other and bench/ times them side by side.
//
// Conventions: feature maps are C x H x W, convolution weights are
// [out][in][k][k], transposed-convolution weights are [in][out][k][k].

#include <cstdint>
#include <span>

#include "scnet/tensor.hpp"

namespace scnet::kernels {

/// Read-only strided matrix view: element (r, c) is data[r * row_stride + c * col_stride].
template <typename T>
struct MatrixRef {
    const T* data;
    std::ptrdiff_t row_stride;
    std::ptrdiff_t col_stride;

    [[nodiscard]] T at(std::ptrdiff_t r, std::ptrdiff_t c) const noexcept {
        return data[r * row_stride + c * col_stride];
    }
    [[nodiscard]] MatrixRef transposed() const noexcept { return {data, col_stride, row_stride}; }
};

template <typename T>
MatrixRef<T> row_major(const T* data, std::ptrdiff_t ld) {
    return {data, ld, 1};
}

/// C (m x n, leading dimension ldc) = A (m x k) * B (k x n), or += when accumulate.
template <typename T>
void gemm(int m, int n, int k, MatrixRef<T> a, MatrixRef<T> b, T* c, std::ptrdiff_t ldc,
          bool accumulate);

/// Same-size convolution, stride 1, zero padding (kernel-1)/2; kernel must be odd.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias,
                         int out_channels, int kernel);

/// Returns dL/dx and accumulates into grad_weight / grad_bias.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& grad_y,
                          int kernel, std::span<T> grad_weight, std::span<T> grad_bias);

template <typename T>
struct PoolResult {
    Tensor<T> output;
    /// Flat (y * W + x) position of the maximum within the input plane.
    Tensor<std::int32_t> indices;
};

/// 2x2 stride-2 max pooling. Ties resolve to the first position in row-major order.
template <typename T>
PoolResult<T> max_pool2x2(const Tensor<T>& x);

template <typename T>
Tensor<T> max_pool2x2_backward(const Tensor<T>& grad_y, const Tensor<std::int32_t>& indices,
                               const Shape& input_shape);

/// Places each value at its recorded argmax position; every other output is zero.
template <typename T>
Tensor<T> max_unpool2x2(const Tensor<T>& x, const Tensor<std::int32_t>& indices,
                        const Shape& output_shape);

template <typename T>
Tensor<T> max_unpool2x2_backward(const Tensor<T>& grad_y, const Tensor<std::int32_t>& indices);

/// Bilinear resampling with half-pixel centers (align_corners = false).
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_y, const Shape& input_shape);

template <typename T>
struct InstanceNormResult {
    Tensor<T> output;
    Tensor<T> normalized;
    std::vector<T> inv_std;
};

template <typename T>
InstanceNormResult<T> instance_norm_forward(const Tensor<T>& x, std::span<const T> gamma,
                                            std::span<const T> beta, T eps);

template <typename T>
Tensor<T> instance_norm_backward(const Tensor<T>& grad_y, const Tensor<T>& normalized,
                                 std::span<const T> inv_std, std::span<const T> gamma,
                                 std::span<T> grad_gamma, std::span<T> grad_beta);

/// Output size is (in - 1) * stride - 2 * pad + kernel.
template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, std::span<const T> weight,
                                   std::span<const T> bias, int out_channels, int kernel,
                                   int stride, int pad);

template <typename T>
Tensor<T> conv_transpose2d_backward(const Tensor<T>& x, std::span<const T> weight,
                                    const Tensor<T>& grad_y, int kernel, int stride, int pad,
                                    std::span<T> grad_weight, std::span<T> grad_bias);

template <typename T>
void relu_inplace(Tensor<T>& x);

/// grad *= (activation > 0)
template <typename T>
void relu_backward_inplace(Tensor<T>& grad, const Tensor<T>& activation);

template <typename T>
T sigmoid(T v) noexcept;

}  // namespace scnet::kernels
