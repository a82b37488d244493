#pragma once

// Straightforward serial versions of the kernels in kernels.hpp. Kept as the
// correctness baseline for tests and as the "before" side of the benchmarks.

#include <cstdint>
#include <span>

#include "scnet/kernels/kernels.hpp"

namespace scnet::reference {

template <typename T>
void gemm(int m, int n, int k, kernels::MatrixRef<T> a, kernels::MatrixRef<T> b, T* c,
          std::ptrdiff_t ldc, bool accumulate);

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias,
                         int out_channels, int kernel);

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& grad_y,
                          int kernel, std::span<T> grad_weight, std::span<T> grad_bias);

template <typename T>
kernels::PoolResult<T> max_pool2x2(const Tensor<T>& x);

template <typename T>
Tensor<T> max_unpool2x2(const Tensor<T>& x, const Tensor<std::int32_t>& indices,
                        const Shape& output_shape);

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_y, const Shape& input_shape);

template <typename T>
kernels::InstanceNormResult<T> instance_norm_forward(const Tensor<T>& x,
                                                     std::span<const T> gamma,
                                                     std::span<const T> beta, T eps);

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& x, std::span<const T> weight,
                                   std::span<const T> bias, int out_channels, int kernel,
                                   int stride, int pad);

}  // namespace scnet::reference
