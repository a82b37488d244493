#pragma once

#include <cstdint>
#include <string>

#include "scnet/model.hpp"

namespace scnet {

/// Weight initialization schemes:
///   "glorot"             Glorot-uniform convolution weights, zero biases, unit
///                        norm scales, bilinear kernels in the learned upsamplers.
///   "pretrained-encoder" as "glorot", then every encoder.* array is copied
///                        from the checkpoint at `source` (shapes must match).
/// Throws ConfigError for an unknown scheme.
template <typename T>
void init_weights(BasicModel<T>& model, const std::string& scheme, std::uint64_t seed,
                  const std::string& source = {});

/// Uniform bound sqrt(6 / (fan_in + fan_out)) for a conv weight [out][in][k][k].
double glorot_bound(int in_channels, int out_channels, int kernel);

/// Bilinear interpolation kernel of size k x k (k = 2f for factor f).
double bilinear_kernel_value(int kernel, int y, int x);

}  // namespace scnet
