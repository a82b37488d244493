#pragma once

// Building blocks of the network. Layers own no data: they hold indices into
// a ParameterSet, so one parameter store can be shared by concurrent forward
// passes and a gradient store with the same layout collects backward results.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scnet/params.hpp"
#include "scnet/tensor.hpp"

namespace scnet {

template <typename T>
struct Conv2d {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;

    static Conv2d create(ParameterSet<T>& params, const std::string& name, int in, int out,
                         int kernel);
    [[nodiscard]] Tensor<T> forward(const ParameterSet<T>& p, const Tensor<T>& x) const;
    Tensor<T> backward(const ParameterSet<T>& p, ParameterSet<T>& g, const Tensor<T>& x,
                       const Tensor<T>& grad_y) const;
};

/// Learned upsampling by an integer factor: kernel 2f, stride f, padding f/2
/// (a 1x1 kernel when f = 1), so the output is exactly f times the input.
template <typename T>
struct ConvTranspose2d {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int channels = 1;
    int factor = 1;

    static ConvTranspose2d create(ParameterSet<T>& params, const std::string& name, int channels,
                                  int factor);
    [[nodiscard]] int kernel() const { return factor == 1 ? 1 : 2 * factor; }
    [[nodiscard]] int pad() const { return factor == 1 ? 0 : factor / 2; }
    [[nodiscard]] Tensor<T> forward(const ParameterSet<T>& p, const Tensor<T>& x) const;
    Tensor<T> backward(const ParameterSet<T>& p, ParameterSet<T>& g, const Tensor<T>& x,
                       const Tensor<T>& grad_y) const;
};

template <typename T>
struct UnitTrace {
    Tensor<T> input;
    Tensor<T> normalized;
    std::vector<T> inv_std;
    Tensor<T> output;
};

/// 3x3 convolution, optional instance normalization, ReLU.
template <typename T>
struct ConvUnit {
    Conv2d<T> conv;
    std::optional<std::size_t> gamma;
    std::optional<std::size_t> beta;

    static ConvUnit create(ParameterSet<T>& params, const std::string& name, int in, int out,
                           bool instance_norm);
    Tensor<T> forward(const ParameterSet<T>& p, const Tensor<T>& x, UnitTrace<T>* trace) const;
    Tensor<T> backward(const ParameterSet<T>& p, ParameterSet<T>& g, const UnitTrace<T>& trace,
                       Tensor<T> grad_y) const;
};

template <typename T>
struct AttentionTrace {
    Tensor<T> input;
    /// 1 x H x W soft mask, or 1 x 1 x 1 in the scalar variant.
    Tensor<T> mask;
    Tensor<T> gated;
};

template <typename T>
struct AttentionOutput {
    /// Single-channel soft mask in (0, 1).
    Tensor<T> mask;
    /// F_a: the input scaled by the mask, same channel count as the input.
    Tensor<T> gated;
    /// F_r: refined C'-channel map.
    Tensor<T> refined;
};

/// Scale-space attention without pooling:
///   mask = sigmoid(Conv1x1_{C->1}(F)), F_a = mask * F, F_r = Conv1x1_{C->C'}(F_a).
/// In the scalar variant the mask is sigmoid(s) for one trainable scalar s.
template <typename T>
struct Attention {
    std::optional<Conv2d<T>> mask_conv;
    std::optional<std::size_t> scalar;
    Conv2d<T> refine;
    int channels = 0;

    static Attention create(ParameterSet<T>& params, const std::string& name, int channels,
                            int out_channels, bool scalar_variant);
    AttentionOutput<T> forward(const ParameterSet<T>& p, const Tensor<T>& x,
                               AttentionTrace<T>* trace) const;
    /// grad_gated flows from the trunk, grad_refined from the side path.
    Tensor<T> backward(const ParameterSet<T>& p, ParameterSet<T>& g, const AttentionTrace<T>& trace,
                       Tensor<T> grad_gated, const Tensor<T>& grad_refined) const;
};

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& v);

}  // namespace scnet
