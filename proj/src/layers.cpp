#include "scnet/layers.hpp"

#include "scnet/kernels/kernels.hpp"

namespace scnet {

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& v) {
    require_same_shape(acc.shape(), v.shape(), "add");
    auto a = acc.values();
    auto b = v.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename T>
Conv2d<T> Conv2d<T>::create(ParameterSet<T>& params, const std::string& name, int in, int out,
                            int kernel) {
    Conv2d c;
    c.in_channels = in;
    c.out_channels = out;
    c.kernel = kernel;
    c.weight = params.add(name + ".weight", {out, in, kernel, kernel});
    c.bias = params.add(name + ".bias", {out});
    return c;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const ParameterSet<T>& p, const Tensor<T>& x) const {
    if (x.channels() != in_channels)
        throw ShapeError("conv: expected " + std::to_string(in_channels) + " input channels, got " +
                         to_string(x.shape()));
    return kernels::conv2d_forward<T>(x, p.values(weight), p.values(bias), out_channels, kernel);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const ParameterSet<T>& p, ParameterSet<T>& g, const Tensor<T>& x,
                              const Tensor<T>& grad_y) const {
    return kernels::conv2d_backward<T>(x, p.values(weight), grad_y, kernel, g.values(weight),
                                       g.values(bias));
}

template <typename T>
ConvTranspose2d<T> ConvTranspose2d<T>::create(ParameterSet<T>& params, const std::string& name,
                                              int channels, int factor) {
    ConvTranspose2d d;
    d.channels = channels;
    d.factor = factor;
    d.weight = params.add(name + ".weight", {channels, channels, d.kernel(), d.kernel()});
    d.bias = params.add(name + ".bias", {channels});
    return d;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const ParameterSet<T>& p, const Tensor<T>& x) const {
    return kernels::conv_transpose2d_forward<T>(x, p.values(weight), p.values(bias), channels,
                                                kernel(), factor, pad());
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const ParameterSet<T>& p, ParameterSet<T>& g,
                                       const Tensor<T>& x, const Tensor<T>& grad_y) const {
    return kernels::conv_transpose2d_backward<T>(x, p.values(weight), grad_y, kernel(), factor,
                                                 pad(), g.values(weight), g.values(bias));
}

template <typename T>
ConvUnit<T> ConvUnit<T>::create(ParameterSet<T>& params, const std::string& name, int in, int out,
                                bool instance_norm) {
    ConvUnit u;
    u.conv = Conv2d<T>::create(params, name + ".conv", in, out, 3);
    if (instance_norm) {
        u.gamma = params.add(name + ".norm.gamma", {out}, T{1});
        u.beta = params.add(name + ".norm.beta", {out});
    }
    return u;
}

template <typename T>
Tensor<T> ConvUnit<T>::forward(const ParameterSet<T>& p, const Tensor<T>& x,
                               UnitTrace<T>* trace) const {
    Tensor<T> y = conv.forward(p, x);
    if (gamma) {
        auto norm = kernels::instance_norm_forward<T>(y, p.values(*gamma), p.values(*beta), T(1e-5));
        y = std::move(norm.output);
        if (trace) {
            trace->normalized = std::move(norm.normalized);
            trace->inv_std = std::move(norm.inv_std);
        }
    }
    kernels::relu_inplace(y);
    if (trace) {
        trace->input = x;
        trace->output = y;
    }
    return y;
}

template <typename T>
Tensor<T> ConvUnit<T>::backward(const ParameterSet<T>& p, ParameterSet<T>& g,
                                const UnitTrace<T>& trace, Tensor<T> grad_y) const {
    kernels::relu_backward_inplace(grad_y, trace.output);
    if (gamma) {
        grad_y = kernels::instance_norm_backward<T>(grad_y, trace.normalized, trace.inv_std,
                                                    p.values(*gamma), g.values(*gamma),
                                                    g.values(*beta));
    }
    return conv.backward(p, g, trace.input, grad_y);
}

template <typename T>
Attention<T> Attention<T>::create(ParameterSet<T>& params, const std::string& name, int channels,
                                  int out_channels, bool scalar_variant) {
    Attention a;
    a.channels = channels;
    if (scalar_variant)
        a.scalar = params.add(name + ".scalar", {1});
    else
        a.mask_conv = Conv2d<T>::create(params, name + ".mask", channels, 1, 1);
    a.refine = Conv2d<T>::create(params, name + ".refine", channels, out_channels, 1);
    return a;
}

template <typename T>
AttentionOutput<T> Attention<T>::forward(const ParameterSet<T>& p, const Tensor<T>& x,
                                         AttentionTrace<T>* trace) const {
    if (x.channels() != channels)
        throw ShapeError("attention: expected " + std::to_string(channels) + " channels, got " +
                         to_string(x.shape()));
    AttentionOutput<T> out;
    Tensor<T> gated(x.shape());
    if (scalar) {
        const T m = kernels::sigmoid(p.values(*scalar)[0]);
        out.mask = Tensor<T>(1, x.height(), x.width(), m);
        auto src = x.values();
        auto dst = gated.values();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = m * src[i];
        if (trace) trace->mask = Tensor<T>(1, 1, 1, m);
    } else {
        out.mask = mask_conv->forward(p, x);
        for (T& v : out.mask.values()) v = kernels::sigmoid(v);
        const auto mask = out.mask.channel(0);
        for (int c = 0; c < x.channels(); ++c) {
            auto src = x.channel(c);
            auto dst = gated.channel(c);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = mask[i] * src[i];
        }
        if (trace) trace->mask = out.mask;
    }
    out.refined = refine.forward(p, gated);
    if (trace) {
        trace->input = x;
        trace->gated = gated;
    }
    out.gated = std::move(gated);
    return out;
}

template <typename T>
Tensor<T> Attention<T>::backward(const ParameterSet<T>& p, ParameterSet<T>& g,
                                 const AttentionTrace<T>& trace, Tensor<T> grad_gated,
                                 const Tensor<T>& grad_refined) const {
    add_inplace(grad_gated, refine.backward(p, g, trace.gated, grad_refined));
    const Tensor<T>& x = trace.input;
    Tensor<T> grad_x(x.shape());
    if (scalar) {
        const T m = trace.mask(0, 0, 0);
        double dm = 0.0;
        auto gg = grad_gated.values();
        auto xs = x.values();
        auto gx = grad_x.values();
        for (std::size_t i = 0; i < gg.size(); ++i) {
            dm += static_cast<double>(gg[i]) * xs[i];
            gx[i] = m * gg[i];
        }
        g.values(*scalar)[0] += static_cast<T>(dm * m * (1 - m));
        return grad_x;
    }
    const auto mask = trace.mask.channel(0);
    Tensor<T> grad_logit(1, x.height(), x.width());
    auto gl = grad_logit.channel(0);
    for (int c = 0; c < x.channels(); ++c) {
        auto gg = grad_gated.channel(c);
        auto xs = x.channel(c);
        auto gx = grad_x.channel(c);
        for (std::size_t i = 0; i < gg.size(); ++i) {
            gl[i] += gg[i] * xs[i];
            gx[i] = mask[i] * gg[i];
        }
    }
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] *= mask[i] * (1 - mask[i]);
    add_inplace(grad_x, mask_conv->backward(p, g, x, grad_logit));
    return grad_x;
}

template void add_inplace(Tensor<float>&, const Tensor<float>&);
template void add_inplace(Tensor<double>&, const Tensor<double>&);
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct ConvTranspose2d<float>;
template struct ConvTranspose2d<double>;
template struct ConvUnit<float>;
template struct ConvUnit<double>;
template struct Attention<float>;
template struct Attention<double>;

}  // namespace scnet
