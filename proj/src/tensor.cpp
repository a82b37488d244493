#include "scnet/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace scnet {

std::string to_string(const Shape& s) {
    return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
           std::to_string(s.width);
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no inputs");
    const Shape first = parts.front()->shape();
    int channels = 0;
    for (const auto* p : parts) {
        if (!p->shape().spatially_equal(first))
            throw ShapeError("concat_channels: spatial mismatch " + to_string(first) + " vs " +
                             to_string(p->shape()));
        channels += p->channels();
    }
    Tensor<T> out(channels, first.height, first.width);
    auto dst = out.values().begin();
    for (const auto* p : parts) dst = std::copy(p->values().begin(), p->values().end(), dst);
    return out;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& t, std::span<const int> sizes) {
    if (std::accumulate(sizes.begin(), sizes.end(), 0) != t.channels())
        throw ShapeError("split_channels: sizes do not sum to " + std::to_string(t.channels()));
    std::vector<Tensor<T>> out;
    out.reserve(sizes.size());
    auto src = t.values().begin();
    for (int c : sizes) {
        Tensor<T> part(c, t.height(), t.width());
        std::copy_n(src, part.size(), part.values().begin());
        src += static_cast<std::ptrdiff_t>(part.size());
        out.push_back(std::move(part));
    }
    return out;
}

template Tensor<float> concat_channels(std::span<const Tensor<float>* const>);
template Tensor<double> concat_channels(std::span<const Tensor<double>* const>);
template std::vector<Tensor<float>> split_channels(const Tensor<float>&, std::span<const int>);
template std::vector<Tensor<double>> split_channels(const Tensor<double>&, std::span<const int>);

}  // namespace scnet
