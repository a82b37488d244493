#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scnet/errors.hpp"

namespace scnet {

/// Channel-major (C, H, W) extent of a single feature map.
struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t plane() const noexcept {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    [[nodiscard]] std::size_t numel() const noexcept {
        return static_cast<std::size_t>(channels) * plane();
    }
    [[nodiscard]] bool spatially_equal(const Shape& o) const noexcept {
        return height == o.height && width == o.width;
    }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense C x H x W array. Value type; copies are deep.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{}) : shape_(checked(shape)), data_(shape.numel(), fill) {}
    Tensor(int c, int h, int w, T fill = T{}) : Tensor(Shape{c, h, w}, fill) {}

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] int channels() const noexcept { return shape_.channels; }
    [[nodiscard]] int height() const noexcept { return shape_.height; }
    [[nodiscard]] int width() const noexcept { return shape_.width; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::span<T> values() noexcept { return data_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }

    [[nodiscard]] std::span<T> channel(int c) noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * shape_.plane(), shape_.plane()};
    }
    [[nodiscard]] std::span<const T> channel(int c) const noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * shape_.plane(), shape_.plane()};
    }

    T& operator()(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    const T& operator()(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    static Shape checked(Shape s) {
        if (s.channels < 1 || s.height < 1 || s.width < 1)
            throw ShapeError("tensor extents must be positive, got " + to_string(s));
        return s;
    }
    [[nodiscard]] std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * shape_.height + static_cast<std::size_t>(y)) *
                   shape_.width +
               static_cast<std::size_t>(x);
    }

    Shape shape_{};
    std::vector<T> data_;
};

using FeatureMap = Tensor<float>;
/// Single-channel {0,1} map.
using Mask = Tensor<std::uint8_t>;

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (!(a == b))
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

/// Concatenates tensors of equal spatial size along the channel axis.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts);

/// Splits `t` into consecutive channel groups of the given sizes.
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& t, std::span<const int> sizes);

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
    Tensor<To> out(t.shape());
    auto src = t.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
    return out;
}

}  // namespace scnet
