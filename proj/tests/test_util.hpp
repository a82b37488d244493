#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "scnet/tensor.hpp"

namespace testutil {

template <typename T>
scnet::Tensor<T> random_tensor(scnet::Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    scnet::Tensor<T> t(s);
    for (T& v : t.values()) v = static_cast<T>(d(rng));
    return t;
}

template <typename T>
std::vector<T> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<T> v(n);
    for (T& x : v) x = static_cast<T>(d(rng));
    return v;
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

template <typename T>
double max_abs_diff(const scnet::Tensor<T>& a, const scnet::Tensor<T>& b) {
    return max_abs_diff(a.values(), b.values());
}

template <typename T>
double dot(const scnet::Tensor<T>& a, const scnet::Tensor<T>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.values()[i]) * b.values()[i];
    return s;
}

/// Central difference of f with respect to x[i].
inline double central_difference(const std::function<double()>& f, double& xi, double h) {
    const double saved = xi;
    xi = saved + h;
    const double up = f();
    xi = saved - h;
    const double down = f();
    xi = saved;
    return (up - down) / (2 * h);
}

/// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testutil
