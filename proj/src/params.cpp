#include "scnet/params.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "scnet/errors.hpp"

namespace scnet {

std::size_t ParamInfo::numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

template <typename T>
std::size_t ParameterSet<T>::add(std::string name, std::vector<int> shape, T fill) {
    if (find(name)) throw Error("duplicate parameter name: " + name);
    ParamInfo info{std::move(name), std::move(shape)};
    data_.emplace_back(info.numel(), fill);
    infos_.push_back(std::move(info));
    return infos_.size() - 1;
}

template <typename T>
std::size_t ParameterSet<T>::total_count() const noexcept {
    std::size_t n = 0;
    for (const auto& d : data_) n += d.size();
    return n;
}

template <typename T>
std::optional<std::size_t> ParameterSet<T>::find(const std::string& name) const {
    for (std::size_t i = 0; i < infos_.size(); ++i)
        if (infos_[i].name == name) return i;
    return std::nullopt;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::zeros_like() const {
    ParameterSet out;
    out.infos_ = infos_;
    out.data_.reserve(data_.size());
    for (const auto& d : data_) out.data_.emplace_back(d.size(), T{});
    return out;
}

template <typename T>
void ParameterSet<T>::set_zero() {
    for (auto& d : data_) std::fill(d.begin(), d.end(), T{});
}

template <typename T>
bool ParameterSet<T>::same_layout(const ParameterSet& other) const {
    return infos_ == other.infos_;
}

template <typename T>
std::vector<T> ParameterSet<T>::flatten() const {
    std::vector<T> out;
    out.reserve(total_count());
    for (const auto& d : data_) out.insert(out.end(), d.begin(), d.end());
    return out;
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace scnet
