#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scnet {

struct ParamInfo {
    std::string name;
    std::vector<int> shape;
    [[nodiscard]] std::size_t numel() const;
};

/// Ordered collection of named parameter arrays. Layers refer to entries by
/// index; a gradient buffer is a second ParameterSet with the same layout.
template <typename T>
class ParameterSet {
public:
    std::size_t add(std::string name, std::vector<int> shape, T fill = T{});

    [[nodiscard]] std::size_t size() const noexcept { return infos_.size(); }
    [[nodiscard]] std::size_t total_count() const noexcept;
    [[nodiscard]] const ParamInfo& info(std::size_t i) const { return infos_.at(i); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const;

    [[nodiscard]] std::span<T> values(std::size_t i) { return data_.at(i); }
    [[nodiscard]] std::span<const T> values(std::size_t i) const { return data_.at(i); }

    /// Same names and shapes, all values zero.
    [[nodiscard]] ParameterSet zeros_like() const;
    void set_zero();
    [[nodiscard]] bool same_layout(const ParameterSet& other) const;

    /// All values concatenated in registration order.
    [[nodiscard]] std::vector<T> flatten() const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<ParamInfo> infos_;
    std::vector<std::vector<T>> data_;
};

inline bool operator==(const ParamInfo& a, const ParamInfo& b) {
    return a.name == b.name && a.shape == b.shape;
}

}  // namespace scnet
