#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "scnet/errors.hpp"

namespace scnet::detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& section,
                                std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(section + ": expected an object");
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known) found = found || item.key() == k;
        if (!found) throw ConfigError(section + ": unknown key '" + item.key() + "'");
    }
}

/// Reads j[key] into `out` when present; type errors become ConfigError.
template <typename V>
void read_if(const nlohmann::json& j, const char* key, V& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("'") + key + "': " + e.what());
    }
}

}  // namespace scnet::detail
