#pragma once

#include <filesystem>

#include <json.hpp>

#include "scnet/model.hpp"

namespace scnet {

inline constexpr const char* kCheckpointMagic = "scnet-ckpt-v1";

struct Checkpoint {
    Model model;
    /// Free-form run metadata, e.g. {"threshold": 0.42, "iterations": 2000}.
    nlohmann::json metadata = nlohmann::json::object();
};

/// Layout: magic line, length-prefixed ModelConfig JSON, length-prefixed
/// metadata JSON, then every parameter array as (name, dims, float32 data),
/// all integers little-endian. Contains nothing time-dependent, so equal
/// models produce byte-identical files.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Throws DataError on a missing file, bad magic, truncated data, or arrays
/// that do not match the stored configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scnet
