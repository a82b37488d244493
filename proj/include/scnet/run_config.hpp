#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scnet/datapipe.hpp"
#include "scnet/losses.hpp"
#include "scnet/model_config.hpp"
#include "scnet/optimizer.hpp"
#include "scnet/prior.hpp"

namespace scnet {

struct TrainConfig {
    SgdConfig sgd;
    int batch_size = 4;
    int epochs = 100;
    /// Stops after this many updates; 0 means no cap.
    int max_iterations = 0;
    std::uint64_t seed = 0;
    /// Write a checkpoint every this many epochs; 0 writes only the final one.
    int checkpoint_every = 0;
    /// Fixed data order and accumulation order; required for bitwise reruns.
    bool deterministic = true;
    /// Validation F1 is measured every this many epochs (0 disables early stopping).
    int eval_every = 1;
    /// Evaluations without improvement before stopping.
    int patience = 10;
    std::string device = "cpu";
    /// Weight initialization scheme and, for "pretrained-encoder", its checkpoint.
    std::string init = "glorot";
    std::string init_source;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct DataConfig {
    /// Either a manifest file or a dataset root scanned with `layout`.
    std::string manifest;
    std::string root;
    ManifestLayout layout;
    /// Separate test manifest; when empty the test split is held out.
    std::string test_manifest;
    double holdout = 0.2;
    /// Fraction of the training split kept aside for early stopping and for
    /// choosing the stored threshold (floor rule; 0 disables).
    double validation = 0.1;
    AugmentConfig augment;

    void validate() const;
};

void to_json(nlohmann::json& j, const DataConfig& c);
void from_json(const nlohmann::json& j, DataConfig& c);

/// Everything one run needs; the JSON file has exactly these five sections.
struct RunConfig {
    ModelConfig model = ModelConfig::full();
    LossConfig loss;
    TrainConfig train;
    DataConfig data;
    PriorConfig prior;

    /// Throws ConfigError on the first violated constraint.
    void validate() const;
};

/// The "model" section may start from a preset: {"preset": "full" | "four_level"
/// | "baseline" | "desk", "desk_width": 8, ...}; remaining keys override it.
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies "section.key=value" (dotted path) edits to a config document.
/// Values are parsed as JSON when possible, otherwise taken as strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads and validates a run config file, applies overrides, then lets
/// SCNET_SEED (when set) replace train.seed. Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// The seed after the SCNET_SEED environment override.
std::uint64_t effective_seed(std::uint64_t configured);

}  // namespace scnet
