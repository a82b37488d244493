#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scnet/metrics.hpp"
#include "scnet/run_config.hpp"

namespace scnet {

/// A named set of toggles applied on top of a base run configuration.
struct AblationVariant {
    std::string name;
    bool attention_encoder = true;
    bool attention_decoder = true;
    bool focal = true;
    bool soft_iou = true;
    bool edge_channel = true;
    bool scalar_weights = false;
    int num_scales = 5;
    /// Overrides the combo implied by `focal` / `soft_iou` when set.
    std::optional<LossCombo> loss_combo;
    /// Cross-entropy combos weigh classes by median frequency of the training masks.
    bool median_frequency = true;
    std::string init_scheme = "glorot";
    std::string init_source;

    /// focal+soft_iou -> FocalSoftIou, focal -> FocalOnly, soft_iou ->
    /// CrossEntropySoftIou, neither -> CrossEntropyOnly.
    [[nodiscard]] LossCombo combo() const;
    /// Keeps the first num_scales blocks of `base` (channel widths included).
    [[nodiscard]] ModelConfig model_config(const ModelConfig& base) const;
    [[nodiscard]] LossConfig loss_config(const LossConfig& base) const;
    /// Throws ConfigError when the toggles do not give a valid configuration.
    void validate(const ModelConfig& base) const;
};

void to_json(nlohmann::json& j, const AblationVariant& v);
void from_json(const nlohmann::json& j, AblationVariant& v);

/// The architecture columns: Baseline, Baseline+Attn, +Focal Loss, +Soft_IoU,
/// Baseline+ScalarWeights, +Edges-1 level and the full model.
std::vector<AblationVariant> architecture_variants();
/// The loss-combination rows on the full architecture.
std::vector<AblationVariant> loss_variants();

struct AblationRow {
    std::string variant;
    std::size_t parameters = 0;
    MetricReport report;
};

/// Trains and evaluates every variant from the same seed and data.
std::vector<AblationRow> ablation_run(const std::vector<AblationVariant>& variants, const RunConfig& base,
                                      const std::vector<Sample>& train_set, const std::vector<Sample>& test_set,
                                      const std::function<void(const std::string&)>& log = {});

/// One row per variant: variant,f1,iou,region_f1,auprc,parameters,parameters_m.
inline constexpr const char* kAblationCsvHeader = "variant,f1,iou,region_f1,auprc,parameters,parameters_m";
std::string ablation_csv(const std::vector<AblationRow>& rows);
/// Wide layout: one row for `dataset`, an F1 and a Params(M) column per variant.
std::string ablation_table_csv(const std::string& dataset, const std::vector<AblationRow>& rows);

}  // namespace scnet
