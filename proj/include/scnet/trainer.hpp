#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scnet/datapipe.hpp"
#include "scnet/losses.hpp"
#include "scnet/metrics.hpp"
#include "scnet/model.hpp"
#include "scnet/prior.hpp"
#include "scnet/run_config.hpp"

namespace scnet {

struct HistoryRow {
    int iteration = 0;
    int epoch = 0;
    /// Batch means of the objective and its two parts.
    double total = 0.0;
    double pixel = 0.0;
    double region = 0.0;
};

inline constexpr const char* kHistoryCsvHeader = "iter,loss_total,loss_focal,loss_iou";
std::string history_csv(const std::vector<HistoryRow>& rows);

struct TrainOptions {
    TrainConfig train;
    LossConfig loss;
    AugmentConfig augment;
    PriorConfig prior;
    /// Periodic checkpoints go here when non-empty.
    std::filesystem::path checkpoint_dir;
    /// Copied into every checkpoint written during training.
    nlohmann::json metadata = nlohmann::json::object();
    std::function<void(const HistoryRow&)> on_iteration;
    std::function<void(const std::string&)> log;
};

struct TrainResult {
    std::vector<HistoryRow> history;
    int iterations = 0;
    int epochs = 0;
    bool stopped_early = false;
    /// Best validation F1, or -1 without validation data.
    double best_validation_f1 = -1.0;
};

/// Mini-batch SGD on the combined objective. Each batch averages the
/// per-sample losses; samples are augmented (when enabled), then given edge
/// maps computed on the augmented image. With validation samples and
/// eval_every > 0 the run stops after `patience` evaluations without a better
/// F1 and the best parameters are restored. Throws DivergenceError when the
/// loss becomes non-finite.
TrainResult train_model(Model& model, const std::vector<Sample>& train_set, const std::vector<Sample>& validation,
                        const TrainOptions& options);

/// Network input for one sample; the edge channel comes from the sample's
/// stored map or, when absent, from `detector`.
FeatureMap prepare_input(const Sample& sample, int channels, EdgeDetector& detector);

/// P^fused for every sample (padded to the size multiple and cropped back).
std::vector<EvalImage> predict_samples(const Model& model, const std::vector<Sample>& samples,
                                       EdgeDetector& detector);

/// Iterative thresholding over the pooled fused probabilities, full report.
MetricReport evaluate_model(const Model& model, const std::vector<Sample>& samples, const PriorConfig& prior,
                            const RegionRules& rules = {});

/// Loads the checkpoint, then evaluate_model. Throws ConfigError when a
/// 4-channel model meets a prior that cannot supply edges.
MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::vector<Sample>& samples,
                                 const PriorConfig& prior);

/// F1 of model i on test set j. Each cell uses its own iterative threshold.
std::vector<std::vector<double>> cross_evaluate(const std::vector<const Model*>& models,
                                                const std::vector<std::vector<Sample>>& test_sets,
                                                const PriorConfig& prior);

/// Header "trained_on,<name>..." then one row per model.
std::string cross_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& f1);

}  // namespace scnet
