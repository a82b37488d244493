#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scnet/model.hpp"

namespace scnet {

enum class LossCombo { FocalSoftIou, CrossEntropyOnly, CrossEntropySoftIou, FocalLovasz, FocalOnly };

/// Names used in config files: "focal+softiou", "ce_only", "ce+softiou",
/// "focal+lovasz", "focal_only".
std::string to_string(LossCombo c);
LossCombo parse_loss_combo(const std::string& name);

struct ClassWeights {
    double foreground = 1.0;
    double background = 1.0;
};

/// Median-frequency balancing for two classes: each weight is the median of
/// the two class frequencies divided by that class's frequency.
ClassWeights median_frequency_weights(double foreground_frequency, double background_frequency);

struct LossConfig {
    double alpha = 1.0;
    double gamma = 2.0;
    /// Deep-supervision weight per side output, shallowest stage output first
    /// (index i weighs the i-th side map of ForwardOutput).
    std::vector<double> scale_weights{0.5, 0.75, 1.0, 0.75, 0.5};
    /// Weight of the region term (Soft-IoU or Lovasz) relative to the pixel term.
    double soft_iou_weight = 1.0;
    LossCombo combo = LossCombo::FocalSoftIou;
    /// Divide pixel terms by the pixel count instead of summing.
    bool mean_reduction = false;
    /// Used by the cross-entropy combos.
    ClassWeights class_weights{};

    void validate(int num_scales) const;
    friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

bool operator==(const ClassWeights& a, const ClassWeights& b);

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

// Per-map losses. Targets are {0,1}; `grad`, when non-empty, receives
// dLoss/dlogit (overwritten, not accumulated). All are pixel sums.

template <typename T>
double focal_loss(std::span<const T> logits, std::span<const std::uint8_t> target, double alpha,
                  double gamma, std::span<T> grad = {});

template <typename T>
double weighted_bce_loss(std::span<const T> logits, std::span<const std::uint8_t> target,
                         ClassWeights weights, std::span<T> grad = {});

template <typename T>
double bce_loss(std::span<const T> logits, std::span<const std::uint8_t> target, std::span<T> grad = {}) {
    return weighted_bce_loss(logits, target, ClassWeights{}, grad);
}

/// 1 - I / max(sum p + sum y - I, eps) on probabilities; grad is dLoss/dp.
double soft_iou_loss_from_probabilities(std::span<const double> prob,
                                        std::span<const std::uint8_t> target,
                                        std::span<double> grad = {});

/// Soft-IoU of sigmoid(logits); grad is dLoss/dlogit.
template <typename T>
double soft_iou_loss(std::span<const T> logits, std::span<const std::uint8_t> target,
                     std::span<T> grad = {});

/// Lovasz extension of the Jaccard loss applied to hinge errors 1 - logit * sign.
template <typename T>
double lovasz_hinge_loss(std::span<const T> logits, std::span<const std::uint8_t> target,
                         std::span<T> grad = {});

inline constexpr double kSoftIouEpsilon = 1e-7;

struct LossBreakdown {
    double total = 0.0;
    /// Deep-supervised pixel term (focal or cross-entropy).
    double pixel = 0.0;
    /// Region term (Soft-IoU or Lovasz) before weighting; 0 when unused.
    double region = 0.0;
};

/// Pixel term over the fused map plus the weighted side maps:
///   L(fused) + sum_i w_i L(side_i).
template <typename T>
double total_focal(const ForwardOutput<T>& out, const Mask& target, const LossConfig& config,
                   OutputGradients<T>* grads = nullptr);

/// Combined objective selected by config.combo. When `grads` is given it is
/// resized and filled with dLoss/dlogits for every supervised output.
template <typename T>
LossBreakdown total_loss(const ForwardOutput<T>& out, const Mask& target, const LossConfig& config,
                         OutputGradients<T>* grads = nullptr);

}  // namespace scnet
