#include "scnet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace scnet {
namespace {

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double logistic(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

template <typename T>
void check_inputs(std::span<const T> logits, std::span<const std::uint8_t> target, std::span<T> grad,
                  const char* what) {
    if (logits.size() != target.size())
        throw ShapeError(std::string(what) + ": logits and target sizes differ");
    if (!grad.empty() && grad.size() != logits.size())
        throw ShapeError(std::string(what) + ": gradient buffer has the wrong size");
    for (std::uint8_t y : target)
        if (y > 1) throw DataError(std::string(what) + ": target must be binary");
}

const std::vector<std::pair<LossCombo, std::string>>& combo_names() {
    static const std::vector<std::pair<LossCombo, std::string>> names{
        {LossCombo::FocalSoftIou, "focal+softiou"},
        {LossCombo::CrossEntropyOnly, "ce_only"},
        {LossCombo::CrossEntropySoftIou, "ce+softiou"},
        {LossCombo::FocalLovasz, "focal+lovasz"},
        {LossCombo::FocalOnly, "focal_only"}};
    return names;
}

}  // namespace

std::string to_string(LossCombo c) {
    for (const auto& [combo, name] : combo_names())
        if (combo == c) return name;
    return "unknown";
}

LossCombo parse_loss_combo(const std::string& name) {
    for (const auto& [combo, n] : combo_names())
        if (n == name) return combo;
    throw ConfigError("loss: unknown combo '" + name + "'");
}

bool operator==(const ClassWeights& a, const ClassWeights& b) {
    return a.foreground == b.foreground && a.background == b.background;
}

ClassWeights median_frequency_weights(double foreground_frequency, double background_frequency) {
    if (!(foreground_frequency > 0) || !(background_frequency > 0))
        throw DataError("median-frequency weights need both classes present");
    const double median = (foreground_frequency + background_frequency) / 2;
    return {median / foreground_frequency, median / background_frequency};
}

void LossConfig::validate(int num_scales) const {
    auto fail = [](const std::string& msg) { throw ConfigError("loss: " + msg); };
    if (!(alpha > 0)) fail("alpha must be positive");
    if (!(gamma >= 0)) fail("gamma must be nonnegative");
    if (static_cast<int>(scale_weights.size()) != num_scales)
        fail("scale_weights needs " + std::to_string(num_scales) + " entries");
    for (double w : scale_weights)
        if (!(w >= 0)) fail("scale_weights must be nonnegative");
    if (!(soft_iou_weight >= 0)) fail("soft_iou_weight must be nonnegative");
    if (!(class_weights.foreground > 0) || !(class_weights.background > 0))
        fail("class weights must be positive");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
    j = nlohmann::json{{"alpha", c.alpha},
                       {"gamma", c.gamma},
                       {"scale_weights", c.scale_weights},
                       {"soft_iou_weight", c.soft_iou_weight},
                       {"combo", to_string(c.combo)},
                       {"mean_reduction", c.mean_reduction},
                       {"class_weights", {c.class_weights.foreground, c.class_weights.background}}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
    static const std::set<std::string> known{"alpha",  "gamma",          "scale_weights", "soft_iou_weight",
                                             "combo",  "mean_reduction", "class_weights"};
    if (!j.is_object()) throw ConfigError("loss: expected an object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("loss: unknown key '" + key + "'");
    try {
        if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
        if (j.contains("gamma")) j.at("gamma").get_to(c.gamma);
        if (j.contains("scale_weights")) j.at("scale_weights").get_to(c.scale_weights);
        if (j.contains("soft_iou_weight")) j.at("soft_iou_weight").get_to(c.soft_iou_weight);
        if (j.contains("combo")) c.combo = parse_loss_combo(j.at("combo").get<std::string>());
        if (j.contains("mean_reduction")) j.at("mean_reduction").get_to(c.mean_reduction);
        if (j.contains("class_weights")) {
            const auto w = j.at("class_weights").get<std::vector<double>>();
            if (w.size() != 2) throw ConfigError("loss: class_weights is [foreground, background]");
            c.class_weights = {w[0], w[1]};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("loss: ") + e.what());
    }
}

template <typename T>
double focal_loss(std::span<const T> logits, std::span<const std::uint8_t> target, double alpha,
                  double gamma, std::span<T> grad) {
    check_inputs(logits, target, grad, "focal_loss");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double sign = target[i] ? 1.0 : -1.0;
        const double z = sign * static_cast<double>(logits[i]);
        // (1 - p_t)^gamma = sigmoid(-z)^gamma = exp(-gamma * softplus(z)); -log p_t = softplus(-z)
        const double modulation = std::exp(-gamma * softplus(z));
        const double nll = softplus(-z);
        total += alpha * modulation * nll;
        if (!grad.empty()) {
            const double dz = -alpha * modulation * (gamma * logistic(z) * nll + logistic(-z));
            grad[i] = static_cast<T>(sign * dz);
        }
    }
    return total;
}

template <typename T>
double weighted_bce_loss(std::span<const T> logits, std::span<const std::uint8_t> target,
                         ClassWeights weights, std::span<T> grad) {
    check_inputs(logits, target, grad, "weighted_bce_loss");
    if (!(weights.foreground > 0) || !(weights.background > 0))
        throw ConfigError("weighted_bce_loss: class weights must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double sign = target[i] ? 1.0 : -1.0;
        const double w = target[i] ? weights.foreground : weights.background;
        const double z = sign * static_cast<double>(logits[i]);
        total += w * softplus(-z);
        if (!grad.empty()) grad[i] = static_cast<T>(-sign * w * logistic(-z));
    }
    return total;
}

double soft_iou_loss_from_probabilities(std::span<const double> prob,
                                        std::span<const std::uint8_t> target, std::span<double> grad) {
    check_inputs(prob, target, grad, "soft_iou_loss");
    double inter = 0.0;
    double sum_p = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        inter += prob[i] * target[i];
        sum_p += prob[i];
        sum_y += target[i];
    }
    const double raw_union = sum_p + sum_y - inter;
    // The epsilon only guards an empty union; a nonempty one is used as is.
    const double uni = std::max(raw_union, kSoftIouEpsilon);
    if (!grad.empty())
        for (std::size_t i = 0; i < prob.size(); ++i) {
            const double y = target[i];
            const double d_union = raw_union > kSoftIouEpsilon ? 1 - y : 0.0;
            grad[i] = -(y * uni - inter * d_union) / (uni * uni);
        }
    return 1.0 - inter / uni;
}

template <typename T>
double soft_iou_loss(std::span<const T> logits, std::span<const std::uint8_t> target, std::span<T> grad) {
    check_inputs(logits, target, grad, "soft_iou_loss");
    std::vector<double> prob(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) prob[i] = logistic(static_cast<double>(logits[i]));
    std::vector<double> dp(grad.empty() ? 0 : logits.size());
    const double loss = soft_iou_loss_from_probabilities(prob, target, dp);
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = static_cast<T>(dp[i] * prob[i] * (1 - prob[i]));
    return loss;
}

template <typename T>
double lovasz_hinge_loss(std::span<const T> logits, std::span<const std::uint8_t> target, std::span<T> grad) {
    check_inputs(logits, target, grad, "lovasz_hinge_loss");
    const std::size_t n = logits.size();
    if (n == 0) return 0.0;
    std::vector<double> errors(n);
    for (std::size_t i = 0; i < n; ++i)
        errors[i] = 1.0 - static_cast<double>(logits[i]) * (target[i] ? 1.0 : -1.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });

    double positives = 0.0;
    for (std::uint8_t y : target) positives += y;
    // Gradient of the Lovasz extension: successive differences of the
    // Jaccard loss along the sorted order.
    double cum_pos = 0.0;
    double cum_neg = 0.0;
    double prev_jaccard = 0.0;
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[r];
        (target[i] ? cum_pos : cum_neg) += 1.0;
        const double inter = positives - cum_pos;
        const double uni = positives + cum_neg;
        const double jaccard = 1.0 - inter / uni;
        const double weight = jaccard - prev_jaccard;
        prev_jaccard = jaccard;
        const double hinge = std::max(errors[i], 0.0);
        loss += hinge * weight;
        if (!grad.empty())
            grad[i] = static_cast<T>(errors[i] > 0 ? -weight * (target[i] ? 1.0 : -1.0) : 0.0);
    }
    return loss;
}

namespace {

template <typename T>
std::span<const T> flat(const Tensor<T>& t) {
    return t.values();
}

std::span<const std::uint8_t> flat_target(const Mask& m, const Shape& expected) {
    if (m.channels() != 1 || !m.shape().spatially_equal(expected))
        throw ShapeError("loss: target " + to_string(m.shape()) + " does not match output " +
                         to_string(expected));
    return m.values();
}

template <typename T>
void scale(Tensor<T>& g, double s) {
    for (T& v : g.values()) v = static_cast<T>(v * s);
}

// Pixel term of one map: focal for the focal combos, weighted BCE otherwise.
template <typename T>
double pixel_term(const Tensor<T>& logits, std::span<const std::uint8_t> y, const LossConfig& c,
                  Tensor<T>* grad) {
    std::span<T> g = grad ? grad->values() : std::span<T>{};
    const bool ce = c.combo == LossCombo::CrossEntropyOnly || c.combo == LossCombo::CrossEntropySoftIou;
    double v = ce ? weighted_bce_loss(flat(logits), y, c.class_weights, g)
                  : focal_loss(flat(logits), y, c.alpha, c.gamma, g);
    if (c.mean_reduction) {
        const double n = static_cast<double>(logits.size());
        v /= n;
        if (grad) scale(*grad, 1.0 / n);
    }
    return v;
}

}  // namespace

template <typename T>
double total_focal(const ForwardOutput<T>& out, const Mask& target, const LossConfig& config,
                   OutputGradients<T>* grads) {
    if (out.side_logits.size() != config.scale_weights.size())
        throw ConfigError("loss: " + std::to_string(config.scale_weights.size()) +
                          " scale weights for " + std::to_string(out.side_logits.size()) + " side outputs");
    const auto y = flat_target(target, out.fused_logits.shape());
    if (grads) {
        grads->fused_logits = Tensor<T>(out.fused_logits.shape());
        grads->side_logits.assign(out.side_logits.size(), Tensor<T>{});
    }
    double total = pixel_term(out.fused_logits, y, config, grads ? &grads->fused_logits : nullptr);
    for (std::size_t i = 0; i < out.side_logits.size(); ++i) {
        const double w = config.scale_weights[i];
        Tensor<T>* g = nullptr;
        if (grads) {
            grads->side_logits[i] = Tensor<T>(out.side_logits[i].shape());
            g = &grads->side_logits[i];
        }
        total += w * pixel_term(out.side_logits[i], y, config, g);
        if (g) scale(*g, w);
    }
    return total;
}

template <typename T>
LossBreakdown total_loss(const ForwardOutput<T>& out, const Mask& target, const LossConfig& config,
                         OutputGradients<T>* grads) {
    LossBreakdown r;
    r.pixel = total_focal(out, target, config, grads);
    const auto y = flat_target(target, out.fused_logits.shape());
    const bool soft_iou = config.combo == LossCombo::FocalSoftIou ||
                          config.combo == LossCombo::CrossEntropySoftIou;
    const bool lovasz = config.combo == LossCombo::FocalLovasz;
    if (soft_iou || lovasz) {
        Tensor<T> g;
        if (grads) g = Tensor<T>(out.fused_logits.shape());
        std::span<T> gs = grads ? g.values() : std::span<T>{};
        r.region = soft_iou ? soft_iou_loss(flat(out.fused_logits), y, gs)
                            : lovasz_hinge_loss(flat(out.fused_logits), y, gs);
        if (grads) {
            scale(g, config.soft_iou_weight);
            add_inplace(grads->fused_logits, g);
        }
    }
    r.total = r.pixel + config.soft_iou_weight * r.region;
    return r;
}

#define SCNET_INSTANTIATE_LOSSES(T)                                                                 \
    template double focal_loss(std::span<const T>, std::span<const std::uint8_t>, double, double, \
                               std::span<T>);                                                       \
    template double weighted_bce_loss(std::span<const T>, std::span<const std::uint8_t>,           \
                                      ClassWeights, std::span<T>);                                  \
    template double soft_iou_loss(std::span<const T>, std::span<const std::uint8_t>, std::span<T>); \
    template double lovasz_hinge_loss(std::span<const T>, std::span<const std::uint8_t>,           \
                                      std::span<T>);                                                \
    template double total_focal(const ForwardOutput<T>&, const Mask&, const LossConfig&,           \
                                OutputGradients<T>*);                                               \
    template LossBreakdown total_loss(const ForwardOutput<T>&, const Mask&, const LossConfig&,     \
                                      OutputGradients<T>*);

SCNET_INSTANTIATE_LOSSES(float)
SCNET_INSTANTIATE_LOSSES(double)

}  // namespace scnet
