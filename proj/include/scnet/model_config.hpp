#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace scnet {

/// Architecture of the four-part network (attention encoder, enhancement
/// encoder, attention decoder, fused head).
struct ModelConfig {
    int num_scales = 5;
    std::vector<int> encoder_channels{64, 128, 256, 512, 512};
    std::vector<int> convs_per_block{2, 2, 3, 3, 3};
    bool attention_in_encoder = true;
    bool attention_in_decoder = true;
    /// Channels of the refined attention output F_r.
    int attention_out_channels = 1;
    int input_channels = 4;
    bool use_instance_norm = true;
    /// Ablation: one trainable scalar gate per feature block instead of a mask filter.
    bool use_scalar_weight_variant = false;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    /// Input height and width must be multiples of this.
    [[nodiscard]] int size_multiple() const { return 1 << num_scales; }

    /// Full-size five-scale network.
    static ModelConfig full();
    /// Four-scale ("-1 level") variant.
    static ModelConfig four_level();
    /// Plain encoder/decoder: no attention, RGB input.
    static ModelConfig baseline();
    /// Same topology as full() with narrow blocks, for CPU-scale training.
    static ModelConfig desk(int width = 8);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace scnet
