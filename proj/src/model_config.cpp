#include "scnet/model_config.hpp"

#include <numeric>
#include <set>

#include "scnet/errors.hpp"

namespace scnet {

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("model: " + msg); };
    if (num_scales != 4 && num_scales != 5) fail("num_scales must be 4 or 5");
    if (static_cast<int>(encoder_channels.size()) != num_scales)
        fail("encoder_channels needs one entry per scale");
    if (static_cast<int>(convs_per_block.size()) != num_scales)
        fail("convs_per_block needs one entry per scale");
    for (int c : encoder_channels)
        if (c < 1) fail("encoder_channels must be positive");
    for (int c : convs_per_block)
        if (c < 1) fail("convs_per_block must be positive");
    if (num_scales == 5 && std::accumulate(convs_per_block.begin(), convs_per_block.end(), 0) != 13)
        fail("a five-scale encoder has 13 convolutions in total");
    if (input_channels != 3 && input_channels != 4) fail("input_channels must be 3 or 4");
    if (attention_out_channels < 1) fail("attention_out_channels must be positive");
}

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig ModelConfig::four_level() {
    ModelConfig c;
    c.num_scales = 4;
    c.encoder_channels = {64, 128, 256, 512};
    c.convs_per_block = {2, 2, 3, 3};
    return c;
}

ModelConfig ModelConfig::baseline() {
    ModelConfig c;
    c.attention_in_encoder = false;
    c.attention_in_decoder = false;
    c.input_channels = 3;
    return c;
}

ModelConfig ModelConfig::desk(int width) {
    ModelConfig c;
    c.encoder_channels = {width, 2 * width, 4 * width, 4 * width, 4 * width};
    return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"num_scales", c.num_scales},
                       {"encoder_channels", c.encoder_channels},
                       {"convs_per_block", c.convs_per_block},
                       {"attention_in_encoder", c.attention_in_encoder},
                       {"attention_in_decoder", c.attention_in_decoder},
                       {"attention_out_channels", c.attention_out_channels},
                       {"input_channels", c.input_channels},
                       {"use_instance_norm", c.use_instance_norm},
                       {"use_scalar_weight_variant", c.use_scalar_weight_variant}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    static const std::set<std::string> known{
        "num_scales",       "encoder_channels",       "convs_per_block",
        "attention_in_encoder", "attention_in_decoder", "attention_out_channels",
        "input_channels",   "use_instance_norm",      "use_scalar_weight_variant"};
    if (!j.is_object()) throw ConfigError("model: expected an object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("model: unknown key '" + key + "'");
    try {
        if (j.contains("num_scales")) j.at("num_scales").get_to(c.num_scales);
        if (j.contains("encoder_channels")) j.at("encoder_channels").get_to(c.encoder_channels);
        if (j.contains("convs_per_block")) j.at("convs_per_block").get_to(c.convs_per_block);
        if (j.contains("attention_in_encoder")) j.at("attention_in_encoder").get_to(c.attention_in_encoder);
        if (j.contains("attention_in_decoder")) j.at("attention_in_decoder").get_to(c.attention_in_decoder);
        if (j.contains("attention_out_channels"))
            j.at("attention_out_channels").get_to(c.attention_out_channels);
        if (j.contains("input_channels")) j.at("input_channels").get_to(c.input_channels);
        if (j.contains("use_instance_norm")) j.at("use_instance_norm").get_to(c.use_instance_norm);
        if (j.contains("use_scalar_weight_variant"))
            j.at("use_scalar_weight_variant").get_to(c.use_scalar_weight_variant);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

}  // namespace scnet
