#include "scnet/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "scnet/errors.hpp"
#include "json_util.hpp"

namespace scnet {

void TrainConfig::validate() const {
    sgd.validate();
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (max_iterations < 0) throw ConfigError("train.max_iterations must be >= 0");
    if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
    if (eval_every < 0) throw ConfigError("train.eval_every must be >= 0");
    if (patience < 1) throw ConfigError("train.patience must be >= 1");
    if (device != "cpu") throw ConfigError("train.device: only \"cpu\" is available, got '" + device + "'");
    if (init != "glorot" && init != "pretrained-encoder")
        throw ConfigError("train.init must be \"glorot\" or \"pretrained-encoder\"");
    if (init == "pretrained-encoder" && init_source.empty())
        throw ConfigError("train.init_source is required for pretrained-encoder");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"learning_rate", c.sgd.learning_rate},
         {"momentum", c.sgd.momentum},
         {"weight_decay", c.sgd.weight_decay},
         {"batch_size", c.batch_size},
         {"epochs", c.epochs},
         {"max_iterations", c.max_iterations},
         {"seed", c.seed},
         {"checkpoint_every", c.checkpoint_every},
         {"deterministic", c.deterministic},
         {"eval_every", c.eval_every},
         {"patience", c.patience},
         {"device", c.device},
         {"init", c.init},
         {"init_source", c.init_source}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    detail::reject_unknown_keys(j, "train",
                                {"learning_rate", "momentum", "weight_decay", "batch_size", "epochs",
                                 "max_iterations", "seed", "checkpoint_every", "deterministic", "eval_every",
                                 "patience", "device", "init", "init_source"});
    detail::read_if(j, "learning_rate", c.sgd.learning_rate);
    detail::read_if(j, "momentum", c.sgd.momentum);
    detail::read_if(j, "weight_decay", c.sgd.weight_decay);
    detail::read_if(j, "batch_size", c.batch_size);
    detail::read_if(j, "epochs", c.epochs);
    detail::read_if(j, "max_iterations", c.max_iterations);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "checkpoint_every", c.checkpoint_every);
    detail::read_if(j, "deterministic", c.deterministic);
    detail::read_if(j, "eval_every", c.eval_every);
    detail::read_if(j, "patience", c.patience);
    detail::read_if(j, "device", c.device);
    detail::read_if(j, "init", c.init);
    detail::read_if(j, "init_source", c.init_source);
}

void DataConfig::validate() const {
    if (!manifest.empty() && !root.empty()) throw ConfigError("data: give either manifest or root, not both");
    if (!(holdout > 0.0 && holdout < 1.0)) throw ConfigError("data.holdout must lie in (0, 1)");
    if (!(validation >= 0.0 && validation < 1.0)) throw ConfigError("data.validation must lie in [0, 1)");
    augment.validate();
}

void to_json(nlohmann::json& j, const DataConfig& c) {
    j = {{"manifest", c.manifest}, {"root", c.root},       {"layout", c.layout},
         {"test_manifest", c.test_manifest}, {"holdout", c.holdout}, {"validation", c.validation},
         {"augment", c.augment}};
}

void from_json(const nlohmann::json& j, DataConfig& c) {
    detail::reject_unknown_keys(j, "data", {"manifest", "root", "layout", "test_manifest", "holdout", "validation", "augment"});
    detail::read_if(j, "manifest", c.manifest);
    detail::read_if(j, "root", c.root);
    if (j.contains("layout")) from_json(j.at("layout"), c.layout);
    detail::read_if(j, "test_manifest", c.test_manifest);
    detail::read_if(j, "holdout", c.holdout);
    detail::read_if(j, "validation", c.validation);
    if (j.contains("augment")) from_json(j.at("augment"), c.augment);
}

void RunConfig::validate() const {
    model.validate();
    loss.validate(model.num_scales);
    train.validate();
    data.validate();
    prior.validate();
    if (model.input_channels == 4 && prior.mode == EdgeMode::Precomputed && prior.edge_dir.empty() &&
        data.layout.edge_dir.empty())
        throw ConfigError("4-channel input with precomputed edges needs prior.edge_dir or data.layout.edge_dir");
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    return {{"model", c.model}, {"loss", c.loss}, {"train", c.train}, {"data", c.data}, {"prior", c.prior}};
}

namespace {

ModelConfig model_from_json(nlohmann::json j) {
    if (!j.is_object()) throw ConfigError("model: expected an object");
    ModelConfig base = ModelConfig::full();
    const std::string preset = j.value("preset", std::string("full"));
    int width = 8;
    detail::read_if(j, "desk_width", width);
    if (preset == "full") base = ModelConfig::full();
    else if (preset == "four_level") base = ModelConfig::four_level();
    else if (preset == "baseline") base = ModelConfig::baseline();
    else if (preset == "desk") base = ModelConfig::desk(width);
    else throw ConfigError("model.preset: unknown preset '" + preset + "'");
    if (j.contains("desk_width") && preset != "desk") throw ConfigError("model.desk_width needs preset \"desk\"");
    j.erase("preset");
    j.erase("desk_width");
    from_json(j, base);
    return base;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, "config", {"model", "loss", "train", "data", "prior"});
    RunConfig c;
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    if (j.contains("loss")) from_json(j.at("loss"), c.loss);
    if (j.contains("train")) from_json(j.at("train"), c.train);
    if (j.contains("data")) from_json(j.at("data"), c.data);
    if (j.contains("prior")) from_json(j.at("prior"), c.prior);
    if (c.loss.scale_weights.size() != static_cast<std::size_t>(c.model.num_scales) &&
        !(j.contains("loss") && j.at("loss").contains("scale_weights"))) {
        // Default weights are defined for five scales; a four-scale model
        // keeps the first four unless the file says otherwise.
        c.loss.scale_weights.resize(static_cast<std::size_t>(c.model.num_scales), 1.0);
    }
    c.validate();
    return c;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text;
    }
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

std::uint64_t effective_seed(std::uint64_t configured) {
    const char* env = std::getenv("SCNET_SEED");
    if (env == nullptr || *env == '\0') return configured;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError(std::string("SCNET_SEED is not an integer: ") + env);
    return v;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    for (const auto& o : overrides) apply_override(doc, o);
    RunConfig c = run_config_from_json(doc);
    c.train.seed = effective_seed(c.train.seed);
    // Relative data paths are taken from the config file's folder.
    const auto base = path.parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    resolve(c.data.manifest);
    resolve(c.data.root);
    resolve(c.data.test_manifest);
    resolve(c.prior.edge_dir);
    resolve(c.prior.edge_model);
    resolve(c.prior.edge_weights);
    resolve(c.train.init_source);
    return c;
}

}  // namespace scnet
