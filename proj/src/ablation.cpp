#include "scnet/ablation.hpp"

#include <cstdio>

#include "scnet/errors.hpp"
#include "scnet/init.hpp"
#include "scnet/model.hpp"
#include "scnet/trainer.hpp"
#include "json_util.hpp"

namespace scnet {

LossCombo AblationVariant::combo() const {
    if (loss_combo) return *loss_combo;
    if (focal) return soft_iou ? LossCombo::FocalSoftIou : LossCombo::FocalOnly;
    return soft_iou ? LossCombo::CrossEntropySoftIou : LossCombo::CrossEntropyOnly;
}

ModelConfig AblationVariant::model_config(const ModelConfig& base) const {
    if (num_scales < 1 || num_scales > base.num_scales)
        throw ConfigError("variant " + name + ": num_scales must lie in [1, " + std::to_string(base.num_scales) + "]");
    ModelConfig c = base;
    c.num_scales = num_scales;
    c.encoder_channels.resize(static_cast<std::size_t>(num_scales));
    c.convs_per_block.resize(static_cast<std::size_t>(num_scales));
    c.attention_in_encoder = attention_encoder;
    c.attention_in_decoder = attention_decoder;
    c.use_scalar_weight_variant = scalar_weights;
    c.input_channels = edge_channel ? 4 : 3;
    return c;
}

LossConfig AblationVariant::loss_config(const LossConfig& base) const {
    LossConfig c = base;
    c.combo = combo();
    c.scale_weights.resize(static_cast<std::size_t>(num_scales), 1.0);
    return c;
}

void AblationVariant::validate(const ModelConfig& base) const {
    if (name.empty()) throw ConfigError("ablation variant without a name");
    model_config(base).validate();
    if (scalar_weights && !attention_encoder && !attention_decoder)
        throw ConfigError("variant " + name + ": scalar_weights needs attention in the encoder or decoder");
}

void to_json(nlohmann::json& j, const AblationVariant& v) {
    j = {{"name", v.name},
         {"attention_encoder", v.attention_encoder},
         {"attention_decoder", v.attention_decoder},
         {"focal", v.focal},
         {"soft_iou", v.soft_iou},
         {"edge_channel", v.edge_channel},
         {"scalar_weights", v.scalar_weights},
         {"num_scales", v.num_scales},
         {"median_frequency", v.median_frequency},
         {"init_scheme", v.init_scheme},
         {"init_source", v.init_source}};
    if (v.loss_combo) j["loss_combo"] = to_string(*v.loss_combo);
}

void from_json(const nlohmann::json& j, AblationVariant& v) {
    detail::reject_unknown_keys(j, "variant",
                                {"name", "attention_encoder", "attention_decoder", "focal", "soft_iou",
                                 "edge_channel", "scalar_weights", "num_scales", "loss_combo", "median_frequency",
                                 "init_scheme", "init_source"});
    detail::read_if(j, "name", v.name);
    detail::read_if(j, "attention_encoder", v.attention_encoder);
    detail::read_if(j, "attention_decoder", v.attention_decoder);
    detail::read_if(j, "focal", v.focal);
    detail::read_if(j, "soft_iou", v.soft_iou);
    detail::read_if(j, "edge_channel", v.edge_channel);
    detail::read_if(j, "scalar_weights", v.scalar_weights);
    detail::read_if(j, "num_scales", v.num_scales);
    detail::read_if(j, "median_frequency", v.median_frequency);
    detail::read_if(j, "init_scheme", v.init_scheme);
    detail::read_if(j, "init_source", v.init_source);
    if (j.contains("loss_combo")) v.loss_combo = parse_loss_combo(j.at("loss_combo").get<std::string>());
}

std::vector<AblationVariant> architecture_variants() {
    AblationVariant baseline;
    baseline.name = "Baseline";
    baseline.attention_encoder = baseline.attention_decoder = false;
    baseline.focal = baseline.soft_iou = false;
    baseline.edge_channel = false;

    AblationVariant attn = baseline;
    attn.name = "Baseline+Attn";
    attn.attention_encoder = attn.attention_decoder = true;

    AblationVariant focal = attn;
    focal.name = "Baseline+Attn+Focal";
    focal.focal = true;

    AblationVariant iou = focal;
    iou.name = "Baseline+Attn+Focal+Soft_IoU";
    iou.soft_iou = true;

    AblationVariant scalar = attn;
    scalar.name = "Baseline+ScalarWeights";
    scalar.scalar_weights = true;

    AblationVariant edges = iou;
    edges.name = "Baseline+Attn+Focal+Soft_IoU+Edges-1level";
    edges.edge_channel = true;
    edges.num_scales = 4;

    AblationVariant full = iou;
    full.name = "Full";
    full.edge_channel = true;

    return {baseline, attn, focal, iou, scalar, edges, full};
}

std::vector<AblationVariant> loss_variants() {
    std::vector<AblationVariant> out;
    for (LossCombo c : {LossCombo::CrossEntropyOnly, LossCombo::CrossEntropySoftIou, LossCombo::FocalOnly,
                        LossCombo::FocalSoftIou, LossCombo::FocalLovasz}) {
        AblationVariant v;
        v.name = to_string(c);
        v.loss_combo = c;
        out.push_back(v);
    }
    return out;
}

namespace {

bool cross_entropy(LossCombo c) { return c == LossCombo::CrossEntropyOnly || c == LossCombo::CrossEntropySoftIou; }

}  // namespace

std::vector<AblationRow> ablation_run(const std::vector<AblationVariant>& variants, const RunConfig& base,
                                      const std::vector<Sample>& train_set, const std::vector<Sample>& test_set,
                                      const std::function<void(const std::string&)>& log) {
    for (const auto& v : variants) v.validate(base.model);
    std::vector<cv::Mat> masks;
    for (const auto& s : train_set) masks.push_back(s.mask);
    const ImbalanceStats stats = imbalance_stats(masks);
    const double fg = stats.total_pixels ? static_cast<double>(stats.crack_pixels) / stats.total_pixels : 0.0;

    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        Model model(v.model_config(base.model));
        init_weights(model, v.init_scheme, base.train.seed, v.init_source);
        TrainOptions opts;
        opts.train = base.train;
        opts.loss = v.loss_config(base.loss);
        if (v.median_frequency && cross_entropy(opts.loss.combo) && fg > 0.0)
            opts.loss.class_weights = median_frequency_weights(fg, 1.0 - fg);
        opts.augment = base.data.augment;
        opts.prior = base.prior;
        opts.log = log;
        if (log) log("variant " + v.name + ": " + std::to_string(model.parameter_count()) + " parameters");
        train_model(model, train_set, {}, opts);
        AblationRow row{v.name, model.parameter_count(), evaluate_model(model, test_set, base.prior)};
        if (log) log("variant " + v.name + ": F1 " + std::to_string(row.report.pixel.f1));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = std::string(kAblationCsvHeader) + "\n";
    char line[256];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, ",%.10g,%.10g,%.10g,%.10g,%zu,%.4f\n", r.report.pixel.f1, r.report.pixel.iou,
                      r.report.region.f1, r.report.auprc, r.parameters, static_cast<double>(r.parameters) / 1e6);
        out += r.variant + line;
    }
    return out;
}

std::string ablation_table_csv(const std::string& dataset, const std::vector<AblationRow>& rows) {
    std::string header = "dataset";
    std::string values = dataset;
    char cell[64];
    for (const auto& r : rows) {
        header += "," + r.variant + " F1," + r.variant + " Params(M)";
        std::snprintf(cell, sizeof cell, ",%.4f,%.2f", r.report.pixel.f1, static_cast<double>(r.parameters) / 1e6);
        values += cell;
    }
    return header + "\n" + values + "\n";
}

}  // namespace scnet
