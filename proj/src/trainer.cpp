#include "scnet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "scnet/checkpoint.hpp"
#include "scnet/errors.hpp"
#include "scnet/optimizer.hpp"

namespace scnet {

std::string history_csv(const std::vector<HistoryRow>& rows) {
    std::string out = std::string(kHistoryCsvHeader) + "\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g\n", r.iteration, r.total, r.pixel, r.region);
        out += line;
    }
    return out;
}

FeatureMap prepare_input(const Sample& sample, int channels, EdgeDetector& detector) {
    if (channels == 3) return assemble_input(sample.rgb, {}, 3);
    if (!sample.edges.empty()) return assemble_input(sample.rgb, sample.edges, channels);
    if (detector.config().mode == EdgeMode::Precomputed)
        throw DataError("sample " + sample.id + " has no precomputed edge map");
    return assemble_input(sample.rgb, detector.detect(sample.rgb), channels);
}

namespace {

struct Prepared {
    FeatureMap input;
    Mask target;
};

void check_trainable(const Sample& s, int multiple) {
    if (s.rgb.rows % multiple != 0 || s.rgb.cols % multiple != 0)
        throw DataError("training sample " + s.id + " is " + std::to_string(s.rgb.rows) + "x" +
                        std::to_string(s.rgb.cols) + "; without augmentation crops, sizes must be multiples of " +
                        std::to_string(multiple));
}

bool finite(const LossBreakdown& b) { return std::isfinite(b.total) && std::isfinite(b.pixel) && std::isfinite(b.region); }

}  // namespace

TrainResult train_model(Model& model, const std::vector<Sample>& train_set, const std::vector<Sample>& validation,
                        const TrainOptions& options) {
    const TrainConfig& tc = options.train;
    tc.validate();
    options.loss.validate(model.config().num_scales);
    if (train_set.empty()) throw DataError("training set is empty");
    const int channels = model.config().input_channels;
    const int multiple = model.config().size_multiple();
    if (options.augment.enabled) {
        options.augment.validate();
        if (options.augment.crop % multiple != 0)
            throw ConfigError("augment.crop must be a multiple of " + std::to_string(multiple));
    } else {
        for (const auto& s : train_set) check_trainable(s, multiple);
    }

    EdgeDetector detector(options.prior);
    std::vector<Prepared> cached;
    if (!options.augment.enabled) {
        for (const auto& s : train_set)
            cached.push_back({prepare_input(s, channels, detector), mask_from_mat(s.mask)});
    }

    std::seed_seq aug_seq{static_cast<std::uint32_t>(tc.seed), static_cast<std::uint32_t>(tc.seed >> 32), 0x5eedu};
    std::mt19937_64 aug_rng(aug_seq);
    const BatchSchedule schedule(train_set.size(), tc.batch_size, tc.seed, tc.deterministic);
    Sgd<float> sgd(tc.sgd, model.parameters());
    ParameterSet<float> grads = model.parameters().zeros_like();

    TrainResult result;
    ParameterSet<float> best = model.parameters();
    int evaluations_without_gain = 0;
    int iteration = 0;
    const bool validate_runs = !validation.empty() && tc.eval_every > 0;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        for (const auto& batch : schedule.epoch(epoch)) {
            grads.set_zero();
            HistoryRow row{iteration + 1, epoch, 0.0, 0.0, 0.0};
            int members = 0;
            auto accumulate = [&](const FeatureMap& input, const Mask& target) {
                ForwardTrace<float> trace;
                const ForwardOutput<float> out = model.forward(input, trace);
                OutputGradients<float> og;
                const LossBreakdown b = total_loss(out, target, options.loss, &og);
                if (!finite(b))
                    throw DivergenceError("loss became non-finite at iteration " + std::to_string(row.iteration));
                model.backward(trace, og, grads);
                row.total += b.total;
                row.pixel += b.pixel;
                row.region += b.region;
                ++members;
            };
            for (const std::size_t idx : batch) {
                if (!options.augment.enabled) {
                    accumulate(cached[idx].input, cached[idx].target);
                    continue;
                }
                for (const Sample& crop : augment(train_set[idx], options.augment, aug_rng))
                    accumulate(prepare_input(crop, channels, detector), mask_from_mat(crop.mask));
            }
            const float inv = 1.0f / static_cast<float>(members);
            for (std::size_t i = 0; i < grads.size(); ++i)
                for (float& g : grads.values(i)) g *= inv;
            row.total /= members;
            row.pixel /= members;
            row.region /= members;
            sgd.step(model.parameters(), grads);
            ++iteration;
            result.history.push_back(row);
            if (options.on_iteration) options.on_iteration(row);
            if (tc.max_iterations > 0 && iteration >= tc.max_iterations) break;
        }
        result.epochs = epoch;

        if (!options.checkpoint_dir.empty() && tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch-%04d.ckpt", epoch);
            nlohmann::json meta = options.metadata;
            meta["epoch"] = epoch;
            meta["iterations"] = iteration;
            save_checkpoint(options.checkpoint_dir / name, model, meta);
        }
        if (validate_runs && epoch % tc.eval_every == 0) {
            const double f1 = evaluate_model(model, validation, options.prior).pixel.f1;
            if (options.log) {
                char msg[96];
                std::snprintf(msg, sizeof msg, "epoch %d: validation F1 %.4f", epoch, f1);
                options.log(msg);
            }
            if (f1 > result.best_validation_f1) {
                result.best_validation_f1 = f1;
                best = model.parameters();
                evaluations_without_gain = 0;
            } else if (++evaluations_without_gain >= tc.patience) {
                result.stopped_early = true;
            }
        }
        if (result.stopped_early || (tc.max_iterations > 0 && iteration >= tc.max_iterations)) break;
    }
    if (validate_runs && result.best_validation_f1 >= 0.0) model.parameters() = best;
    result.iterations = iteration;
    return result;
}

std::vector<EvalImage> predict_samples(const Model& model, const std::vector<Sample>& samples,
                                       EdgeDetector& detector) {
    std::vector<EvalImage> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const FeatureMap input = prepare_input(s, model.config().input_channels, detector);
        ForwardOutput<float> fwd = predict_padded(model, input);
        out.push_back({std::move(fwd.fused_prob), mask_from_mat(s.mask)});
    }
    return out;
}

MetricReport evaluate_model(const Model& model, const std::vector<Sample>& samples, const PriorConfig& prior,
                            const RegionRules& rules) {
    if (samples.empty()) throw DataError("evaluation set is empty");
    EdgeDetector detector(prior);
    const auto images = predict_samples(model, samples, detector);
    return evaluate_predictions(images, {}, rules);
}

MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::vector<Sample>& samples,
                                 const PriorConfig& prior) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const int channels = ck.model.config().input_channels;
    if (channels == 4 && prior.mode == EdgeMode::Precomputed) {
        for (const auto& s : samples)
            if (s.edges.empty())
                throw ConfigError("checkpoint expects 4 input channels but sample " + s.id +
                                  " has no precomputed edge map");
    }
    return evaluate_model(ck.model, samples, prior);
}

std::vector<std::vector<double>> cross_evaluate(const std::vector<const Model*>& models,
                                                const std::vector<std::vector<Sample>>& test_sets,
                                                const PriorConfig& prior) {
    std::vector<std::vector<double>> f1(models.size(), std::vector<double>(test_sets.size(), 0.0));
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = 0; j < test_sets.size(); ++j)
            f1[i][j] = evaluate_model(*models[i], test_sets[j], prior).pixel.f1;
    return f1;
}

std::string cross_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& f1) {
    if (f1.size() != names.size()) throw DataError("cross_csv: one name per model row is required");
    std::string out = "trained_on";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    char cell[32];
    for (std::size_t i = 0; i < f1.size(); ++i) {
        out += names[i];
        for (double v : f1[i]) {
            std::snprintf(cell, sizeof cell, ",%.10g", v);
            out += cell;
        }
        out += "\n";
    }
    return out;
}

}  // namespace scnet
