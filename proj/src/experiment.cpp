#include "scnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "scnet/checkpoint.hpp"
#include "scnet/errors.hpp"
#include "scnet/init.hpp"

namespace fs = std::filesystem;

namespace scnet {

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

void write_metric_files(const fs::path& dir, const std::string& name, const MetricReport& report) {
    write_text_file(dir / "metrics.csv", std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row(name, report) + "\n");
    write_text_file(dir / "prc.csv", prc_csv(name, report.curve));
}

namespace {

Manifest base_manifest(const DataConfig& data) {
    if (!data.manifest.empty()) return read_manifest_file(data.manifest);
    if (!data.root.empty()) return load_manifest(data.root, data.layout);
    throw ConfigError("data: set either manifest or root");
}

Manifest with_split(const Manifest& m, const std::string& split) {
    Manifest out;
    for (const auto& r : m.records)
        if (r.split == split) out.records.push_back(r);
    return out;
}

}  // namespace

DataSplits load_splits(const DataConfig& data, std::uint64_t seed) {
    DataSplits s;
    const Manifest all = base_manifest(data);
    if (!data.test_manifest.empty()) {
        s.train = all;
        s.test = read_manifest_file(data.test_manifest);
    } else {
        const bool presplit = std::any_of(all.records.begin(), all.records.end(),
                                          [](const SampleRecord& r) { return r.split == "test"; });
        if (presplit) {
            s.train = with_split(all, "train");
            s.test = with_split(all, "test");
        } else {
            std::tie(s.train, s.test) = split_holdout(all, data.holdout, seed);
        }
    }
    const auto val_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(s.train.size()) * data.validation + 1e-9));
    if (val_count > 0) {
        auto [rest, val] = split_holdout(s.train, data.validation, seed ^ 0x9e3779b97f4a7c15ULL);
        for (auto& r : rest.records) r.split = "train";
        for (auto& r : val.records) r.split = "validation";
        s.train = std::move(rest);
        s.validation = std::move(val);
    }
    return s;
}

std::vector<Sample> load_samples(const Manifest& manifest, const PriorConfig& prior) {
    std::vector<Sample> out;
    out.reserve(manifest.size());
    for (SampleRecord r : manifest.records) {
        if (prior.mode == EdgeMode::Precomputed && r.edge.empty() && !prior.edge_dir.empty())
            r.edge = edge_path_for(prior.edge_dir, r.id).string();
        out.push_back(load_sample(r));
    }
    return out;
}

RunSummary run_training(const RunConfig& config, const fs::path& out,
                        const std::function<void(const std::string&)>& log) {
    config.validate();
    fs::create_directories(out);
    write_text_file(out / "config.json", run_config_to_json(config).dump(2) + "\n");

    const DataSplits splits = load_splits(config.data, config.train.seed);
    write_manifest_file(out / "split_train.json", splits.train);
    write_manifest_file(out / "split_validation.json", splits.validation);
    write_manifest_file(out / "split_test.json", splits.test);
    const auto train_set = load_samples(splits.train, config.prior);
    const auto val_set = load_samples(splits.validation, config.prior);
    const auto test_set = load_samples(splits.test, config.prior);
    if (log)
        log("samples: " + std::to_string(train_set.size()) + " train, " + std::to_string(val_set.size()) +
            " validation, " + std::to_string(test_set.size()) + " test");

    Model model(config.model);
    init_weights(model, config.train.init, config.train.seed, config.train.init_source);

    TrainOptions opts;
    opts.train = config.train;
    opts.loss = config.loss;
    opts.augment = config.data.augment;
    opts.prior = config.prior;
    opts.checkpoint_dir = out / "checkpoints";
    opts.metadata = {{"seed", config.train.seed}};
    opts.log = log;
    std::ofstream history(out / "history.csv", std::ios::binary);
    history << kHistoryCsvHeader << '\n';
    opts.on_iteration = [&](const HistoryRow& r) {
        history << history_csv({r}).substr(std::string(kHistoryCsvHeader).size() + 1);
        if (log && r.iteration % 50 == 0) {
            char msg[96];
            std::snprintf(msg, sizeof msg, "iter %d epoch %d loss %.4f", r.iteration, r.epoch, r.total);
            log(msg);
        }
    };

    RunSummary summary;
    summary.train = train_model(model, train_set, val_set, opts);
    history.close();

    const auto& pick_set = val_set.empty() ? train_set : val_set;
    summary.threshold = evaluate_model(model, pick_set, config.prior).threshold;
    summary.checkpoint = out / "final.ckpt";
    save_checkpoint(summary.checkpoint, model,
                    {{"seed", config.train.seed},
                     {"iterations", summary.train.iterations},
                     {"epochs", summary.train.epochs},
                     {"threshold", summary.threshold},
                     {"threshold_source", val_set.empty() ? "train" : "validation"}});
    if (!test_set.empty()) {
        summary.test = evaluate_model(model, test_set, config.prior);
        fs::path name = out.lexically_normal();
        if (name.filename().empty()) name = name.parent_path();
        write_metric_files(out, name.filename().empty() ? "run" : name.filename().string(), summary.test);
    }
    return summary;
}

}  // namespace scnet
