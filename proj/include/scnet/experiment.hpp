#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scnet/datapipe.hpp"
#include "scnet/metrics.hpp"
#include "scnet/run_config.hpp"
#include "scnet/trainer.hpp"

namespace scnet {

struct DataSplits {
    Manifest train;
    Manifest validation;
    Manifest test;
};

/// Resolves the data section. With test_manifest the two files are used as
/// given; a manifest whose records already carry "train"/"test" keeps them;
/// otherwise the test split is held out with the seed. Validation records are
/// then split off the training part with the same rule.
DataSplits load_splits(const DataConfig& data, std::uint64_t seed);

/// Loads every record; in precomputed mode, records without an edge path
/// take <prior.edge_dir>/<id>.edge.png.
std::vector<Sample> load_samples(const Manifest& manifest, const PriorConfig& prior);

struct RunSummary {
    TrainResult train;
    double threshold = 0.5;
    MetricReport test;
    std::filesystem::path checkpoint;
};

/// Full training run into `out`: config.json (resolved, with the seed),
/// history.csv, checkpoints/, final.ckpt (threshold in its metadata), and
/// metrics.csv / prc.csv for the test split when it is non-empty.
RunSummary run_training(const RunConfig& config, const std::filesystem::path& out,
                        const std::function<void(const std::string&)>& log = {});

/// Writes metrics.csv and prc.csv for one named report into `dir`.
void write_metric_files(const std::filesystem::path& dir, const std::string& name, const MetricReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace scnet
