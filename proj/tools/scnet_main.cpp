// scnet <command> --config <path> [--out <dir>] [--set key=value ...]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <opencv2/imgproc.hpp>

#include "scnet/ablation.hpp"
#include "scnet/checkpoint.hpp"
#include "scnet/errors.hpp"
#include "scnet/experiment.hpp"
#include "scnet/image_io.hpp"
#include "scnet/report.hpp"
#include "scnet/synth.hpp"

namespace fs = std::filesystem;
using namespace scnet;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
    auto* opt = cmd->add_option("--config", c.config, "Run config JSON");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--set", c.overrides, "Override a config value: section.key=value");
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

RunConfig config_of(const Common& c) {
    if (!c.config.empty()) return load_run_config(c.config, c.overrides);
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& o : c.overrides) apply_override(doc, o);
    return run_config_from_json(doc);
}

std::vector<Sample> split_samples(const RunConfig& config, const std::string& which) {
    const DataSplits s = load_splits(config.data, config.train.seed);
    Manifest m;
    if (which == "train") m = s.train;
    else if (which == "validation") m = s.validation;
    else if (which == "test") m = s.test;
    else if (which == "all") {
        m = s.train;
        for (const auto* part : {&s.validation, &s.test})
            m.records.insert(m.records.end(), part->records.begin(), part->records.end());
    } else throw ConfigError("--split must be train, validation, test or all");
    if (m.empty()) throw DataError("the " + which + " split is empty");
    return load_samples(m, config.prior);
}

int cmd_stats(const Common& c) {
    const RunConfig config = config_of(c);
    const DataSplits s = load_splits(config.data, config.train.seed);
    nlohmann::json j;
    std::printf("split,images,crack_percent,non_crack_percent\n");
    for (const auto& [name, m] : {std::pair<const char*, const Manifest*>{"train", &s.train},
                                  {"validation", &s.validation}, {"test", &s.test}}) {
        const ImbalanceStats st = imbalance_stats(*m);
        std::printf("%s,%zu,%.2f,%.2f\n", name, m->size(), st.crack_percent, st.background_percent);
        j[name] = {{"images", m->size()},
                   {"crack_pixels", st.crack_pixels},
                   {"total_pixels", st.total_pixels},
                   {"crack_percent", st.crack_percent},
                   {"non_crack_percent", st.background_percent}};
    }
    write_text_file(fs::path(c.out) / "stats.json", j.dump(2) + "\n");
    return 0;
}

int cmd_edges(const Common& c) {
    const RunConfig config = config_of(c);
    if (config.prior.mode == EdgeMode::Precomputed)
        throw ConfigError("edges: set prior.mode to classical or learned to compute edge maps");
    EdgeDetector detector(config.prior);
    const DataSplits s = load_splits(config.data, config.train.seed);
    std::size_t n = 0;
    for (const auto* m : {&s.train, &s.validation, &s.test}) {
        for (const auto& r : m->records) {
            write_binary(edge_path_for(c.out, r.id), detector.detect(read_rgb(r.image)));
            ++n;
        }
    }
    std::printf("wrote %zu edge maps to %s\n", n, c.out.c_str());
    return 0;
}

int cmd_train(const Common& c) {
    const RunConfig config = config_of(c);
    const RunSummary s = run_training(config, c.out, log_line);
    nlohmann::json run = {{"command", "train"}, {"seed", config.train.seed}, {"iterations", s.train.iterations},
                          {"epochs", s.train.epochs}, {"stopped_early", s.train.stopped_early},
                          {"threshold", s.threshold}};
    write_text_file(fs::path(c.out) / "run.json", run.dump(2) + "\n");
    std::printf("checkpoint %s  threshold %.2f", s.checkpoint.string().c_str(), s.threshold);
    if (s.test.curve.empty()) std::printf("\n");
    else std::printf("  test F1 %.4f  AUPRC %.4f\n", s.test.pixel.f1, s.test.auprc);
    return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& split, const std::string& name) {
    const RunConfig config = config_of(c);
    const auto samples = split_samples(config, split);
    const MetricReport r = evaluate_checkpoint(checkpoint, samples, config.prior);
    write_metric_files(c.out, name, r);
    std::printf("%s\n%s\n", kMetricsCsvHeader, metrics_csv_row(name, r).c_str());
    return 0;
}

int cmd_threshold(const Common& c, const std::string& checkpoint, const std::string& split) {
    const RunConfig config = config_of(c);
    const auto samples = split_samples(config, split);
    const Checkpoint ck = load_checkpoint(checkpoint);
    EdgeDetector detector(config.prior);
    const auto images = predict_samples(ck.model, samples, detector);
    const auto grid = default_threshold_grid();
    const auto counts = counts_per_threshold(images, grid);
    std::string csv = "threshold,tp,fp,fn,tn,precision,recall,f1\n";
    char line[200];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const PixelScores p = pixel_scores(counts[i]);
        std::snprintf(line, sizeof line, "%.2f,%llu,%llu,%llu,%llu,%.10g,%.10g,%.10g\n", grid[i],
                      static_cast<unsigned long long>(counts[i].tp), static_cast<unsigned long long>(counts[i].fp),
                      static_cast<unsigned long long>(counts[i].fn), static_cast<unsigned long long>(counts[i].tn),
                      p.precision, p.recall, p.f1);
        csv += line;
    }
    write_text_file(fs::path(c.out) / "threshold_sweep.csv", csv);
    const ThresholdChoice best = iterative_threshold(images, grid);
    std::printf("best threshold %.2f  F1 %.6f\n", best.threshold, best.f1);
    return 0;
}

int cmd_predict(const Common& c, const std::string& checkpoint, const std::vector<std::string>& images,
                double threshold_flag) {
    const RunConfig config = config_of(c);
    const Checkpoint ck = load_checkpoint(checkpoint);
    double threshold = threshold_flag;
    if (threshold < 0.0) threshold = ck.metadata.value("threshold", 0.5);
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    EdgeDetector detector(config.prior);
    for (const auto& path : images) {
        const std::string name = fs::path(path).stem().string();
        Sample s{name, read_rgb(path), {}, {}};
        if (config.prior.mode == EdgeMode::Precomputed) s.edges = load_precomputed_edges(config.prior.edge_dir, name);
        const FeatureMap input = prepare_input(s, ck.model.config().input_channels, detector);
        const auto fwd = predict_padded(ck.model, input);
        const FeatureMap& p = fwd.fused_prob;
        cv::Mat prob16(p.height(), p.width(), CV_16U), mask(p.height(), p.width(), CV_8U);
        cv::Mat overlay = s.rgb.clone();
        for (int y = 0; y < p.height(); ++y)
            for (int x = 0; x < p.width(); ++x) {
                const float v = p(0, y, x);
                prob16.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(std::lround(v * 65535.0));
                const bool crack = static_cast<double>(v) >= threshold;
                mask.at<std::uint8_t>(y, x) = crack ? 255 : 0;
                if (crack) overlay.at<cv::Vec3b>(y, x) = cv::Vec3b(255, 255, 0);
            }
        write_image(fs::path(c.out) / (name + ".prob.png"), prob16);
        write_image(fs::path(c.out) / (name + ".mask.png"), mask);
        write_rgb(fs::path(c.out) / (name + ".overlay.png"), overlay);
        std::printf("%s: %d crack pixels at threshold %.2f\n", name.c_str(), cv::countNonZero(mask), threshold);
    }
    return 0;
}

int cmd_ablate(const Common& c, const std::string& suite, const std::string& variants_file) {
    const RunConfig config = config_of(c);
    std::vector<AblationVariant> variants;
    if (!variants_file.empty()) {
        std::ifstream in(variants_file);
        if (!in) throw ConfigError("cannot open variants file " + variants_file);
        nlohmann::json j;
        try {
            in >> j;
            variants = j.get<std::vector<AblationVariant>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("variants file: " + std::string(e.what()));
        }
    } else if (suite == "architecture") {
        variants = architecture_variants();
    } else if (suite == "loss") {
        variants = loss_variants();
    } else {
        throw ConfigError("--suite must be architecture or loss");
    }
    const DataSplits s = load_splits(config.data, config.train.seed);
    auto train = load_samples(s.train, config.prior);
    const auto val = load_samples(s.validation, config.prior);
    train.insert(train.end(), val.begin(), val.end());
    const auto test = load_samples(s.test.empty() ? s.train : s.test, config.prior);
    const auto rows = ablation_run(variants, config, train, test, log_line);
    for (const auto& r : rows) write_metric_files(fs::path(c.out) / r.variant, r.variant, r.report);
    write_text_file(fs::path(c.out) / "ablation.csv", ablation_csv(rows));
    const std::string tag = s.train.empty() || s.train.records[0].tag.empty() ? "data" : s.train.records[0].tag;
    write_text_file(fs::path(c.out) / "ablation_table.csv", ablation_table_csv(tag, rows));
    std::printf("%s", ablation_csv(rows).c_str());
    return 0;
}

std::map<std::string, std::string> pairs(const std::vector<std::string>& items, const char* what) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(std::string(what) + " expects name=path, got " + item);
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

int cmd_crosseval(const Common& c, const std::vector<std::string>& model_args, const std::vector<std::string>& data_args) {
    const RunConfig config = config_of(c);
    const auto models = pairs(model_args, "--model");
    const auto data = pairs(data_args, "--data");
    if (models.empty()) throw ConfigError("crosseval needs at least one --model name=checkpoint");
    std::vector<std::string> names;
    std::vector<Checkpoint> checkpoints;
    std::vector<std::vector<Sample>> tests;
    for (const auto& [name, ckpt] : models) {
        const auto it = data.find(name);
        if (it == data.end()) throw ConfigError("no --data entry for dataset " + name);
        names.push_back(name);
        checkpoints.push_back(load_checkpoint(ckpt));
        Manifest m = read_manifest_file(it->second);
        Manifest test;
        for (const auto& r : m.records)
            if (r.split == "test") test.records.push_back(r);
        tests.push_back(load_samples(test.empty() ? m : test, config.prior));
    }
    std::vector<const Model*> ptrs;
    for (const auto& ck : checkpoints) ptrs.push_back(&ck.model);
    const auto matrix = cross_evaluate(ptrs, tests, config.prior);
    const std::string csv = cross_csv(names, matrix);
    write_text_file(fs::path(c.out) / "crosseval.csv", csv);
    std::printf("%s", csv.c_str());
    return 0;
}

int cmd_synth(const Common& c, SynthConfig sc, const std::string& style) {
    sc.style = parse_synth_style(style);
    if (!c.config.empty()) sc.seed = config_of(c).train.seed;
    sc.seed = effective_seed(sc.seed);
    const Manifest m = write_synth_corpus(c.out, sc);
    const ImbalanceStats st = imbalance_stats(m);
    std::printf("wrote %zu images to %s (crack %.2f%%)\n", m.size(), c.out.c_str(), st.crack_percent);
    return 0;
}

int cmd_report(const Common& c, const std::string& run_dir) {
    if (!c.config.empty()) (void)config_of(c);
    const ReportFiles f = write_report(run_dir, c.out);
    std::printf("%s\n%s\n%s\n", f.summary.string().c_str(), f.breakdown.string().c_str(), f.plot.string().c_str());
    if (!f.ablation.empty()) std::printf("%s\n", f.ablation.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crack segmentation: training, evaluation and data tools"};
    app.require_subcommand(1);

    Common c;
    std::string checkpoint, split = "test", name = "eval", suite = "architecture", variants_file, run_dir, style = "pavement";
    std::vector<std::string> images, model_args, data_args;
    double threshold = -1.0;
    SynthConfig sc;

    auto* stats = app.add_subcommand("stats", "Crack / non-crack pixel percentages per split");
    add_common(stats, c);
    auto* edges = app.add_subcommand("edges", "Precompute <id>.edge.png maps for every sample");
    add_common(edges, c);
    auto* train = app.add_subcommand("train", "Train a model and evaluate it on the test split");
    add_common(train, c);
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with iterative thresholding");
    add_common(eval, c);
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--split", split, "train, validation, test or all");
    eval->add_option("--name", name, "Run name written into the CSV files");
    auto* predict = app.add_subcommand("predict", "Write probability, mask and overlay PNGs");
    add_common(predict, c, false);
    predict->add_option("--checkpoint", checkpoint)->required();
    predict->add_option("--threshold", threshold, "Default: the threshold stored in the checkpoint");
    predict->add_option("images", images)->required();
    auto* thresh = app.add_subcommand("threshold", "Sweep the threshold grid and report t*");
    add_common(thresh, c);
    thresh->add_option("--checkpoint", checkpoint)->required();
    thresh->add_option("--split", split, "train, validation, test or all");
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate a set of variants");
    add_common(ablate, c);
    ablate->add_option("--suite", suite, "architecture or loss");
    ablate->add_option("--variants", variants_file, "JSON list of variants (overrides --suite)");
    auto* cross = app.add_subcommand("crosseval", "F1 of every model on every dataset");
    add_common(cross, c);
    cross->add_option("--model", model_args, "dataset=checkpoint")->required();
    cross->add_option("--data", data_args, "dataset=manifest.json")->required();
    auto* synth = app.add_subcommand("synth", "Generate a synthetic crack corpus");
    add_common(synth, c, false);
    synth->add_option("--count", sc.count);
    synth->add_option("--size", sc.size);
    synth->add_option("--style", style, "pavement or concrete");
    synth->add_option("--seed", sc.seed);
    synth->add_option("--foreground", sc.foreground_rate, "Target crack-pixel fraction");
    auto* report = app.add_subcommand("report", "Summary CSV, TP/FP/FN breakdown and PR-curve plot");
    add_common(report, c, false);
    report->add_option("--run", run_dir, "Directory searched for metrics.csv / prc.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*stats) return cmd_stats(c);
        if (*edges) return cmd_edges(c);
        if (*train) return cmd_train(c);
        if (*eval) return cmd_eval(c, checkpoint, split, name);
        if (*predict) return cmd_predict(c, checkpoint, images, threshold);
        if (*thresh) return cmd_threshold(c, checkpoint, split);
        if (*ablate) return cmd_ablate(c, suite, variants_file);
        if (*cross) return cmd_crosseval(c, model_args, data_args);
        if (*synth) return cmd_synth(c, sc, style);
        if (*report) return cmd_report(c, run_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
