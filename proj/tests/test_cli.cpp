#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "scnet/checkpoint.hpp"
#include "scnet/image_io.hpp"
#include "scnet/init.hpp"
#include "scnet/synth.hpp"
#include "temp_dir.hpp"

using namespace scnet;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SCNET_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("exit codes for bad arguments, bad configs and missing data") {
    testutil::TempDir dir("cli-codes");
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("synth --count notanumber") == 2);
    std::ofstream(dir / "bad.json") << R"({"train": {"learnin_rate": 1}})";
    CHECK(run("stats --config " + q(dir / "bad.json")) == 2);
    REQUIRE(run("synth --count 2 --size 32 --out " + q(dir / "data")) == 0);
    std::ofstream(dir / "ok.json") << R"({"data": {"manifest": "data/manifest.json"}})";
    CHECK(run("eval --config " + q(dir / "ok.json") + " --checkpoint " + q(dir / "missing.ckpt") + " --out " +
              q(dir / "o")) == 3);
    CHECK(run("predict --checkpoint " + q(dir / "missing.ckpt") + " " + q(dir / "none.png")) == 3);
    std::ofstream(dir / "nodata.json") << R"({"data": {"manifest": "nowhere/manifest.json"}})";
    CHECK(run("stats --config " + q(dir / "nodata.json")) == 3);
}

TEST_CASE("synth output is byte-identical across invocations") {
    testutil::TempDir a("cli-synth-a"), b("cli-synth-b");
    for (const auto* d : {&a, &b})
        REQUIRE(run("synth --count 3 --size 64 --seed 8 --out " + q(d->path())) == 0);
    for (const char* f : {"manifest.json", "images/pavement-0001.png", "masks/pavement-0002.png"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(bytes_of(a / f) == bytes_of(b / f));
    }
    CHECK(run("synth --style marble --out " + q(a / "x")) == 2);
}

TEST_CASE("predict keeps the input size and writes binary masks and yellow overlays") {
    testutil::TempDir dir("cli-predict");
    SynthConfig sc;
    sc.size = 50;
    Sample s = synth_sample(sc, 0);
    cv::Mat rgb = s.rgb(cv::Rect(0, 0, 50, 37)).clone();
    write_rgb(dir / "odd.png", rgb);

    Model m(ModelConfig::desk(2));
    init_weights(m, "glorot", 3);
    save_checkpoint(dir / "m.ckpt", m, {{"threshold", 0.5}});
    REQUIRE(run("predict --checkpoint " + q(dir / "m.ckpt") + " --threshold 0.3 --out " + q(dir / "pred") + " " +
                q(dir / "odd.png")) == 0);

    const cv::Mat prob = cv::imread((dir / "pred" / "odd.prob.png").string(), cv::IMREAD_UNCHANGED);
    const cv::Mat mask = cv::imread((dir / "pred" / "odd.mask.png").string(), cv::IMREAD_UNCHANGED);
    const cv::Mat overlay = read_rgb(dir / "pred" / "odd.overlay.png");
    for (const cv::Mat* img : {&prob, &mask, &overlay}) {
        REQUIRE_FALSE(img->empty());
        CHECK(img->rows == 37);
        CHECK(img->cols == 50);
    }
    CHECK(prob.depth() == CV_16U);
    CHECK(cv::countNonZero((mask != 0) & (mask != 255)) == 0);
    int marked = 0;
    for (int y = 0; y < 37; ++y)
        for (int x = 0; x < 50; ++x) {
            const bool crack = mask.at<std::uint8_t>(y, x) == 255;
            const double p = prob.at<std::uint16_t>(y, x) / 65535.0;
            if (std::abs(p - 0.3) > 1e-4) CHECK(crack == (p >= 0.3));
            if (crack) {
                ++marked;
                CHECK(overlay.at<cv::Vec3b>(y, x) == cv::Vec3b(255, 255, 0));
            } else {
                CHECK(overlay.at<cv::Vec3b>(y, x) == rgb.at<cv::Vec3b>(y, x));
            }
        }
    MESSAGE("marked pixels: " << marked);
    CHECK(run("predict --checkpoint " + q(dir / "m.ckpt") + " --threshold 1.5 " + q(dir / "odd.png")) == 2);
}

TEST_CASE("train, eval and report on a tiny synthetic corpus") {
    testutil::TempDir dir("cli-train");
    REQUIRE(run("synth --count 4 --size 32 --seed 2 --out " + q(dir / "data")) == 0);
    std::ofstream(dir / "run.json") << R"({
  "model": {"preset": "desk", "desk_width": 2},
  "train": {"epochs": 1, "batch_size": 2, "learning_rate": 1e-6},
  "data": {"manifest": "data/manifest.json", "holdout": 0.5, "validation": 0.0, "augment": {"enabled": false}}
})";
    REQUIRE(run("train --config " + q(dir / "run.json") + " --out " + q(dir / "runs" / "tiny")) == 0);
    CHECK(fs::exists(dir / "runs" / "tiny" / "final.ckpt"));
    CHECK(run("eval --config " + q(dir / "run.json") + " --checkpoint " + q(dir / "runs" / "tiny" / "final.ckpt") +
              " --split all --name again --out " + q(dir / "runs" / "again")) == 0);
    CHECK(fs::exists(dir / "runs" / "again" / "metrics.csv"));
    CHECK(run("report --run " + q(dir / "runs") + " --out " + q(dir / "report")) == 0);
    CHECK(fs::exists(dir / "report" / "pr_curves.png"));
    CHECK(run("stats --config " + q(dir / "run.json") + " --out " + q(dir / "stats")) == 0);
    CHECK(fs::exists(dir / "stats" / "stats.json"));
}
