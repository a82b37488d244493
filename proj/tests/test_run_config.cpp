#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "scnet/errors.hpp"
#include "scnet/run_config.hpp"
#include "temp_dir.hpp"

using namespace scnet;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

struct SeedEnv {
    explicit SeedEnv(const char* value) {
        if (value) ::setenv("SCNET_SEED", value, 1);
        else ::unsetenv("SCNET_SEED");
    }
    ~SeedEnv() { ::unsetenv("SCNET_SEED"); }
};

}  // namespace

TEST_CASE("defaults follow the published training setup") {
    const RunConfig c = run_config_from_json(nlohmann::json::object());
    CHECK(c.train.sgd.learning_rate == 1e-4);
    CHECK(c.train.sgd.momentum == 0.9);
    CHECK(c.train.sgd.weight_decay == 2e-4);
    CHECK(c.train.batch_size == 4);
    CHECK(c.train.patience == 10);
    CHECK(c.data.holdout == 0.2);
    CHECK(c.data.augment.crop == 256);
    CHECK(c.data.augment.max_rotation == 90.0);
    CHECK(c.prior.threshold == 0.5);
    CHECK(c.model == ModelConfig::full());
}

TEST_CASE("unknown keys are rejected in every section") {
    for (const char* doc : {R"({"extra": {}})", R"({"model": {"depth": 3}})", R"({"loss": {"beta": 1}})",
                            R"({"train": {"lr": 1}})", R"({"data": {"path": "x"}})",
                            R"({"data": {"augment": {"zoom": 2}}})", R"({"data": {"layout": {"imgs": "a"}}})",
                            R"({"prior": {"sigma": 2}})"}) {
        CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(doc)), ConfigError);
    }
}

TEST_CASE("invalid values are rejected") {
    for (const char* doc :
         {R"({"train": {"learning_rate": -1}})", R"({"train": {"batch_size": 0}})", R"({"train": {"device": "gpu"}})",
          R"({"train": {"init": "pretrained-encoder"}})", R"({"data": {"holdout": 1.5}})",
          R"({"train": {"momentum": "high"}})", R"({"model": {"preset": "huge"}})",
          R"({"data": {"manifest": "a", "root": "b"}})"}) {
        CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(doc)), ConfigError);
    }
}

TEST_CASE("model presets") {
    const auto desk = run_config_from_json(nlohmann::json::parse(R"({"model": {"preset": "desk", "desk_width": 4}})"));
    CHECK(desk.model == ModelConfig::desk(4));
    const auto four = run_config_from_json(nlohmann::json::parse(R"({"model": {"preset": "four_level"}})"));
    CHECK(four.model.num_scales == 4);
    CHECK(four.loss.scale_weights == std::vector<double>{0.5, 0.75, 1.0, 0.75});
    const auto tweaked =
        run_config_from_json(nlohmann::json::parse(R"({"model": {"preset": "baseline", "input_channels": 4}})"));
    CHECK(tweaked.model.input_channels == 4);
    CHECK_FALSE(tweaked.model.attention_in_encoder);
}

TEST_CASE("dotted overrides") {
    nlohmann::json doc = nlohmann::json::parse(R"({"train": {"epochs": 3}})");
    apply_override(doc, "train.epochs=7");
    apply_override(doc, "train.init=glorot");
    apply_override(doc, "data.augment.crop=64");
    CHECK(doc["train"]["epochs"] == 7);
    CHECK(doc["train"]["init"] == "glorot");
    CHECK(doc["data"]["augment"]["crop"] == 64);
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "train..epochs=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "train.epochs.x=1"), ConfigError);
}

TEST_CASE("config files, relative paths and the seed environment override") {
    testutil::TempDir dir("cfg");
    write(dir / "run.json", R"({"train": {"seed": 5}, "data": {"manifest": "data/manifest.json"}})");
    {
        SeedEnv env(nullptr);
        const RunConfig c = load_run_config(dir / "run.json");
        CHECK(c.train.seed == 5);
        CHECK(c.data.manifest == (dir / "data/manifest.json").string());
    }
    {
        SeedEnv env("77");
        CHECK(load_run_config(dir / "run.json").train.seed == 77);
        CHECK(load_run_config(dir / "run.json", {"train.seed=9"}).train.seed == 77);
    }
    {
        SeedEnv env("x1");
        CHECK_THROWS_AS(load_run_config(dir / "run.json"), ConfigError);
    }
    CHECK(load_run_config(dir / "run.json", {"train.seed=9"}).train.seed == 9);
    CHECK_THROWS_AS(load_run_config(dir / "run.json", {"train.sed=9"}), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);
    write(dir / "broken.json", "{");
    CHECK_THROWS_AS(load_run_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("run config JSON round trip") {
    RunConfig c = run_config_from_json(nlohmann::json::parse(R"({"model": {"preset": "desk"}})"));
    c.train.max_iterations = 12;
    c.loss.combo = LossCombo::FocalLovasz;
    c.prior.mode = EdgeMode::Classical;
    const RunConfig back = run_config_from_json(run_config_to_json(c));
    CHECK(back.model == c.model);
    CHECK(back.loss == c.loss);
    CHECK(back.train.max_iterations == 12);
    CHECK(back.data.augment == c.data.augment);
    CHECK(back.prior == c.prior);
}
