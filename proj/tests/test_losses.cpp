#include <doctest.h>

#include <random>

#include "loss_oracles.hpp"
#include "scnet/losses.hpp"
#include "test_util.hpp"

using namespace scnet;

namespace {

struct Case {
    std::vector<double> logits;
    std::vector<std::uint8_t> target;
};

Case random_case(std::mt19937_64& rng, std::size_t n, double spread = 3.0) {
    Case c;
    std::uniform_real_distribution<double> d(-spread, spread);
    std::bernoulli_distribution b(0.3);
    for (std::size_t i = 0; i < n; ++i) {
        c.logits.push_back(d(rng));
        c.target.push_back(b(rng) ? 1 : 0);
    }
    return c;
}

}  // namespace

TEST_CASE("focal loss matches its definition and hand values") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        auto c = random_case(rng, 36);
        CHECK(focal_loss<double>(c.logits, c.target, 1.0, 2.0) ==
              doctest::Approx(oracle::focal(c.logits, c.target, 1.0, 2.0)).epsilon(1e-12));
        CHECK(focal_loss<double>(c.logits, c.target, 0.25, 1.5) ==
              doctest::Approx(oracle::focal(c.logits, c.target, 0.25, 1.5)).epsilon(1e-12));
    }
    // p = 0.9 on a crack pixel: 0.01 * -ln(0.9)
    const std::vector<double> logit{std::log(0.9 / 0.1)};
    const std::vector<std::uint8_t> one{1};
    CHECK(focal_loss<double>(logit, one, 1.0, 2.0) == doctest::Approx(0.01 * -std::log(0.9)).epsilon(1e-12));
    CHECK(focal_loss<double>(logit, one, 1.0, 2.0) == doctest::Approx(0.00105361).epsilon(1e-5));
}

TEST_CASE("focal loss is finite for extreme logits") {
    const std::vector<double> logits{100.0, -100.0, 100.0, -100.0};
    const std::vector<std::uint8_t> y{1, 0, 0, 1};
    std::vector<double> g(4);
    const double v = focal_loss<double>(logits, y, 1.0, 2.0, g);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(200.0));
    for (double x : g) CHECK(std::isfinite(x));
}

TEST_CASE("focal loss with gamma 0 and alpha 1 is cross-entropy") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        auto c = random_case(rng, 64);
        CHECK(std::abs(focal_loss<double>(c.logits, c.target, 1.0, 0.0) - bce_loss<double>(c.logits, c.target)) < 1e-6);
    }
}

TEST_CASE("focal loss decreases monotonically toward a confident correct prediction") {
    const std::vector<std::uint8_t> y{1};
    double prev = 1e300;
    for (double m = -5; m <= 30; m += 0.5) {
        const std::vector<double> logit{m};
        const double v = focal_loss<double>(logit, y, 1.0, 2.0);
        CHECK(v >= 0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-30);
}

TEST_CASE("soft IoU hand values and bounds") {
    const std::vector<double> p{0.5, 0.5};
    const std::vector<std::uint8_t> y{1, 0};
    CHECK(soft_iou_loss_from_probabilities(p, y) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    const std::vector<double> exact{1.0, 0.0, 1.0};
    const std::vector<std::uint8_t> ye{1, 0, 1};
    CHECK(soft_iou_loss_from_probabilities(exact, ye) < 1e-7);
    const std::vector<std::uint8_t> empty{0, 0};
    CHECK(soft_iou_loss_from_probabilities(p, empty) == 1.0);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        auto c = random_case(rng, 36);
        std::vector<double> prob;
        for (double l : c.logits) prob.push_back(static_cast<double>(oracle::sigmoid(l)));
        const double v = soft_iou_loss<double>(c.logits, c.target);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(oracle::soft_iou(prob, c.target)).epsilon(1e-12));
        CHECK(soft_iou_loss_from_probabilities(prob, c.target) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("lowering a background probability never raises the IoU numerator") {
    std::vector<double> p{0.3, 0.8, 0.6};
    const std::vector<std::uint8_t> y{1, 0, 1};
    auto numerator = [&] { return p[0] * y[0] + p[1] * y[1] + p[2] * y[2]; };
    const double before = numerator();
    p[1] = 0.1;
    CHECK(numerator() <= before);
}

TEST_CASE("lovasz hinge matches the set-function definition") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        auto c = random_case(rng, 36);
        CHECK(lovasz_hinge_loss<double>(c.logits, c.target) ==
              doctest::Approx(oracle::lovasz_hinge(c.logits, c.target)).epsilon(1e-12));
    }
    for (double m : {-2.0, 0.0, 0.5, 1.0, 3.0}) {
        const std::vector<double> logit{m};
        const std::vector<std::uint8_t> y{1};
        CHECK(lovasz_hinge_loss<double>(logit, y) == doctest::Approx(std::max(0.0, 1 - m)));
    }
    const std::vector<double> separated{20.0, -20.0, 15.0};
    const std::vector<std::uint8_t> ys{1, 0, 1};
    CHECK(lovasz_hinge_loss<double>(separated, ys) == 0.0);
}

TEST_CASE("lovasz hinge is invariant to pixel order") {
    std::mt19937_64 rng(5);
    auto c = random_case(rng, 36);
    const double before = lovasz_hinge_loss<double>(c.logits, c.target);
    std::vector<std::size_t> perm(36);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Case shuffled;
    for (auto i : perm) {
        shuffled.logits.push_back(c.logits[i]);
        shuffled.target.push_back(c.target[i]);
    }
    CHECK(lovasz_hinge_loss<double>(shuffled.logits, shuffled.target) == doctest::Approx(before).epsilon(1e-14));
}

TEST_CASE("weighted cross-entropy") {
    std::mt19937_64 rng(6);
    auto c = random_case(rng, 36);
    CHECK(weighted_bce_loss<double>(c.logits, c.target, {1, 1}) == doctest::Approx(oracle::bce(c.logits, c.target)).epsilon(1e-12));
    CHECK(weighted_bce_loss<double>(c.logits, c.target, {3, 0.5}) ==
          doctest::Approx(oracle::bce(c.logits, c.target, 3, 0.5)).epsilon(1e-12));
    CHECK(weighted_bce_loss<double>(c.logits, c.target, {2, 2}) ==
          doctest::Approx(2 * weighted_bce_loss<double>(c.logits, c.target, {1, 1})).epsilon(1e-14));
    CHECK_THROWS_AS(weighted_bce_loss<double>(c.logits, c.target, {0, 1}), ConfigError);

    const ClassWeights w = median_frequency_weights(4.68, 95.31);
    const double median = (4.68 + 95.31) / 2;
    CHECK(w.foreground == doctest::Approx(median / 4.68));
    CHECK(w.background == doctest::Approx(median / 95.31));
    CHECK_THROWS_AS(median_frequency_weights(0.0, 100.0), DataError);
}

TEST_CASE("losses reject mismatched or non-binary inputs") {
    const std::vector<double> logits{0.1, 0.2};
    const std::vector<std::uint8_t> short_y{1};
    const std::vector<std::uint8_t> bad_y{1, 2};
    CHECK_THROWS_AS(focal_loss<double>(logits, short_y, 1, 2), ShapeError);
    CHECK_THROWS_AS(focal_loss<double>(logits, bad_y, 1, 2), DataError);
    CHECK_THROWS_AS(soft_iou_loss<double>(logits, short_y), ShapeError);
    CHECK_THROWS_AS(lovasz_hinge_loss<double>(logits, short_y), ShapeError);
    CHECK_THROWS_AS(weighted_bce_loss<double>(logits, short_y, {}), ShapeError);
}

TEST_CASE("analytic loss gradients match central differences") {
    std::mt19937_64 rng(7);
    using Fn = std::function<double(const std::vector<double>&, const std::vector<std::uint8_t>&, std::span<double>)>;
    const std::vector<std::pair<const char*, Fn>> losses{
        {"focal", [](auto& l, auto& y, std::span<double> g) { return focal_loss<double>(l, y, 1.0, 2.0, g); }},
        {"soft-iou", [](auto& l, auto& y, std::span<double> g) { return soft_iou_loss<double>(l, y, g); }},
        {"lovasz", [](auto& l, auto& y, std::span<double> g) { return lovasz_hinge_loss<double>(l, y, g); }},
        {"weighted-bce", [](auto& l, auto& y, std::span<double> g) { return weighted_bce_loss<double>(l, y, {10.2, 0.52}, g); }}};
    for (const auto& [name, fn] : losses) {
        double worst = 0;
        for (int t = 0; t < 20; ++t) {
            auto c = random_case(rng, 36);
            std::vector<double> g(36);
            fn(c.logits, c.target, g);
            for (std::size_t i = 0; i < 36; ++i) {
                auto f = [&] { return fn(c.logits, c.target, {}); };
                const double fd = testutil::central_difference(f, c.logits[i], 1e-5);
                worst = std::max(worst, testutil::relative_error(fd, g[i], 1e-6));
            }
        }
        INFO(name);
        CHECK(worst < 1e-4);
    }
}

namespace {

ForwardOutput<double> random_output(std::mt19937_64& rng, int size) {
    ForwardOutput<double> out;
    for (int i = 0; i < 5; ++i) out.side_logits.push_back(testutil::random_tensor<double>({1, size, size}, rng, -3, 3));
    out.fused_logits = testutil::random_tensor<double>({1, size, size}, rng, -3, 3);
    return out;
}

Mask random_mask(std::mt19937_64& rng, int size) {
    Mask m(1, size, size);
    std::bernoulli_distribution b(0.2);
    for (auto& v : m.values()) v = b(rng);
    return m;
}

std::vector<double> as_vector(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }
std::vector<std::uint8_t> as_vector(const Mask& m) { return {m.values().begin(), m.values().end()}; }

}  // namespace

TEST_CASE("deep-supervised focal total is linear in the scale weights") {
    std::mt19937_64 rng(8);
    auto out = random_output(rng, 8);
    auto y = random_mask(rng, 8);
    LossConfig c;
    const double fused = oracle::focal(as_vector(out.fused_logits), as_vector(y), 1, 2);
    c.scale_weights = {0, 0, 0, 0, 0};
    CHECK(total_focal(out, y, c) == doctest::Approx(fused).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) {
        c.scale_weights = {0, 0, 0, 0, 0};
        c.scale_weights[i] = 1.0;
        const double unit = total_focal(out, y, c) - fused;
        c.scale_weights[i] = 2.5;
        CHECK(total_focal(out, y, c) - fused == doctest::Approx(2.5 * unit).epsilon(1e-10));
        CHECK(unit == doctest::Approx(oracle::focal(as_vector(out.side_logits[i]), as_vector(y), 1, 2)).epsilon(1e-12));
    }

    // Identical side losses L with the default weights add 3.5 L.
    for (auto& s : out.side_logits) s = out.side_logits[0];
    c.scale_weights = {0.5, 0.75, 1.0, 0.75, 0.5};
    const double side = oracle::focal(as_vector(out.side_logits[0]), as_vector(y), 1, 2);
    CHECK(total_focal(out, y, c) == doctest::Approx(fused + 3.5 * side).epsilon(1e-12));
    CHECK(total_focal(out, y, c) >= fused);

    c.scale_weights = {1, 1, 1};
    CHECK_THROWS_AS(total_focal(out, y, c), ConfigError);
}

TEST_CASE("total loss equals the recomputed component sum for every combo") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        auto out = random_output(rng, 8);
        auto y = random_mask(rng, 8);
        const auto yv = as_vector(y);
        std::vector<double> fused_prob;
        for (double l : out.fused_logits.values()) fused_prob.push_back(static_cast<double>(oracle::sigmoid(l)));
        const std::vector<double> w{0.5, 0.75, 1.0, 0.75, 0.5};
        double focal_total = oracle::focal(as_vector(out.fused_logits), yv, 1, 2);
        double ce_total = oracle::bce(as_vector(out.fused_logits), yv, 4, 0.6);
        for (int i = 0; i < 5; ++i) {
            focal_total += w[i] * oracle::focal(as_vector(out.side_logits[i]), yv, 1, 2);
            ce_total += w[i] * oracle::bce(as_vector(out.side_logits[i]), yv, 4, 0.6);
        }
        const double iou = oracle::soft_iou(fused_prob, yv);
        const double lovasz = oracle::lovasz_hinge(as_vector(out.fused_logits), yv);

        LossConfig c;
        c.class_weights = {4, 0.6};
        c.soft_iou_weight = 0.7;
        c.combo = LossCombo::FocalSoftIou;
        CHECK(std::abs(total_loss(out, y, c).total - (focal_total + 0.7 * iou)) < 1e-9);
        c.combo = LossCombo::FocalOnly;
        CHECK(std::abs(total_loss(out, y, c).total - focal_total) < 1e-9);
        c.combo = LossCombo::CrossEntropyOnly;
        CHECK(std::abs(total_loss(out, y, c).total - ce_total) < 1e-9);
        c.combo = LossCombo::CrossEntropySoftIou;
        CHECK(std::abs(total_loss(out, y, c).total - (ce_total + 0.7 * iou)) < 1e-9);
        c.combo = LossCombo::FocalLovasz;
        CHECK(std::abs(total_loss(out, y, c).total - (focal_total + 0.7 * lovasz)) < 1e-9);

        c.combo = LossCombo::FocalSoftIou;
        c.soft_iou_weight = 0.0;
        const auto b = total_loss(out, y, c);
        CHECK(b.total == doctest::Approx(focal_total).epsilon(1e-12));
        c.soft_iou_weight = 1.0;
        const auto full = total_loss(out, y, c);
        CHECK(full.total >= std::max(full.pixel, full.region));
    }
}

TEST_CASE("total loss gradients match central differences") {
    std::mt19937_64 rng(10);
    auto out = random_output(rng, 6);
    auto y = random_mask(rng, 6);
    for (auto combo : {LossCombo::FocalSoftIou, LossCombo::CrossEntropySoftIou, LossCombo::FocalLovasz}) {
        LossConfig c;
        c.combo = combo;
        c.class_weights = {3, 0.5};
        for (bool mean : {false, true}) {
            c.mean_reduction = mean;
            OutputGradients<double> g;
            total_loss(out, y, c, &g);
            auto f = [&] { return total_loss(out, y, c).total; };
            double worst = 0;
            for (std::size_t i = 0; i < out.fused_logits.size(); ++i) {
                worst = std::max(worst, testutil::relative_error(
                                            testutil::central_difference(f, out.fused_logits.values()[i], 1e-5),
                                            g.fused_logits.values()[i], 1e-6));
                for (int s = 0; s < 5; ++s)
                    worst = std::max(worst, testutil::relative_error(
                                                testutil::central_difference(f, out.side_logits[s].values()[i], 1e-5),
                                                g.side_logits[s].values()[i], 1e-6));
            }
            INFO(to_string(combo) << " mean=" << mean);
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("loss config parsing and validation") {
    LossConfig c;
    CHECK_NOTHROW(c.validate(5));
    CHECK_THROWS_AS(c.validate(4), ConfigError);
    c.alpha = 0;
    CHECK_THROWS_AS(c.validate(5), ConfigError);
    c = LossConfig{};
    c.scale_weights[2] = -1;
    CHECK_THROWS_AS(c.validate(5), ConfigError);

    LossConfig d;
    d.combo = LossCombo::FocalLovasz;
    d.class_weights = {2, 0.5};
    const nlohmann::json j = d;
    CHECK(j.get<LossConfig>() == d);
    CHECK_THROWS_AS(parse_loss_combo("dice"), ConfigError);
    nlohmann::json bad = j;
    bad["beta"] = 1;
    CHECK_THROWS_AS(bad.get<LossConfig>(), ConfigError);
    for (auto combo : {LossCombo::FocalSoftIou, LossCombo::CrossEntropyOnly, LossCombo::CrossEntropySoftIou,
                       LossCombo::FocalLovasz, LossCombo::FocalOnly})
        CHECK(parse_loss_combo(to_string(combo)) == combo);
}
