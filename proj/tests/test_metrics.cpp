#include <doctest.h>

#include <random>

#include "metric_oracles.hpp"
#include "scnet/metrics.hpp"

using namespace scnet;

namespace {

struct RandomCase {
    std::vector<EvalImage> images;
    std::vector<oracle::Image> plain;
};

RandomCase random_case(std::mt19937_64& rng, int count, int h, int w) {
    RandomCase c;
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::bernoulli_distribution quantize(0.3);
    const double rate = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    std::bernoulli_distribution crack(rate);
    for (int k = 0; k < count; ++k) {
        EvalImage im{FeatureMap(1, h, w), Mask(1, h, w)};
        oracle::Image o{h, w, {}, {}};
        for (int i = 0; i < h * w; ++i) {
            const std::uint8_t g = crack(rng);
            // Correlate P with the ground truth so curves are non-trivial; some
            // values sit exactly on grid points.
            float p = std::clamp(u(rng) * 0.7f + (g ? 0.3f : 0.0f), 0.0f, 1.0f);
            if (quantize(rng)) p = static_cast<float>(std::round(p * 100) / 100);
            im.prob.values()[i] = p;
            im.gt.values()[i] = g;
            o.prob.push_back(p);
            o.gt.push_back(g);
        }
        c.images.push_back(std::move(im));
        c.plain.push_back(std::move(o));
    }
    return c;
}

}  // namespace

TEST_CASE("confusion counts on hand examples") {
    const std::vector<std::uint8_t> pred{1, 0, 0, 0};
    const std::vector<std::uint8_t> gt{1, 1, 0, 0};
    CHECK(confusion_counts(pred, gt) == ConfusionCounts{1, 0, 1, 2});
    const auto same = confusion_counts(gt, gt);
    CHECK(same.fp == 0);
    CHECK(same.fn == 0);
    const std::vector<std::uint8_t> inv{0, 0, 1, 1};
    const auto opposite = confusion_counts(inv, gt);
    CHECK(opposite.tp == 0);
    CHECK(opposite.tn == 0);
    const std::vector<std::uint8_t> bad{0, 2, 0, 0};
    CHECK_THROWS_AS(confusion_counts(bad, gt), DataError);
}

TEST_CASE("pixel scores on hand examples") {
    const PixelScores s = pixel_scores({1, 0, 1, 2});
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 0.5);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.iou == 0.5);
    const PixelScores zero = pixel_scores({});
    CHECK(zero.precision == 0.0);
    CHECK(zero.recall == 0.0);
    CHECK(zero.f1 == 0.0);
    CHECK(zero.iou == 0.0);
    const PixelScores perfect = pixel_scores({5, 0, 0, 9});
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.iou == 1.0);
}

TEST_CASE("threshold grid and curve endpoints") {
    const auto grid = default_threshold_grid();
    REQUIRE(grid.size() == 99);
    CHECK(grid.front() == 0.01);
    CHECK(grid.back() == 0.99);

    EvalImage im{FeatureMap(1, 1, 4), Mask(1, 1, 4)};
    const float p[4] = {0.3f, 0.4f, 0.6f, 0.7f};
    const std::uint8_t g[4] = {0, 0, 1, 1};
    for (int i = 0; i < 4; ++i) {
        im.prob.values()[i] = p[i];
        im.gt.values()[i] = g[i];
    }
    const std::vector<EvalImage> ims{im};
    const std::vector<double> low_high{0.1, 0.5, 0.9};
    const auto curve = pr_curve(ims, low_high);
    CHECK(curve[0].recall == 1.0);
    CHECK(curve[0].precision == 0.5);  // foreground rate
    CHECK(curve[1].recall == 1.0);
    CHECK(curve[1].precision == 1.0);
    CHECK(curve[2].recall == 0.0);
    CHECK(curve[2].precision == 0.0);

    const std::vector<double> empty;
    CHECK_THROWS_AS(pr_curve(ims, empty), ConfigError);
    const std::vector<double> unordered{0.5, 0.2};
    CHECK_THROWS_AS(pr_curve(ims, unordered), ConfigError);
    const std::vector<double> outside{0.0, 0.5};
    CHECK_THROWS_AS(pr_curve(ims, outside), ConfigError);
}

TEST_CASE("auprc on hand examples") {
    const std::vector<PrPoint> diagonal{{0.1, 0.0, 1.0}, {0.9, 1.0, 0.0}};
    CHECK(auprc(diagonal) == doctest::Approx(0.5));
    const std::vector<PrPoint> flat{{0.2, 0.25, 0.4}, {0.5, 0.75, 0.4}, {0.7, 1.0, 0.4}};
    CHECK(auprc(flat) == doctest::Approx(0.4));
    const std::vector<PrPoint> perfect{{0.2, 1.0, 1.0}, {0.5, 0.5, 1.0}};
    CHECK(auprc(perfect) == doctest::Approx(1.0));
    const std::vector<PrPoint> one{{0.5, 0.5, 0.5}};
    CHECK_THROWS_AS(auprc(one), DataError);
}

TEST_CASE("iterative threshold hand example breaks ties toward the smallest threshold") {
    EvalImage im{FeatureMap(1, 1, 3), Mask(1, 1, 3)};
    im.prob(0, 0, 0) = 0.2f;
    im.prob(0, 0, 1) = 0.6f;
    im.prob(0, 0, 2) = 0.8f;
    im.gt(0, 0, 1) = 1;
    im.gt(0, 0, 2) = 1;
    const std::vector<EvalImage> ims{im};
    const auto grid = default_threshold_grid();
    const auto best = iterative_threshold(ims, grid);
    CHECK(best.threshold == 0.21);
    CHECK(best.f1 == 1.0);

    EvalImage empty{FeatureMap(1, 2, 2, 0.7f), Mask(1, 2, 2)};
    const std::vector<EvalImage> none{empty};
    CHECK(iterative_threshold(none, grid).f1 == 0.0);
}

TEST_CASE("region rules at the 5% and 50% boundaries") {
    Mask gt(1, 32, 32);
    Mask pred(1, 32, 32);
    for (int i = 0; i < 52; ++i) gt.values()[i] = 1;
    // 52 / 1024 = 5.08% -> crack patch; detect exactly half of it (inclusive).
    for (int i = 0; i < 26; ++i) pred.values()[i] = 1;
    CHECK(region_counts(pred, gt) == RegionCounts{1, 0, 0, 0});
    pred.values()[25] = 0;
    CHECK(region_counts(pred, gt) == RegionCounts{0, 0, 1, 0});

    gt.values()[51] = 0;  // 51 / 1024 = 4.98% -> not a crack patch
    CHECK(region_counts(Mask(1, 32, 32), gt) == RegionCounts{0, 0, 0, 1});

    // A crack-free patch counts as predicted crack at 5% predicted pixels.
    Mask clean(1, 20, 20);
    Mask noisy(1, 20, 20);
    for (int i = 0; i < 20; ++i) noisy.values()[i] = 1;  // 20 / 400 = 5%
    const RegionRules rules{20, 0.05, 0.5};
    CHECK(region_counts(noisy, clean, rules) == RegionCounts{0, 1, 0, 0});
    noisy.values()[0] = 0;
    CHECK(region_counts(noisy, clean, rules) == RegionCounts{0, 0, 0, 1});

    gt.values()[51] = 1;
    CHECK(region_scores(region_counts(gt, gt)).f1 == 1.0);
    CHECK_THROWS_AS(region_counts(Mask(1, 16, 16), Mask(1, 16, 16)), DataError);
}

TEST_CASE("border patches use their actual pixel count") {
    // 40 wide: one full 32-column patch and one 8-column patch of 256 pixels.
    Mask gt(1, 32, 40);
    for (int y = 0; y < 13; ++y) gt(0, y, 35) = 1;  // 13 / 256 = 5.08%
    const auto c = region_counts(gt, gt);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
}

TEST_CASE("metrics match the brute-force oracle on random cases") {
    std::mt19937_64 rng(2024);
    const auto grid = default_threshold_grid();
    const RegionRules rules{5, 0.05, 0.5};
    for (int trial = 0; trial < 200; ++trial) {
        const int count = 1 + trial % 3;
        auto rc = random_case(rng, count, 16, 16);
        const auto counts = counts_per_threshold(rc.images, grid);
        const auto curve = pr_curve(rc.images, grid);
        std::vector<std::pair<double, double>> oracle_curve;
        double best_f1 = -1;
        double best_t = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto o = oracle::count_at(rc.plain, grid[i]);
            REQUIRE(counts[i].tp == static_cast<std::uint64_t>(o.tp));
            REQUIRE(counts[i].fp == static_cast<std::uint64_t>(o.fp));
            REQUIRE(counts[i].fn == static_cast<std::uint64_t>(o.fn));
            REQUIRE(counts[i].tn == static_cast<std::uint64_t>(o.tn));
            const auto s = pixel_scores(counts[i]);
            CHECK(std::abs(s.f1 - oracle::f1(o)) <= 1e-12);
            CHECK(std::abs(s.iou - oracle::iou(o)) <= 1e-12);
            CHECK(std::abs(curve[i].precision - oracle::precision(o)) <= 1e-12);
            CHECK(std::abs(curve[i].recall - oracle::recall(o)) <= 1e-12);
            oracle_curve.emplace_back(oracle::recall(o), oracle::precision(o));
            if (oracle::f1(o) > best_f1) {
                best_f1 = oracle::f1(o);
                best_t = grid[i];
            }
            if (i % 10 == 0) {
                RegionCounts region;
                for (const auto& im : rc.images) region += region_counts(binarize(im.prob, grid[i]), im.gt, rules);
                const auto ro = oracle::region_at(rc.plain, grid[i], rules.patch);
                REQUIRE(region == RegionCounts{static_cast<std::uint64_t>(ro.tp), static_cast<std::uint64_t>(ro.fp),
                                               static_cast<std::uint64_t>(ro.fn), static_cast<std::uint64_t>(ro.tn)});
                const double rp = oracle::safe_div(ro.tp, ro.tp + ro.fp);
                const double rr = oracle::safe_div(ro.tp, ro.tp + ro.fn);
                const double rf = rp + rr == 0 ? 0 : 2 * rp * rr / (rp + rr);
                CHECK(std::abs(region_scores(region).f1 - rf) <= 1e-12);
            }
        }
        CHECK(std::abs(auprc(curve) - oracle::auprc(oracle_curve)) <= 1e-12);
        const auto choice = iterative_threshold(rc.images, grid);
        CHECK(choice.threshold == best_t);
        CHECK(std::abs(choice.f1 - best_f1) <= 1e-12);
    }
}

TEST_CASE("predicted-positive count is non-increasing in the threshold") {
    std::mt19937_64 rng(5);
    auto rc = random_case(rng, 2, 16, 16);
    const auto counts = counts_per_threshold(rc.images, default_threshold_grid());
    for (std::size_t i = 1; i < counts.size(); ++i)
        CHECK(counts[i].tp + counts[i].fp <= counts[i - 1].tp + counts[i - 1].fp);
}

TEST_CASE("evaluate fills a report at the chosen threshold") {
    std::mt19937_64 rng(6);
    auto rc = random_case(rng, 2, 40, 40);
    const auto r = evaluate_predictions(rc.images);
    const auto grid = default_threshold_grid();
    CHECK(r.threshold == iterative_threshold(rc.images, grid).threshold);
    CHECK(r.pixel.f1 == doctest::Approx(iterative_threshold(rc.images, grid).f1));
    CHECK(r.curve.size() == 99);
    CHECK(r.auprc >= 0.0);
    CHECK(r.auprc <= 1.0);
    const auto again = evaluate_predictions(rc.images);
    CHECK(metrics_csv_row("a", r) == metrics_csv_row("a", again));
}

TEST_CASE("error breakdown shares") {
    MetricReport a;
    a.counts = {30, 10, 5, 100};
    auto one = error_breakdown({{"a", a}});
    CHECK(one[0].tp_share == 100.0);
    auto two = error_breakdown({{"a", a}, {"b", a}});
    CHECK(two[0].tp_share == 50.0);
    CHECK(two[1].fn_share == 50.0);
    MetricReport b;
    b.counts = {7, 3, 11, 0};
    auto three = error_breakdown({{"a", a}, {"b", b}, {"c", a}});
    double tp = 0, fp = 0, fn = 0;
    for (const auto& r : three) {
        tp += r.tp_share;
        fp += r.fp_share;
        fn += r.fn_share;
    }
    CHECK(tp == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(fp == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(fn == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(breakdown_csv(three).rfind("model,tp_share,fp_share,fn_share\n", 0) == 0);
    CHECK_THROWS_AS(error_breakdown({}), DataError);
}
