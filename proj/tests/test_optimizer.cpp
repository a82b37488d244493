#include <doctest.h>

#include <array>
#include <complex>
#include <random>

#include "scnet/errors.hpp"
#include "scnet/optimizer.hpp"

using namespace scnet;

namespace {

// Heavy-ball on f(x) = curvature/2 x^2 with L2 term wd: the pair (x, v)
// evolves by the matrix [[1 - lr c, -lr mu], [c, mu]] with c = curvature + wd.
// Its eigenvalues give x_k = A r1^k + B r2^k in closed form.
long double heavy_ball_closed_form(long double x0, long double lr, long double mu, long double c, int k) {
    using C = std::complex<long double>;
    const long double trace = 1 - lr * c + mu;
    const long double det = mu;  // (1 - lr c) mu + lr mu c
    const C disc = std::sqrt(C(trace * trace - 4 * det));
    const C r1 = (C(trace) + disc) / C(2);
    const C r2 = (C(trace) - disc) / C(2);
    // x_0 = x0, x_1 = x0 (1 - lr c) since v_0 = 0.
    const C x1(x0 * (1 - lr * c));
    const C b = (x1 - r1 * C(x0)) / (r2 - r1);
    const C a = C(x0) - b;
    return (a * std::pow(r1, k) + b * std::pow(r2, k)).real();
}

}  // namespace

TEST_CASE("momentum iterates match the closed-form heavy-ball recursion") {
    struct Setting {
        double curvature, lr, mu;
    };
    for (const auto& [curvature, lr, mu] : std::array<Setting, 4>{{{2.0, 0.1, 0.9}, {0.5, 0.3, 0.5},
                                                                   {10.0, 0.01, 0.99}, {1.0, 0.05, 0.0}}}) {
        const double wd = 2e-4;
        ParameterSet<double> p;
        p.add("x", {1}, 1.5);
        Sgd<double> sgd({lr, mu, wd}, p);
        ParameterSet<double> g = p.zeros_like();
        for (int k = 1; k <= 60; ++k) {
            g.values(0)[0] = curvature * p.values(0)[0];
            sgd.step(p, g);
            const long double expected = heavy_ball_closed_form(1.5L, lr, mu, curvature + wd, k);
            REQUIRE(std::abs(p.values(0)[0] - static_cast<double>(expected)) <= 1e-10);
        }
    }
}

TEST_CASE("one step with zero data gradient scales parameters by 1 - lr * wd") {
    ParameterSet<double> p;
    p.add("w", {3, 4});
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : p.values(0)) v = n(rng);
    const auto before = p.flatten();
    const SgdConfig cfg{1e-2, 0.9, 2e-4};
    Sgd<double> sgd(cfg, p);
    sgd.step(p, p.zeros_like());
    const auto after = p.flatten();
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] == doctest::Approx(before[i] * (1.0 - cfg.learning_rate * cfg.weight_decay)).epsilon(1e-15));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    ParameterSet<float> p;
    p.add("a", {5}, 0.25f);
    p.add("b", {2, 2}, -1.0f);
    const auto before = p;
    Sgd<float> sgd({0.0, 0.9, 2e-4}, p);
    ParameterSet<float> g = p.zeros_like();
    for (auto& v : g.values(1)) v = 3.0f;
    for (int i = 0; i < 10; ++i) sgd.step(p, g);
    CHECK(p == before);
}

TEST_CASE("optimizer rejects bad settings and layouts") {
    ParameterSet<float> p;
    p.add("a", {2});
    CHECK_THROWS_AS(Sgd<float>({-1.0, 0.9, 0.0}, p), ConfigError);
    CHECK_THROWS_AS(Sgd<float>({1e-3, 1.0, 0.0}, p), ConfigError);
    CHECK_THROWS_AS(Sgd<float>({1e-3, 0.9, -1.0}, p), ConfigError);
    Sgd<float> sgd({}, p);
    ParameterSet<float> other;
    other.add("a", {3});
    CHECK_THROWS_AS(sgd.step(p, other), ShapeError);
}
