#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mllp/gates.hpp"
#include "oracles.hpp"

using namespace mllp;

namespace {

GateParams make_params(std::vector<double> log_alpha, std::vector<int> sizes = {}) {
    GateParams p;
    p.log_alpha = std::move(log_alpha);
    if (sizes.empty()) sizes.assign(p.log_alpha.size(), 1);
    p.group_sizes = std::move(sizes);
    return p;
}

// Closed-form P(z > 0) and P(z = 1) for the stretched, rectified
// concrete distribution, derived from its CDF. Test-side oracle.
double prob_active(const GateParams& p, double log_alpha) {
    return sigmoid(log_alpha - p.beta * std::log(-p.gamma / p.zeta));
}
double prob_exactly_one(const GateParams& p, double log_alpha) {
    return sigmoid(log_alpha - p.beta * std::log((1.0 - p.gamma) / (p.zeta - 1.0)));
}

} // namespace

TEST_CASE("sampling statistics match the closed-form CDF") {
    const int n_samples = 100000;
    for (double la : {-2.0, 0.0, 2.0}) {
        GateParams p = make_params({la});
        Rng rng(99);
        int active = 0, saturated = 0;
        for (int i = 0; i < n_samples; ++i) {
            const GateSample s = sample_gates(p, rng);
            if (s.z[0] > 0.0) ++active;
            if (s.z[0] == 1.0) ++saturated;
        }
        CHECK(double(active) / n_samples ==
              doctest::Approx(prob_active(p, la)).epsilon(0.015));
        CHECK(double(saturated) / n_samples ==
              doctest::Approx(prob_exactly_one(p, la)).epsilon(0.03));
    }
}

TEST_CASE("log alpha = 0 reference value 0.8318") {
    GateParams p = make_params({0.0});
    CHECK(prob_active(p, 0.0) == doctest::Approx(0.8318).epsilon(1e-3));
    CHECK(l0_penalty(p) == doctest::Approx(0.8318).epsilon(1e-3));
}

TEST_CASE("extreme locations saturate the gate") {
    GateParams p = make_params({30.0});
    Rng rng(5);
    for (int i = 0; i < 50; ++i) CHECK(sample_gates(p, rng).z[0] == doctest::Approx(1.0));
    p.log_alpha[0] = -30.0;
    for (int i = 0; i < 50; ++i) CHECK(sample_gates(p, rng).z[0] == doctest::Approx(0.0));
}

TEST_CASE("samples are deterministic given the seed") {
    GateParams p = make_params({0.3, -0.7, 1.1});
    Rng a(2024), b(2024);
    const GateSample sa = sample_gates(p, a);
    const GateSample sb = sample_gates(p, b);
    CHECK(sa.z == sb.z);
    CHECK(sa.u == sb.u);
}

TEST_CASE("deterministic estimator") {
    GateParams p = make_params({0.0});
    CHECK(deterministic_gates(p)[0] == doctest::Approx(0.5)); // 0.5 * 1.2 - 0.1
    p.log_alpha[0] = -10.0;
    CHECK(deterministic_gates(p)[0] == doctest::Approx(0.0));
    p.log_alpha[0] = 10.0;
    CHECK(deterministic_gates(p)[0] == doctest::Approx(1.0));
}

TEST_CASE("deterministic estimator is monotone in log alpha") {
    double prev = -1.0;
    for (double la = -6.0; la <= 6.0; la += 0.25) {
        GateParams p = make_params({la});
        const double z = deterministic_gates(p)[0];
        CHECK(z >= prev);
        prev = z;
    }
}

TEST_CASE("L0 penalty values and structure") {
    GateParams p = make_params({-60.0});
    CHECK(l0_penalty(p) == doctest::Approx(0.0));

    GateParams two = make_params({0.0, 0.0}, {3, 5});
    CHECK(l0_penalty(two) == doctest::Approx(8 * 0.8318).epsilon(1e-3));

    // strictly increasing in log alpha before saturation
    double prev = 0.0;
    for (double la = -4.0; la <= 4.0; la += 0.5) {
        const double v = l0_penalty(make_params({la}));
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("L0 penalty gradient matches finite differences at 1e-6") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        GateParams p = make_params({rng.uniform(-3, 3), rng.uniform(-3, 3)}, {2, 7});
        const auto grad = l0_penalty_grad(p);
        for (std::size_t g = 0; g < 2; ++g) {
            const double fd = oracles::central_diff(
                [&](double x) {
                    GateParams q = p;
                    q.log_alpha[g] = x;
                    return l0_penalty(q);
                },
                p.log_alpha[g]);
            // full penalty grad carries the |g| factor
            CHECK(oracles::close_rel(grad[g], fd, 1e-6));
        }
    }
}

TEST_CASE("gated L2 penalty") {
    GateParams p = make_params({0.0});
    CHECK(gated_l2_penalty(p, std::vector{0.0}) == doctest::Approx(0.0));
    CHECK(gated_l2_penalty(p, std::vector{1.0}) == doctest::Approx(0.8318).epsilon(1e-3));
    p.log_alpha[0] = -60.0;
    CHECK(gated_l2_penalty(p, std::vector{123.0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS((void)gated_l2_penalty(p, std::vector{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("gate backward: clamped samples carry no gradient") {
    GateParams p = make_params({30.0});
    Rng rng(3);
    GateSample s = sample_gates(p, rng); // saturates at 1
    CHECK(s.z[0] == doctest::Approx(1.0));
    CHECK(gate_backward(p, s, std::vector{1.0})[0] == doctest::Approx(0.0));

    p.log_alpha[0] = -30.0;
    s = sample_gates(p, rng); // clamps at 0
    CHECK(s.z[0] == doctest::Approx(0.0));
    CHECK(gate_backward(p, s, std::vector{1.0})[0] == doctest::Approx(0.0));
}

TEST_CASE("gate backward matches finite differences with u fixed") {
    Rng rng(77);
    int interior_checked = 0;
    while (interior_checked < 40) {
        GateParams p = make_params({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                    rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const GateSample s = sample_gates(p, rng);
        const auto grad = gate_backward(p, s, std::vector{1.0, 1.0, 1.0, 1.0});
        for (std::size_t g = 0; g < 4; ++g) {
            if (s.z[g] <= 0.0 || s.z[g] >= 1.0) continue;
            const double fd = oracles::central_diff(
                [&](double x) {
                    GateParams q = p;
                    q.log_alpha[g] = x;
                    return gates_from_uniform(q, s.u).z[g];
                },
                p.log_alpha[g]);
            CHECK(oracles::close_rel(grad[g], fd, 1e-4));
            ++interior_checked;
        }
    }
}

TEST_CASE("parameter validation") {
    GateParams p = make_params({0.0});
    p.gamma = 0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = make_params({0.0});
    p.zeta = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = make_params({0.0});
    p.group_sizes = {0};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("initialization centers on the drop-rate logit") {
    Rng rng(1);
    const auto la = init_log_alpha(5000, 0.2, rng);
    double mean = 0;
    for (double x : la) mean += x;
    mean /= la.size();
    CHECK(mean == doctest::Approx(std::log(0.8 / 0.2)).epsilon(0.01));
}
