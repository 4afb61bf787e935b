#include "jsqslq/stability.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace jsqslq;
using Catch::Matchers::WithinAbs;

TEST_CASE("symmetric stationary phase vector") {
    Row12 pi = phase_stationary(build_blocks(testing::even_p(4, 5, 5, 5)));
    Row12 expect;
    expect << 1.0 / 9, 1.0 / 18, 1.0 / 18, 1.0 / 9, 1.0 / 18, 1.0 / 9, 1.0 / 9, 1.0 / 18, 1.0 / 18,
        1.0 / 9, 1.0 / 9, 1.0 / 18;
    CHECK_THAT((pi - expect).cwiseAbs().maxCoeff(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("stationary vector normalizes and is non-negative") {
    std::mt19937_64 rng(5);
    for (int draw = 0; draw < 10; ++draw) {
        QbdBlocks b = build_blocks(testing::random_params(rng));
        Row12 pi = phase_stationary(b);
        CHECK_THAT(pi.sum(), WithinAbs(1.0, 1e-12));
        CHECK(pi.minCoeff() >= 0.0);
        CHECK_THAT((pi * b.a()).cwiseAbs().maxCoeff() / b.a().cwiseAbs().maxCoeff(),
                   WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("symmetric drift reduces to (lambda - 5)/3") {
    for (double lam : {1.0, 3.0, 4.9}) {
        double f = drift(testing::even_p(lam, 5, 5, 5));
        CHECK_THAT(f, WithinAbs((lam - 5.0) / 3.0, 1e-12));
    }
    CHECK_THAT(drift(testing::even_p(5, 5, 5, 5)), WithinAbs(0.0, 1e-12));
    CHECK_FALSE(is_stable(testing::even_p(5, 5, 5, 5)));  // boundary counts as unstable
    CHECK(is_stable(testing::even_p(4, 5, 5, 5)));
}

TEST_CASE("drift brackets the published threshold for skewed ties") {
    Vec3 mu(4, 5, 6), q = Vec3::Ones(), p(0.9, 0.05, 0.05);
    CHECK(drift(validate_params(4.0, mu, p, q)) < 0.0);
    CHECK(drift(validate_params(4.7, mu, p, q)) > 0.0);
}

TEST_CASE("drift matrix and scalar forms agree on random draws") {
    // drift() itself cross-checks the two forms; exercise it broadly
    std::mt19937_64 rng(7);
    for (int draw = 0; draw < 15; ++draw) CHECK_NOTHROW(drift(testing::random_params(rng)));
}

TEST_CASE("stability thresholds reproduce the reference values") {
    Vec3 mu(4, 5, 6), q = Vec3::Ones();
    struct Case {
        Vec3 p;
        double expect;
    };
    const Case cases[] = {
        {Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), 4.90215},
        {Vec3(0.2, 0.3, 0.5), 5.0149},
        {Vec3(0.05, 0.05, 0.9), 5.17335},
        {Vec3(0.9, 0.05, 0.05), 4.63355},
    };
    for (const auto& c : cases)
        CHECK_THAT(threshold_lambda(mu, c.p, q, 1e-6, 0.0, 1e-7), WithinAbs(c.expect, 5e-5));
}

TEST_CASE("symmetric threshold is the service rate") {
    double th = threshold_lambda(Vec3(5, 5, 5), Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), Vec3::Ones());
    CHECK_THAT(th, WithinAbs(5.0, 2e-6));
}

TEST_CASE("threshold search requires a sign change") {
    Vec3 mu(4, 5, 6), p(1.0 / 3, 1.0 / 3, 1.0 / 3), q = Vec3::Ones();
    CHECK_THROWS_AS(threshold_lambda(mu, p, q, 0.1, 0.5), Error);
}

TEST_CASE("drift changes sign exactly once over the default bracket") {
    Vec3 mu(4, 5, 6), q = Vec3::Ones();
    CHECK(drift_sign_changes(mu, Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3), q) == 1);
    CHECK(drift_sign_changes(mu, Vec3(0.9, 0.05, 0.05), q) == 1);
}
