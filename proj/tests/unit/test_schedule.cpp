#include <doctest.h>

#include <cmath>

#include "upsr/rng.hpp"
#include "upsr/schedule.hpp"

using namespace upsr;

TEST_CASE("build_schedule hits the endpoints exactly") {
    const NoiseSchedule s = NoiseSchedule::build(5, 2.0, 0.001, 0.9999, 0.3);
    CHECK(s.eta(0) == 0.0);
    CHECK(s.eta(1) == 0.001);
    CHECK(s.eta(5) == 0.9999);
    CHECK(s.alpha(1) == s.eta(1));
}

TEST_CASE("build_schedule T=1 degenerates to {0, etaT}") {
    const NoiseSchedule s = NoiseSchedule::build(1, 2.0, 0.001, 0.9999, 0.3);
    CHECK(s.steps() == 1);
    CHECK(s.eta(0) == 0.0);
    CHECK(s.eta(1) == 0.9999);
}

TEST_CASE("alphas are positive and telescope to eta_T") {
    const NoiseSchedule s = NoiseSchedule::build(5, 2.0, 0.001, 0.9999, 0.3);
    double sum = 0.0;
    for (int t = 1; t <= 5; ++t) {
        CHECK(s.alpha(t) > 0.0);
        sum += s.alpha(t);
    }
    CHECK(std::abs(sum - 0.9999) <= 1e-12);
}

TEST_CASE("schedule monotonicity over random parameters") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const int T = rng.uniform_int(1, 15);
        const NoiseSchedule s =
            NoiseSchedule::build(T, rng.uniform_range(0.5, 3.0), rng.uniform_range(1e-4, 0.01),
                                 rng.uniform_range(0.5, 1.0), rng.uniform_range(0.1, 3.0));
        for (int t = 1; t <= T; ++t) CHECK(s.eta(t) > s.eta(t - 1));
    }
}

TEST_CASE("schedule rejects invalid parameters and indices") {
    CHECK_THROWS_AS(NoiseSchedule::build(0, 2.0, 0.001, 0.9999, 0.3), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::build(5, -1.0, 0.001, 0.9999, 0.3), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::build(5, 2.0, 0.5, 0.1, 0.3), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::build(5, 2.0, 0.0, 0.9999, 0.3), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::build(5, 2.0, 0.001, 1.5, 0.3), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::build(5, 2.0, 0.001, 0.9999, 0.0), ParamError);

    const NoiseSchedule s = default_schedule();
    CHECK_THROWS_AS(s.eta(-1), ParamError);
    CHECK_THROWS_AS(s.eta(6), ParamError);
    CHECK_THROWS_AS(s.alpha(0), ParamError);
    CHECK_THROWS_AS(s.alpha(6), ParamError);
}

TEST_CASE("sigma_max is kappa * sqrt(eta_T)") {
    CHECK(NoiseSchedule::from_etas(2.0, {0.5, 1.0}).sigma_max() == 2.0);
    CHECK(NoiseSchedule::from_etas(1.0, {0.1, 0.25}).sigma_max() == 0.5);
    const NoiseSchedule s = NoiseSchedule::build(5, 2.0, 0.001, 0.9999, 0.3);
    CHECK(std::abs(s.sigma_max() - 2.0 * std::sqrt(0.9999)) < 1e-12);
    CHECK(std::abs(s.sigma_max() - 1.9999) < 1e-6);
}

TEST_CASE("from_etas validates ordering") {
    CHECK_THROWS_AS(NoiseSchedule::from_etas(2.0, {0.5, 0.4}), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::from_etas(2.0, {0.0, 0.4}), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::from_etas(2.0, {0.5, 1.2}), ParamError);
    CHECK_THROWS_AS(NoiseSchedule::from_etas(2.0, {}), ParamError);
}
