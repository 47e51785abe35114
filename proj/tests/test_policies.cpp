#include <cmath>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/policies.hpp"
#include "mlab/rng.hpp"

using namespace mlab;

TEST_CASE("deterministic policies hold their alignment") {
    RngStream rng = make_stream(1, 0);
    FramePolicy rad = FramePolicy::radial(3, 5);
    PolicyState ps = rad.init_state(rng);
    for (double t = 0.0; t < 5.0; t += 0.7) CHECK(rad.alignment(ps, t, rng) == 1.0);

    FramePolicy sph = FramePolicy::sphere(2, 4);
    ps = sph.init_state(rng);
    CHECK(sph.alignment(ps, 1.0, rng) == 0.0);

    FramePolicy tilt = FramePolicy::fixed_angle(2, 3, 0.6);
    ps = tilt.init_state(rng);
    CHECK(tilt.alignment(ps, 2.0, rng) == doctest::Approx(std::cos(0.6)).epsilon(1e-15));
}

TEST_CASE("random rotation redraws alpha with the beta law moments") {
    const int n = 2, m = 5;
    FramePolicy pol = FramePolicy::random_rotation(n, m, 2.0);
    RngStream rng = make_stream(9, 3);
    PolicyState ps = pol.init_state(rng);
    double t = 0.0;
    double sum = 0.0, sum2 = 0.0;
    int redraws = 0;
    double prev = -1.0;
    const int samples = 40000;
    for (int i = 0; i < samples; ++i) {
        t += 0.05;
        double a = pol.alignment(ps, t, rng);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        if (a != prev) {
            ++redraws;
            sum += a * a;
            sum2 += a * a * a * a;
            prev = a;
        }
    }
    // rate 2 over 2000 time units -> about 4000 redraws
    CHECK(redraws > 3000);
    double mean = sum / redraws;
    double var = sum2 / redraws - mean * mean;
    // alpha^2 ~ Beta(n/2, (m-n)/2): mean n/m, var 2n(m-n)/(m^2(m+2))
    double want_mean = double(n) / m;
    double want_var = 2.0 * n * (m - n) / (double(m) * m * (m + 2));
    CHECK(std::abs(mean - want_mean) < 4.0 * std::sqrt(want_var / redraws));
    CHECK(var == doctest::Approx(want_var).epsilon(0.15));
}

TEST_CASE("policy validation") {
    CHECK_THROWS_AS(FramePolicy::radial(1, 3), config_error);
    CHECK_THROWS_AS(FramePolicy::radial(3, 3), config_error);
    CHECK_THROWS_AS(FramePolicy::fixed_angle(2, 3, -0.1), config_error);
    CHECK_THROWS_AS(FramePolicy::fixed_angle(2, 3, 2.0), config_error);
    CHECK_THROWS_AS(FramePolicy::random_rotation(2, 4, 0.0), config_error);
    CHECK(FramePolicy::fixed_angle(2, 3, 0.0).describe() == FramePolicy::fixed_angle(2, 3, 0.0).describe());
}
