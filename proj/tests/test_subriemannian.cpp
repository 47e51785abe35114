#include <cmath>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/subriemannian.hpp"

using namespace mlab;

TEST_CASE("half-space distance and geodesic helpers") {
    for (double s : {0.3, 1.0, 4.0}) {
        CHECK(h3_distance({0.0, 0.0, std::exp(s)}) == doctest::Approx(s).epsilon(1e-12));
        CHECK(h3_distance({0.0, 0.0, std::exp(-s)}) == doctest::Approx(s).epsilon(1e-12));
    }
    CHECK(h3_distance({0.0, 0.0, 1.0}) == 0.0);

    for (double beta : {0.0, 0.4, 1.1, 1.5707963267948966, 2.4, 3.141592653589793}) {
        for (double r0 : {0.5, 3.0, 8.0}) {
            auto q = h3_point_at(beta, r0);
            CHECK(q[1] == 0.0);
            CHECK(q[2] > 0.0);
            CHECK(h3_distance(q) == doctest::Approx(r0).epsilon(1e-9));
        }
    }
    // start direction pins the exit hemisphere at the extremes
    auto up = h3_theta(h3_point_at(0.0, 5.0));
    CHECK(up[2] == doctest::Approx(1.0).epsilon(1e-12));
    auto down = h3_theta(h3_point_at(3.141592653589793, 5.0));
    CHECK(down[2] == doctest::Approx(-1.0).epsilon(1e-12));
    // theta is always a unit vector
    auto mid = h3_theta(h3_point_at(1.2, 5.0));
    CHECK(mid[0] * mid[0] + mid[1] * mid[1] + mid[2] * mid[2] ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("frame orthonormality check") {
    CHECK_NOTHROW(H3Fields::builtin().check_orthonormal());
    // the builtin frame written as expressions passes too
    CHECK_NOTHROW(H3Fields::from_expressions("z, 0, 0 ; 0, 0, z").check_orthonormal());
    // a rotated horizontal-ish frame that is not orthonormal fails
    CHECK_THROWS_AS(H3Fields::from_expressions("2*z, 0, 0 ; 0, 0, z").check_orthonormal(),
                    config_error);
    CHECK_THROWS_AS(H3Fields::from_expressions("z, 0, 0 ; z, 0, z").check_orthonormal(),
                    config_error);
    CHECK_THROWS_AS(H3Fields::from_expressions("z, 0, 0"), config_error);  // rank 2 needed
}

TEST_CASE("builtin frame spans the y = 0 plane") {
    // the frame (z dx, z dz) never moves y, so paths started in the plane
    // stay there and their exit directions sit on the y = 0 circle
    H3Fields fields = H3Fields::builtin();
    H3Controls hc;
    hc.r_outer = 8.0;
    for (int i = 0; i < 50; ++i) {
        PathRecord p = simulate_h3_path(fields, hc, {}, h3_point_at(0.9, 2.0), {}, {},
                                        make_stream(31, i), i);
        CHECK(p.stop == StopReason::hit_outer);
        REQUIRE(p.theta_end.size() == 3);
        CHECK(p.theta_end[1] == 0.0);
        CHECK(p.min_r >= 0.0);
    }
}

TEST_CASE("radial speed: the horizontal diffusion escapes linearly") {
    // far from the base point grad r is essentially unit for the frame and
    // the drift approaches 1/2 + 1/2·coth(r) -> 1, so r_t / t -> about 1;
    // this is a loose sanity envelope, not a sharp constant
    H3Fields fields = H3Fields::builtin();
    H3Controls hc;
    hc.t_max = 40.0;
    double mean_r = 0.0;
    const int paths = 400;
    for (int i = 0; i < paths; ++i) {
        PathRecord p = simulate_h3_path(fields, hc, {}, h3_point_at(1.2, 2.0), {}, {},
                                        make_stream(33, i), i);
        CHECK(p.stop == StopReason::horizon);
        mean_r += p.r_end;
    }
    mean_r /= paths;
    CHECK(mean_r > 10.0);
    CHECK(mean_r < 60.0);
}

TEST_CASE("paths respect barriers and reproduce") {
    H3Fields fields = H3Fields::builtin();
    H3Controls hc;
    hc.r_outer = 10.0;
    auto q0 = h3_point_at(1.5707963267948966, 3.0);
    PathRecord a = simulate_h3_path(fields, hc, {}, q0, {5.0}, {{1.0, 5.0}},
                                    make_stream(32, 4), 4);
    CHECK(a.stop == StopReason::hit_outer);
    CHECK(a.r_end == 10.0);
    CHECK(a.z_end > 0.0);
    CHECK(a.levels[0].hit());
    CHECK(a.theta_end.size() == 3);
    double n2 = 0.0;
    for (double t : a.theta_end) n2 += t * t;
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
    PathRecord b = simulate_h3_path(fields, hc, {}, q0, {5.0}, {{1.0, 5.0}},
                                    make_stream(32, 4), 4);
    CHECK(a.t_end == b.t_end);
    CHECK(a.steps == b.steps);
    // the generic integrator also runs (custom expression frame)
    H3Fields expr = H3Fields::from_expressions("z, 0, 0 ; 0, 0, z");
    H3Controls shortrun;
    shortrun.t_max = 0.25;
    PathRecord c = simulate_h3_path(expr, shortrun, {}, q0, {}, {}, make_stream(32, 9), 9);
    CHECK(c.stop == StopReason::horizon);
    CHECK(c.r_end > 0.0);
}
