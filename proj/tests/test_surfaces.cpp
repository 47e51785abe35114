#include <cmath>

#include "doctest.h"
#include "mlab/errors.hpp"
#include "mlab/surfaces.hpp"

using namespace mlab;

TEST_CASE("start points sit at the requested ambient radius") {
    double w = surface_start_w(SurfaceKind::helicoid, 3.0);
    CHECK(std::sinh(w) == doctest::Approx(3.0).epsilon(1e-12));
    w = surface_start_w(SurfaceKind::catenoid, 2.0);
    CHECK(std::cosh(w) * std::cosh(w) + w * w == doctest::Approx(4.0).epsilon(1e-10));
    // the catenoid neck is the unit circle; nothing sits inside it
    CHECK_THROWS_AS(surface_start_w(SurfaceKind::catenoid, 0.5), config_error);
}

TEST_CASE("sampled paths stay on their surface") {
    SurfaceControls sc;
    sc.t_max = 5.0;
    RecordOptions rec;
    rec.trace = TraceMode::full;
    rec.decimation_ratio = 1.0;  // keep every step

    double w0 = surface_start_w(SurfaceKind::helicoid, 2.0);
    SurfaceResult h = simulate_surface_path(SurfaceKind::helicoid, sc, rec, 0.0, w0,
                                            make_stream(21, 0), 0);
    REQUIRE(h.rec.t.size() > 100);
    for (std::size_t i = 0; i < h.rec.t.size(); i += 7) {
        double r = h.rec.r[i];
        double x = h.rec.theta[3 * i] * r;
        double y = h.rec.theta[3 * i + 1] * r;
        double z = h.rec.theta[3 * i + 2] * r;
        // (sinh w cos u, sinh w sin u, u): x sin z = y cos z
        CHECK(std::abs(x * std::sin(z) - y * std::cos(z)) < 1e-9 * (1.0 + r));
    }

    w0 = surface_start_w(SurfaceKind::catenoid, 2.0);
    SurfaceResult c = simulate_surface_path(SurfaceKind::catenoid, sc, rec, 0.0, w0,
                                            make_stream(21, 1), 1);
    REQUIRE(c.rec.t.size() > 100);
    for (std::size_t i = 0; i < c.rec.t.size(); i += 7) {
        double r = c.rec.r[i];
        double x = c.rec.theta[3 * i] * r;
        double y = c.rec.theta[3 * i + 1] * r;
        double z = c.rec.theta[3 * i + 2] * r;
        // (cosh w cos u, cosh w sin u, w): x^2 + y^2 = cosh^2 z
        CHECK(x * x + y * y == doctest::Approx(std::cosh(z) * std::cosh(z)).epsilon(1e-9));
    }
}

TEST_CASE("ambient increments have no systematic drift") {
    SurfaceControls sc;
    sc.dt_max = 1e-3;
    sc.eta = 10.0;  // let dt_max set the step
    sc.t_max = 5.0;
    double w0 = surface_start_w(SurfaceKind::catenoid, 2.0);
    double S[3] = {0, 0, 0}, Q[3] = {0, 0, 0};
    for (int i = 0; i < 400; ++i) {
        SurfaceResult r = simulate_surface_path(SurfaceKind::catenoid, sc, {}, 0.0, w0,
                                                make_stream(22, i), i);
        CHECK(r.rec.stop == StopReason::horizon);
        for (int j = 0; j < 3; ++j) {
            S[j] += r.sum_dx[j];
            Q[j] += r.sum_dx2[j];
        }
    }
    for (int j = 0; j < 3; ++j) CHECK(std::abs(S[j]) <= 3.0 * std::sqrt(Q[j]));
}

TEST_CASE("outer barrier stops exactly at the radius") {
    SurfaceControls sc;
    sc.r_outer = 20.0;
    double w0 = surface_start_w(SurfaceKind::helicoid, 2.0);
    SurfaceResult a = simulate_surface_path(SurfaceKind::helicoid, sc, {}, 0.0, w0,
                                            make_stream(23, 5), 5);
    CHECK(a.rec.stop == StopReason::hit_outer);
    CHECK(a.rec.r_end == 20.0);
    CHECK(a.rec.z_end > 0.0);
    // reproducible
    SurfaceResult b = simulate_surface_path(SurfaceKind::helicoid, sc, {}, 0.0, w0,
                                            make_stream(23, 5), 5);
    CHECK(a.rec.t_end == b.rec.t_end);
    CHECK(a.rec.steps == b.rec.steps);
}
