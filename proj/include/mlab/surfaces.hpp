#pragma once

#include <cstdint>

#include "mlab/pathsim.hpp"
#include "mlab/rng.hpp"

namespace mlab {

// Intrinsic Brownian motion on classical minimal surfaces, simulated in the
// isothermal chart (u, w) where the metric is lambda²(du² + dw²):
//   helicoid: X = (sinh w cos u, sinh w sin u, u)
//   catenoid: X = (cosh w cos u, cosh w sin u, w)
// with lambda = cosh w in both charts. Chart BM has no drift (the coordinates
// are harmonic), and the ambient position is evaluated exactly every step, so
// the ambient process is a rank-2 martingale up to O(dt²) per step.
enum class SurfaceKind { helicoid, catenoid };

struct SurfaceControls {
    double eta = 0.05;
    double dt_max = std::numeric_limits<double>::infinity();
    // dt floor: bounds the work spent when the ambient radius dips toward 0
    // (the helicoid passes through the origin); only binds at r ~ 1e-4
    double dt_min = 1e-10;
    double t_max = std::numeric_limits<double>::infinity();
    double r_outer = std::numeric_limits<double>::infinity();
    std::uint64_t max_steps = std::uint64_t(1) << 62;
};

// Per-path ambient martingale diagnostics: component sums of the per-step
// ambient increments and their squares (for the zero-drift check).
struct SurfaceResult {
    PathRecord rec;
    double sum_dx[3] = {0, 0, 0};
    double sum_dx2[3] = {0, 0, 0};
};

// w with X(0, w) at ambient distance r0 from the origin.
double surface_start_w(SurfaceKind kind, double r0);

SurfaceResult simulate_surface_path(SurfaceKind kind, const SurfaceControls& controls,
                                    const RecordOptions& rec, double u0, double w0,
                                    RngStream rng, std::uint64_t path_index = 0);

}  // namespace mlab
