#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mlab/expression.hpp"
#include "mlab/pathsim.hpp"
#include "mlab/rng.hpp"

namespace mlab {

// Rank-2 horizontal frame on the hyperbolic half-space
//   {(x, y, z) : z > 0},  metric (dx² + dy² + dz²)/z².
//
// The builtin frame is v1 = z·∂x, v2 = z·∂z, an orthonormal pair spanning the
// totally geodesic leaf {y = const}. The induced martingale dq = v1 dW¹ + v2 dW²
// has no Christoffel correction in this frame, so the coordinate process is
// exact geometric Brownian motion in z coupled with dx = z dW¹, and the leaf
// process is Brownian motion on a hyperbolic plane.
//
// Custom frames are given as expressions in the coordinates x, y, z
// ("f1,f2,f3; g1,g2,g3" for the two fields' coordinate components) and are
// integrated with an Euler scheme carrying the Christoffel drift
// -½·Σ Γ(vi, vi). Custom frames must be orthonormal for the rank-2 radial
// comparison to apply; check_orthonormal verifies this on a sample grid.
class H3Fields {
  public:
    static H3Fields builtin();
    static H3Fields from_expressions(const std::string& spec);

    bool is_builtin() const { return builtin_; }
    void eval(const std::array<double, 3>& q, std::array<double, 3>& v1,
              std::array<double, 3>& v2) const;
    // Checks <vi, vj> = δij in the half-space metric over a point grid.
    void check_orthonormal(double tol = 1e-8) const;
    std::string describe() const;

  private:
    bool builtin_ = true;
    std::vector<std::array<Expr, 3>> fields_;
};

// Radial statistics are measured from the base point (0, 0, 1). The step
// size grows with r as dt = eta²·clamp(r/4, 1, step_growth_cap)²: the radial
// diffusion coefficient is at most 1, all level activity happens at small r,
// and the builtin sampler is exact in law at any dt, so long steps far out
// only coarsen crossing-time interpolation.
struct H3Controls {
    double eta = 0.05;
    double step_growth_cap = 5.0;
    double dt_max = std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
    double r_inner = 0.0;
    double r_outer = std::numeric_limits<double>::infinity();
    int max_pole_retries = 40;
    std::uint64_t max_steps = std::uint64_t(1) << 62;
};

// Distance from the base point (0, 0, 1).
double h3_distance(const std::array<double, 3>& q);

// Unit initial direction (a point of S², Euclidean coordinates in the
// tangent space at the base point) of the geodesic from (0, 0, 1) to q.
std::array<double, 3> h3_theta(const std::array<double, 3>& q);

// Point at distance r0 from the base whose geodesic leaves at angle beta
// from the upward direction ∂z, inside the leaf {y = 0}.
std::array<double, 3> h3_point_at(double beta, double r0);

// Runs one horizontal martingale path. Level and return watches act on the
// radial coordinate r = d(q, base) with bridge-corrected crossing detection,
// as in the radial simulator; theta traces record h3_theta of the position.
PathRecord simulate_h3_path(const H3Fields& fields, const H3Controls& controls,
                            const RecordOptions& rec, const std::array<double, 3>& q0,
                            std::vector<double> level_list,
                            std::vector<std::pair<double, double>> return_pairs, RngStream rng,
                            std::uint64_t path_index = 0);

}  // namespace mlab
