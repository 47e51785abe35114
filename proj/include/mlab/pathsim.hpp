#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mlab/geometry.hpp"
#include "mlab/policies.hpp"
#include "mlab/rng.hpp"

namespace mlab {

// Instantaneous state of one simulated path.
//
// r > 0 is the radial coordinate, theta a unit vector in R^m (the angular
// coordinate on S^{m-1}), z = ∫ G(r_s)^{-2} ds the angular clock, and alpha
// the current frame alignment supplied by the policy.
struct MartingaleState {
    double t = 0.0;
    double r = 0.0;
    double z = 0.0;
    std::vector<double> theta;
    double alpha = 1.0;
    PolicyState pol;
    std::uint64_t steps = 0;
};

// Numerical-scheme controls. The step size follows
//   dt = min(dt_max, eta²·r² / (1 + (r·v)²)),   v = radial drift,
// so the expected radial move stays a small fraction of r. Level and barrier
// crossings inside a step are detected with a Brownian-bridge test (plain
// endpoint tests shift every hitting time by O(sqrt(dt))).
//
// Only barriers, the horizon, and the step limit stop a path; watches record
// events and keep it running, so every run needs at least one of r_outer,
// t_max, or max_steps set to something finite it will actually reach.
struct StepControls {
    double eta = 0.05;
    double dt_max = std::numeric_limits<double>::infinity();
    double dt_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    double r_inner = 0.0;  // absorbing inner barrier, 0 disables
    double r_outer = std::numeric_limits<double>::infinity();  // absorbing outer barrier
    // Reflecting floor, 0 disables. For n = 2 regimes the step rule spends
    // unbounded expected work in deep pole dips; reflecting at a floor far
    // below every watched level leaves all watched statistics unchanged and
    // only discards sub-floor time/z contributions.
    double reflect_floor = 0.0;
    int max_pole_retries = 40;
    std::uint64_t max_steps = std::uint64_t(1) << 62;
    bool zero_drift = false;  // pure-martingale control experiment
    // Extra deterministic state-dependent rotation of the tangential noise;
    // must not change any law (frame-rotation invariance test hook).
    bool rotate_tangent_frame = false;
};

// First upward passage through `level`.
struct LevelWatch {
    double level = 0.0;
    double t_hit = std::numeric_limits<double>::quiet_NaN();
    bool hit() const { return t_hit == t_hit; }
};

// Return experiment: did the path come back to r <= a after first reaching
// r >= k? Paths stopped while still above a in phase 1 count as no-return
// (the conservative censoring convention); paths stopped in phase 0 never
// entered the experiment.
struct ReturnWatch {
    double a = 0.0;
    double k = 0.0;
    int phase = 0;  // 0: waiting for k, 1: watching for a, 2: returned
    double t_k = std::numeric_limits<double>::quiet_NaN();
    double t_a = std::numeric_limits<double>::quiet_NaN();
    bool reached_k() const { return phase >= 1; }
    bool returned() const { return phase == 2; }
};

enum class StopReason { running, hit_outer, hit_inner, horizon, step_limit };
std::string to_string(StopReason r);

enum class TraceMode { none, rz, full };

// Sample retention: geometric decimation, sample k at t0·ratio^k where t0 is
// the first retained time; ratio <= 1 keeps every step. trace_start_t
// suppresses early samples entirely (long-horizon runs only need the tail,
// and full traces of 10^5-step paths would dominate memory).
struct RecordOptions {
    TraceMode trace = TraceMode::none;
    double decimation_ratio = 1.05;
    double trace_start_t = 0.0;
};

struct PathRecord {
    std::uint64_t path_index = 0;
    int m = 0;
    StopReason stop = StopReason::running;
    double t_end = 0.0, r_end = 0.0, z_end = 0.0;
    std::vector<double> theta_end;
    std::uint64_t steps = 0;
    double min_r = std::numeric_limits<double>::infinity();
    std::vector<LevelWatch> levels;
    std::vector<ReturnWatch> returns;
    // decimated trace (empty unless requested); theta flattened m per sample
    std::vector<double> t, r, z, theta;
};

// One Euler step with bridge-corrected event detection. Exposed for tests
// and bindings; simulate_path is the loop everything else uses.
class Stepper {
  public:
    Stepper(const WarpFunction& warp, const FramePolicy& policy, const StepControls& controls)
        : warp_(&warp), policy_(&policy), c_(controls) {}

    // Advances state by one step; fills watches and returns the stop reason
    // (StopReason::running if the path continues).
    StopReason step(MartingaleState& s, RngStream& rng, std::vector<LevelWatch>& levels,
                    std::vector<ReturnWatch>& returns) const;

    const StepControls& controls() const { return c_; }

  private:
    const WarpFunction* warp_;
    const FramePolicy* policy_;
    StepControls c_;
};

PathRecord simulate_path(const WarpFunction& warp, const FramePolicy& policy,
                         const StepControls& controls, const RecordOptions& rec, double r0,
                         const std::vector<double>& theta0, std::vector<double> level_list,
                         std::vector<std::pair<double, double>> return_pairs, RngStream rng,
                         std::uint64_t path_index = 0);

}  // namespace mlab
