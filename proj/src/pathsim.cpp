#include "mlab/pathsim.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/errors.hpp"

namespace mlab {

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::running:
            return "running";
        case StopReason::hit_outer:
            return "hit_outer";
        case StopReason::hit_inner:
            return "hit_inner";
        case StopReason::horizon:
            return "horizon";
        case StopReason::step_limit:
            return "step_limit";
    }
    return "unknown";
}

namespace {

// Crossing-time fraction of a level inside one step, or -1 if no crossing.
// Direct endpoint crossings are time-interpolated; same-side excursions are
// detected with the Brownian-bridge probability exp(-2·d0·d1/(b²dt)) and
// assigned the midpoint time. Skips the RNG draw when the probability is
// below 1e-16 (the skip condition depends only on state, so streams stay
// reproducible).
double crossing_frac(double from, double to, double level, bool upward, double b2dt,
                     RngStream& rng) {
    double d0 = upward ? level - from : from - level;
    double d1 = upward ? level - to : to - level;
    if (d0 <= 0.0) return 0.0;
    if (d1 <= 0.0) return d0 / (d0 - d1);
    if (b2dt <= 0.0) return -1.0;
    double expo = 2.0 * d0 * d1 / b2dt;
    if (expo > 36.8) return -1.0;
    if (rng.next_uniform() < std::exp(-expo)) return 0.5;
    return -1.0;
}

}  // namespace

StopReason Stepper::step(MartingaleState& s, RngStream& rng, std::vector<LevelWatch>& levels,
                         std::vector<ReturnWatch>& returns) const {
    const int n = policy_->rank();
    const int m = policy_->ambient_dim();
    const double r = s.r;

    s.alpha = policy_->alignment(s.pol, s.t, rng);
    const double alpha = s.alpha;
    const double dlg = warp_->dlog_g(r);
    const double v = c_.zero_drift ? 0.0 : 0.5 * (n - alpha * alpha) * dlg;

    double dt = c_.eta * c_.eta * r * r / (1.0 + (r * v) * (r * v));
    dt = std::min(dt, c_.dt_max);
    dt = std::max(dt, c_.dt_min);
    bool clamped_to_horizon = false;
    if (s.t + dt >= c_.t_max) {
        dt = c_.t_max - s.t;
        clamped_to_horizon = true;
        if (dt <= 0.0) return StopReason::horizon;
    }
    // dt ~ eta²r² with nothing to stop the path can overflow; fail loudly
    // instead of walking on NaNs (watches never stop a path by themselves)
    if (!std::isfinite(dt))
        throw numeric_error("step size overflowed; set t_max, r_outer, or dt_max");

    // radial proposal; the pole guard halves dt and redraws on a would-be
    // crossing of r = 0 (impossible for the continuous process)
    double xi = 0.0, rp = 0.0;
    for (int tries = 0;; ++tries) {
        xi = rng.next_normal();
        rp = r + alpha * std::sqrt(dt) * xi + v * dt;
        if (rp > 0.0 || c_.reflect_floor > 0.0) break;
        if (tries >= c_.max_pole_retries)
            throw numeric_error("pole guard exhausted after halving dt " +
                                std::to_string(c_.max_pole_retries) + " times");
        dt *= 0.5;
        clamped_to_horizon = false;
    }
    if (c_.reflect_floor > 0.0 && rp < c_.reflect_floor) rp = 2.0 * c_.reflect_floor - rp;

    const double b2dt = alpha * alpha * dt;

    // Event sweep in fixed order (RNG determinism). Barriers stop the path at
    // the earliest crossing; watches fire if they cross before that.
    double stop_frac = 2.0;
    StopReason stop = StopReason::running;
    if (std::isfinite(c_.r_outer)) {
        double f = crossing_frac(r, rp, c_.r_outer, true, b2dt, rng);
        if (f >= 0.0 && f < stop_frac) {
            stop_frac = f;
            stop = StopReason::hit_outer;
        }
    }
    if (c_.r_inner > 0.0) {
        double f = crossing_frac(r, rp, c_.r_inner, false, b2dt, rng);
        if (f >= 0.0 && f < stop_frac) {
            stop_frac = f;
            stop = StopReason::hit_inner;
        }
    }
    for (auto& lw : levels) {
        if (lw.hit()) continue;
        double f = crossing_frac(r, rp, lw.level, true, b2dt, rng);
        if (f >= 0.0 && f <= stop_frac) lw.t_hit = s.t + f * dt;
    }
    for (auto& rw : returns) {
        if (rw.phase == 0) {
            double f = crossing_frac(r, rp, rw.k, true, b2dt, rng);
            if (f >= 0.0 && f <= stop_frac) {
                rw.phase = 1;
                rw.t_k = s.t + f * dt;
            }
        } else if (rw.phase == 1) {
            double f = crossing_frac(r, rp, rw.a, false, b2dt, rng);
            if (f >= 0.0 && f <= stop_frac) {
                rw.phase = 2;
                rw.t_a = s.t + f * dt;
            }
        }
    }

    double dt_used = dt;
    double r_final = rp;
    if (stop != StopReason::running) {
        dt_used = stop_frac * dt;
        r_final = (stop == StopReason::hit_outer) ? c_.r_outer : c_.r_inner;
    }

    // angular clock, trapezoidal
    s.z += 0.5 * dt_used * (warp_->inv_g_sq(r) + warp_->inv_g_sq(r_final));

    // tangential move: frame-averaged Gaussian with total power (n - alpha²)/G²
    double s2 = static_cast<double>(n) - alpha * alpha;
    if (s2 > 0.0 && !s.theta.empty() && dt_used > 0.0) {
        double h[16];
        for (int i = 0; i < m; ++i) h[i] = rng.next_normal();
        if (c_.rotate_tangent_frame) {
            // deterministic state-dependent rotation in the first coordinate
            // plane; must leave every statistic's law unchanged
            double ang = std::fmod(r, 6.283185307179586);
            double ca = std::cos(ang), sa = std::sin(ang);
            double h0 = ca * h[0] - sa * h[1];
            double h1 = sa * h[0] + ca * h[1];
            h[0] = h0;
            h[1] = h1;
        }
        double dot = 0.0;
        for (int i = 0; i < m; ++i) dot += h[i] * s.theta[i];
        double scale = std::sqrt(dt_used * s2 / (m - 1)) * warp_->inv_g(r);
        double norm2 = 0.0;
        for (int i = 0; i < m; ++i) {
            s.theta[i] += scale * (h[i] - dot * s.theta[i]);
            norm2 += s.theta[i] * s.theta[i];
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (int i = 0; i < m; ++i) s.theta[i] *= inv;
    }

    s.t += dt_used;
    s.r = r_final;
    s.steps += 1;

    if (stop != StopReason::running) return stop;
    if (clamped_to_horizon && s.t >= c_.t_max * (1.0 - 1e-15)) return StopReason::horizon;
    return StopReason::running;
}

PathRecord simulate_path(const WarpFunction& warp, const FramePolicy& policy,
                         const StepControls& controls, const RecordOptions& rec, double r0,
                         const std::vector<double>& theta0, std::vector<double> level_list,
                         std::vector<std::pair<double, double>> return_pairs, RngStream rng,
                         std::uint64_t path_index) {
    const int m = policy.ambient_dim();
    if (!(r0 > 0.0)) throw config_error("simulate_path needs r0 > 0");
    if (std::isfinite(controls.r_outer) && r0 >= controls.r_outer)
        throw config_error("r0 must lie below the outer barrier");
    if (controls.r_inner > 0.0 && r0 <= controls.r_inner)
        throw config_error("r0 must lie above the inner barrier");
    if (controls.r_inner > 0.0 && controls.reflect_floor > 0.0)
        throw config_error("inner barrier and reflecting floor are mutually exclusive");
    if (m > 16) throw config_error("ambient dimension m is capped at 16");
    // empty theta0 turns angular tracking off (radial statistics only)
    if (!theta0.empty()) {
        if (static_cast<int>(theta0.size()) != m)
            throw config_error("theta0 dimension must equal the ambient dimension m");
        double n2 = 0.0;
        for (double x : theta0) n2 += x * x;
        if (std::abs(n2 - 1.0) > 1e-8) throw config_error("theta0 must be a unit vector");
    }
    if (controls.reflect_floor > 0.0) {
        double least = r0;
        for (double L : level_list) least = std::min(least, L);
        for (auto& pr : return_pairs) least = std::min(least, pr.first);
        if (!(controls.reflect_floor <= 0.1 * least))
            throw config_error("reflect_floor must sit far below every watched level");
    }

    PathRecord out;
    out.path_index = path_index;
    out.m = m;
    out.levels.reserve(level_list.size());
    for (double L : level_list) {
        LevelWatch lw;
        lw.level = L;
        if (r0 >= L) lw.t_hit = 0.0;
        out.levels.push_back(lw);
    }
    out.returns.reserve(return_pairs.size());
    for (auto& pr : return_pairs) {
        if (!(pr.first < pr.second))
            throw config_error("return pair needs a < k");
        ReturnWatch rw;
        rw.a = pr.first;
        rw.k = pr.second;
        if (r0 >= pr.second) {
            rw.phase = 1;
            rw.t_k = 0.0;
        }
        out.returns.push_back(rw);
    }

    MartingaleState s;
    s.r = r0;
    s.theta = theta0;
    s.pol = policy.init_state(rng);

    Stepper stepper(warp, policy, controls);
    const bool trace = rec.trace != TraceMode::none;
    const bool trace_theta = rec.trace == TraceMode::full;
    const bool every_step = rec.decimation_ratio <= 1.0;
    double next_rec_t = 0.0;

    StopReason reason = StopReason::running;
    while (reason == StopReason::running) {
        if (s.steps >= controls.max_steps) {
            reason = StopReason::step_limit;
            break;
        }
        reason = stepper.step(s, rng, out.levels, out.returns);
        out.min_r = std::min(out.min_r, s.r);
        if (trace && s.t >= rec.trace_start_t && (every_step || s.t >= next_rec_t)) {
            out.t.push_back(s.t);
            out.r.push_back(s.r);
            out.z.push_back(s.z);
            if (trace_theta)
                out.theta.insert(out.theta.end(), s.theta.begin(), s.theta.end());
            if (!every_step) {
                if (next_rec_t <= 0.0) next_rec_t = s.t;
                while (next_rec_t <= s.t) next_rec_t *= rec.decimation_ratio;
            }
        }
    }

    out.stop = reason;
    out.t_end = s.t;
    out.r_end = s.r;
    out.z_end = s.z;
    out.theta_end = s.theta;
    out.steps = s.steps;
    return out;
}

}  // namespace mlab
