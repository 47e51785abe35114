#include "mlab/subriemannian.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double inv_sinh_sq(double r) {
    if (r > 300.0) return 0.0;  // below 1e-260, and sinh² would overflow past ~355
    double s = std::sinh(r);
    return 1.0 / (s * s);
}

// d(r)/d(field) for each coordinate direction, assembled from
// cosh r = 1 + (x² + y² + (z-1)²)/(2z).
void grad_r(const std::array<double, 3>& q, double r, std::array<double, 3>& g) {
    double sh = std::sinh(r);
    if (sh <= 0.0) {
        g = {0.0, 0.0, 1.0};
        return;
    }
    double rho2 = q[0] * q[0] + q[1] * q[1] + (q[2] - 1.0) * (q[2] - 1.0);
    double inv = 1.0 / (q[2] * sh);
    g[0] = q[0] * inv;
    g[1] = q[1] * inv;
    g[2] = ((q[2] - 1.0) - rho2 / (2.0 * q[2])) * inv;
}

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

// Half-space Christoffel quadratic Γ(u, u) in coordinates.
void christoffel(const std::array<double, 3>& q, const std::array<double, 3>& u,
                 std::array<double, 3>& out) {
    double z = q[2];
    out[0] = -2.0 * u[0] * u[2] / z;
    out[1] = -2.0 * u[1] * u[2] / z;
    out[2] = (u[0] * u[0] + u[1] * u[1] - u[2] * u[2]) / z;
}

}  // namespace

H3Fields H3Fields::builtin() {
    H3Fields f;
    f.builtin_ = true;
    return f;
}

H3Fields H3Fields::from_expressions(const std::string& spec) {
    H3Fields f;
    f.builtin_ = false;
    f.fields_ = parse_field_set(spec);
    if (f.fields_.size() != 2)
        throw config_error("horizontal frame needs exactly two fields, got " +
                           std::to_string(f.fields_.size()));
    return f;
}

void H3Fields::eval(const std::array<double, 3>& q, std::array<double, 3>& v1,
                    std::array<double, 3>& v2) const {
    if (builtin_) {
        v1 = {q[2], 0.0, 0.0};
        v2 = {0.0, 0.0, q[2]};
        return;
    }
    for (int i = 0; i < 3; ++i) {
        v1[i] = fields_[0][i].eval(q[0], q[1], q[2]);
        v2[i] = fields_[1][i].eval(q[0], q[1], q[2]);
    }
}

void H3Fields::check_orthonormal(double tol) const {
    if (builtin_) return;
    const double xs[] = {-3.0, -1.0, 0.0, 0.7, 2.5};
    const double zs[] = {0.1, 0.5, 1.0, 2.0, 10.0};
    std::array<double, 3> v1, v2;
    for (double x : xs)
        for (double y : xs)
            for (double z : zs) {
                std::array<double, 3> q{x, y, z};
                eval(q, v1, v2);
                double inv = 1.0 / (z * z);
                double g11 = (v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2]) * inv;
                double g22 = (v2[0] * v2[0] + v2[1] * v2[1] + v2[2] * v2[2]) * inv;
                double g12 = (v1[0] * v2[0] + v1[1] * v2[1] + v1[2] * v2[2]) * inv;
                if (std::abs(g11 - 1.0) > tol || std::abs(g22 - 1.0) > tol ||
                    std::abs(g12) > tol)
                    throw config_error("horizontal frame is not orthonormal at (" +
                                       std::to_string(x) + ", " + std::to_string(y) + ", " +
                                       std::to_string(z) + ")");
            }
}

std::string H3Fields::describe() const {
    if (builtin_) return "h3 builtin frame {z dx, z dz}";
    std::string s = "h3 frame {";
    for (std::size_t f = 0; f < fields_.size(); ++f) {
        if (f) s += "; ";
        for (int i = 0; i < 3; ++i) {
            if (i) s += ",";
            s += fields_[f][i].source();
        }
    }
    return s + "}";
}

double h3_distance(const std::array<double, 3>& q) {
    if (!(q[2] > 0.0)) throw config_error("half-space point needs z > 0");
    double rho2 = q[0] * q[0] + q[1] * q[1] + (q[2] - 1.0) * (q[2] - 1.0);
    double u = rho2 / (2.0 * q[2]);
    // acosh(1 + u), stable near u = 0
    return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

std::array<double, 3> h3_theta(const std::array<double, 3>& q) {
    double s = std::hypot(q[0], q[1]);
    if (s < 1e-300) return {0.0, 0.0, q[2] >= 1.0 ? 1.0 : -1.0};
    // geodesic through (0,0,1) and q: semicircle centered on the boundary at
    // horizontal offset s0 in the (s, z) half-plane
    double s0 = (s * s + q[2] * q[2] - 1.0) / (2.0 * s);
    double inv = 1.0 / std::sqrt(1.0 + s0 * s0);
    return {inv * q[0] / s, inv * q[1] / s, s0 * inv};
}

std::array<double, 3> h3_point_at(double beta, double r0) {
    if (!(beta >= 0.0 && beta <= kPi)) throw config_error("beta must lie in [0, pi]");
    if (!(r0 >= 0.0)) throw config_error("h3_point_at needs r0 >= 0");
    if (beta < 1e-12) return {0.0, 0.0, std::exp(r0)};
    if (beta > kPi - 1e-12) return {0.0, 0.0, std::exp(-r0)};
    double sc = std::cos(beta) / std::sin(beta);
    double rc = 1.0 / std::sin(beta);
    double psi = 2.0 * std::atan(std::tan(0.5 * beta) * std::exp(r0));
    return {sc - rc * std::cos(psi), 0.0, rc * std::sin(psi)};
}

PathRecord simulate_h3_path(const H3Fields& fields, const H3Controls& c,
                            const RecordOptions& rec, const std::array<double, 3>& q0,
                            std::vector<double> level_list,
                            std::vector<std::pair<double, double>> return_pairs, RngStream rng,
                            std::uint64_t path_index) {
    if (!(q0[2] > 0.0)) throw config_error("start point needs z > 0");
    fields.check_orthonormal();
    double r = h3_distance(q0);
    if (std::isfinite(c.r_outer) && r >= c.r_outer)
        throw config_error("start point must lie inside the outer barrier");
    if (c.r_inner > 0.0 && r <= c.r_inner)
        throw config_error("start point must lie outside the inner barrier");

    PathRecord out;
    out.path_index = path_index;
    out.m = 3;
    for (double L : level_list) {
        LevelWatch lw;
        lw.level = L;
        if (r >= L) lw.t_hit = 0.0;
        out.levels.push_back(lw);
    }
    for (auto& pr : return_pairs) {
        if (!(pr.first < pr.second)) throw config_error("return pair needs a < k");
        ReturnWatch rw;
        rw.a = pr.first;
        rw.k = pr.second;
        if (r >= pr.second) {
            rw.phase = 1;
            rw.t_k = 0.0;
        }
        out.returns.push_back(rw);
    }

    std::array<double, 3> q = q0;
    double t = 0.0, z = 0.0;
    std::uint64_t steps = 0;

    const bool trace = rec.trace != TraceMode::none;
    const bool trace_theta = rec.trace == TraceMode::full;
    const bool every_step = rec.decimation_ratio <= 1.0;
    double next_rec_t = 0.0;

    std::array<double, 3> v1, v2, gam1, gam2, gr;

    StopReason reason = StopReason::running;
    while (reason == StopReason::running) {
        if (steps >= c.max_steps) {
            reason = StopReason::step_limit;
            break;
        }
        double scale = std::clamp(r / 4.0, 1.0, c.step_growth_cap);
        double dt = std::min(c.eta * c.eta * scale * scale, c.dt_max);
        bool clamped = false;
        if (t + dt >= c.t_max) {
            dt = c.t_max - t;
            clamped = true;
            if (dt <= 0.0) {
                reason = StopReason::horizon;
                break;
            }
        }

        std::array<double, 3> qn;
        if (fields.is_builtin()) {
            // exact in law: z is driftless geometric Brownian motion and
            // x|z-path is Gaussian with variance ∫ z² ds (trapezoid here)
            double xi1 = rng.next_normal();
            double xi2 = rng.next_normal();
            double zn = q[2] * std::exp(std::sqrt(dt) * xi2 - 0.5 * dt);
            double xvar = 0.5 * dt * (q[2] * q[2] + zn * zn);
            qn = {q[0] + std::sqrt(xvar) * xi1, q[1], zn};
        } else {
            for (int tries = 0;; ++tries) {
                double xi1 = rng.next_normal();
                double xi2 = rng.next_normal();
                fields.eval(q, v1, v2);
                christoffel(q, v1, gam1);
                christoffel(q, v2, gam2);
                double sq = std::sqrt(dt);
                for (int i = 0; i < 3; ++i)
                    qn[i] = q[i] + sq * (xi1 * v1[i] + xi2 * v2[i]) -
                            0.5 * dt * (gam1[i] + gam2[i]);
                if (qn[2] > 0.0) break;
                if (tries >= c.max_pole_retries)
                    throw numeric_error("half-space boundary guard exhausted");
                dt *= 0.5;
                clamped = false;
            }
        }
        double rn = h3_distance(qn);

        // radial diffusion scale: |projection of grad r on the frame|
        grad_r(q, r, gr);
        fields.eval(q, v1, v2);
        double p1 = v1[0] * gr[0] + v1[1] * gr[1] + v1[2] * gr[2];
        double p2 = v2[0] * gr[0] + v2[1] * gr[1] + v2[2] * gr[2];
        double b2dt = (p1 * p1 + p2 * p2) * dt;

        double stop_frac = 2.0;
        if (std::isfinite(c.r_outer)) {
            double f = crossing_frac(r, rn, c.r_outer, true, b2dt, rng);
            if (f >= 0.0 && f < stop_frac) {
                stop_frac = f;
                reason = StopReason::hit_outer;
            }
        }
        if (c.r_inner > 0.0) {
            double f = crossing_frac(r, rn, c.r_inner, false, b2dt, rng);
            if (f >= 0.0 && f < stop_frac) {
                stop_frac = f;
                reason = StopReason::hit_inner;
            }
        }
        for (auto& lw : out.levels) {
            if (lw.hit()) continue;
            double f = crossing_frac(r, rn, lw.level, true, b2dt, rng);
            if (f >= 0.0 && f <= stop_frac) lw.t_hit = t + f * dt;
        }
        for (auto& rw : out.returns) {
            if (rw.phase == 0) {
                double f = crossing_frac(r, rn, rw.k, true, b2dt, rng);
                if (f >= 0.0 && f <= stop_frac) {
                    rw.phase = 1;
                    rw.t_k = t + f * dt;
                }
            } else if (rw.phase == 1) {
                double f = crossing_frac(r, rn, rw.a, false, b2dt, rng);
                if (f >= 0.0 && f <= stop_frac) {
                    rw.phase = 2;
                    rw.t_a = t + f * dt;
                }
            }
        }

        double dt_used = dt;
        if (reason != StopReason::running) {
            dt_used = stop_frac * dt;
            double f = std::max(stop_frac, 1e-6);
            for (int i = 0; i < 3; ++i) qn[i] = q[i] + f * (qn[i] - q[i]);
            rn = (reason == StopReason::hit_outer) ? c.r_outer : c.r_inner;
        }

        z += 0.5 * dt_used * (inv_sinh_sq(r) + inv_sinh_sq(rn));
        t += dt_used;
        q = qn;
        r = rn;
        steps += 1;
        out.min_r = std::min(out.min_r, r);

        if (trace && t >= rec.trace_start_t && (every_step || t >= next_rec_t)) {
            out.t.push_back(t);
            out.r.push_back(r);
            out.z.push_back(z);
            if (trace_theta) {
                auto th = h3_theta(q);
                out.theta.insert(out.theta.end(), th.begin(), th.end());
            }
            if (!every_step) {
                if (next_rec_t <= 0.0) next_rec_t = t;
                while (next_rec_t <= t) next_rec_t *= rec.decimation_ratio;
            }
        }

        if (reason == StopReason::running && clamped && t >= c.t_max * (1.0 - 1e-15))
            reason = StopReason::horizon;
    }

    out.stop = reason;
    out.t_end = t;
    out.r_end = r;
    out.z_end = z;
    auto th = h3_theta(q);
    out.theta_end = {th[0], th[1], th[2]};
    out.steps = steps;
    return out;
}

}  // namespace mlab
