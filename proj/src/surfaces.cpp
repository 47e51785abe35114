#include "mlab/surfaces.hpp"

#include <cmath>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

struct Ambient {
    double X[3];
    double Xu[3];
    double Xw[3];
    double lambda2;
};

Ambient chart(SurfaceKind kind, double u, double w) {
    Ambient a;
    double cu = std::cos(u), su = std::sin(u);
    double ch = std::cosh(w), sh = std::sinh(w);
    if (kind == SurfaceKind::helicoid) {
        a.X[0] = sh * cu;
        a.X[1] = sh * su;
        a.X[2] = u;
        a.Xu[0] = -sh * su;
        a.Xu[1] = sh * cu;
        a.Xu[2] = 1.0;
        a.Xw[0] = ch * cu;
        a.Xw[1] = ch * su;
        a.Xw[2] = 0.0;
    } else {
        a.X[0] = ch * cu;
        a.X[1] = ch * su;
        a.X[2] = w;
        a.Xu[0] = -ch * su;
        a.Xu[1] = ch * cu;
        a.Xu[2] = 0.0;
        a.Xw[0] = sh * cu;
        a.Xw[1] = sh * su;
        a.Xw[2] = 1.0;
    }
    a.lambda2 = ch * ch;
    return a;
}

double norm3(const double* v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// bridge crossing probability fraction, mirroring the radial simulator
double crossing_frac_up(double from, double to, double level, double b2dt, RngStream& rng) {
    double d0 = level - from, d1 = level - to;
    if (d0 <= 0.0) return 0.0;
    if (d1 <= 0.0) return d0 / (d0 - d1);
    if (b2dt <= 0.0) return -1.0;
    double expo = 2.0 * d0 * d1 / b2dt;
    if (expo > 36.8) return -1.0;
    if (rng.next_uniform() < std::exp(-expo)) return 0.5;
    return -1.0;
}

}  // namespace

double surface_start_w(SurfaceKind kind, double r0) {
    if (!(r0 > 0.0)) throw config_error("surface start needs r0 > 0");
    if (kind == SurfaceKind::helicoid) return std::asinh(r0);
    // catenoid: solve cosh²w + w² = r0², needs r0 >= 1 (the neck radius)
    if (!(r0 >= 1.0)) throw config_error("catenoid ambient radius is at least 1");
    double lo = 0.0, hi = std::asinh(r0) + 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double f = std::cosh(mid) * std::cosh(mid) + mid * mid - r0 * r0;
        (f < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SurfaceResult simulate_surface_path(SurfaceKind kind, const SurfaceControls& c,
                                    const RecordOptions& rec, double u0, double w0,
                                    RngStream rng, std::uint64_t path_index) {
    SurfaceResult res;
    PathRecord& out = res.rec;
    out.path_index = path_index;
    out.m = 3;

    double u = u0, w = w0;
    Ambient a = chart(kind, u, w);
    double r = norm3(a.X);
    double t = 0.0, z = 0.0;
    std::uint64_t steps = 0;

    const bool trace = rec.trace != TraceMode::none;
    const bool trace_theta = rec.trace == TraceMode::full;
    const bool every_step = rec.decimation_ratio <= 1.0;
    double next_rec_t = 0.0;

    StopReason reason = StopReason::running;
    while (reason == StopReason::running) {
        if (steps >= c.max_steps) {
            reason = StopReason::step_limit;
            break;
        }
        double dt = 0.5 * c.eta * c.eta * r * r;  // intrinsic step len ~ eta·r
        dt = std::min(dt, c.dt_max);
        dt = std::max(dt, c.dt_min);
        bool clamped = false;
        if (t + dt >= c.t_max) {
            dt = c.t_max - t;
            clamped = true;
            if (dt <= 0.0) {
                reason = StopReason::horizon;
                break;
            }
        }

        double lam = std::sqrt(a.lambda2);
        double xi1 = rng.next_normal();
        double xi2 = rng.next_normal();
        double du = std::sqrt(dt) / lam * xi1;
        double dw = std::sqrt(dt) / lam * xi2;

        double un = u + du, wn = w + dw;
        Ambient an = chart(kind, un, wn);
        double rn = norm3(an.X);

        // radial diffusion scale: |grad of the ambient radius along the surface|
        double fu = (a.X[0] * a.Xu[0] + a.X[1] * a.Xu[1] + a.X[2] * a.Xu[2]) / r;
        double fw = (a.X[0] * a.Xw[0] + a.X[1] * a.Xw[1] + a.X[2] * a.Xw[2]) / r;
        double b2 = (fu * fu + fw * fw) / a.lambda2;

        double dt_used = dt;
        if (std::isfinite(c.r_outer)) {
            double f = crossing_frac_up(r, rn, c.r_outer, b2 * dt, rng);
            if (f >= 0.0) {
                reason = StopReason::hit_outer;
                dt_used = std::max(f, 1e-6) * dt;
            }
        }

        for (int i = 0; i < 3; ++i) {
            double dxi = an.X[i] - a.X[i];
            res.sum_dx[i] += dxi;
            res.sum_dx2[i] += dxi * dxi;
        }

        z += 0.5 * dt_used * (1.0 / (r * r) + 1.0 / (rn * rn));
        t += dt_used;
        u = un;
        w = wn;
        a = an;
        r = rn;
        steps += 1;
        out.min_r = std::min(out.min_r, r);

        if (trace && t >= rec.trace_start_t && (every_step || t >= next_rec_t)) {
            out.t.push_back(t);
            out.r.push_back(reason == StopReason::hit_outer ? c.r_outer : r);
            out.z.push_back(z);
            if (trace_theta)
                for (int i = 0; i < 3; ++i) out.theta.push_back(a.X[i] / r);
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
    out.r_end = (reason == StopReason::hit_outer) ? c.r_outer : r;
    out.z_end = z;
    out.theta_end = {a.X[0] / r, a.X[1] / r, a.X[2] / r};
    out.steps = steps;
    return res;
}

}  // namespace mlab
