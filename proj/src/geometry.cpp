#include "mlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

constexpr double kTableRMin = 1e-6;
constexpr double kGridRatio = 1.01;

// C3 ramp: 0 at u<=0, 1 at u>=1. Three continuous derivatives keep the
// finite-difference residual verification at its nominal order through the
// blend region (a C1 ramp leaves ~1e-5 truncation spikes at the ends).
double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}

double log_family_k(double r, double c) {
    double L = std::log(r);
    return -c / (r * r * L);
}

// K for G ~ r (log r)^(1/2) (log log r)^(1/2): K = -(x + y - x² - y²)/r²
// with x = 1/(2 log r), y = 1/(2 log r · log log r). Negative once y < 1.
double log_sqrt_k(double r) {
    double L = std::log(r);
    double M = std::log(L);
    double x = 0.5 / L;
    double y = 0.5 / (L * M);
    return -(x + y - x * x - y * y) / (r * r);
}

}  // namespace

CurvatureProfile CurvatureProfile::euclidean() {
    CurvatureProfile p;
    p.kind_ = ProfileKind::euclidean;
    return p;
}

CurvatureProfile CurvatureProfile::hyperbolic(double a) {
    if (!(a > 0.0)) throw config_error("hyperbolic profile needs a > 0");
    CurvatureProfile p;
    p.kind_ = ProfileKind::hyperbolic;
    p.a_ = a;
    return p;
}

CurvatureProfile CurvatureProfile::log_family(double c, double blend_radius) {
    if (!(c > 0.0)) throw config_error("log_family profile needs c > 0");
    if (!(blend_radius >= 1.5))
        throw config_error("log_family blend_radius must be >= 1.5 (K is singular at r = 1)");
    CurvatureProfile p;
    p.kind_ = ProfileKind::log_family;
    p.c_ = c;
    p.blend_radius_ = blend_radius;
    return p;
}

CurvatureProfile CurvatureProfile::log_sqrt(double blend_radius) {
    if (!(blend_radius >= 6.0))
        throw config_error("log_sqrt blend_radius must be >= 6 (formula positive below)");
    CurvatureProfile p;
    p.kind_ = ProfileKind::log_sqrt;
    p.blend_radius_ = blend_radius;
    return p;
}

CurvatureProfile CurvatureProfile::custom(std::function<double(double)> k) {
    if (!k) throw config_error("custom profile needs a callable");
    CurvatureProfile p;
    p.kind_ = ProfileKind::custom_fn;
    p.fn_ = std::move(k);
    return p;
}

CurvatureProfile CurvatureProfile::custom_table(std::vector<double> r, std::vector<double> k) {
    if (r.size() != k.size() || r.size() < 2)
        throw config_error("custom_table needs >= 2 equally sized (r, K) samples");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || (i > 0 && !(r[i] > r[i - 1])))
            throw config_error("custom_table radii must be positive and strictly increasing");
        if (!(k[i] <= 1e-9)) throw config_error("custom_table curvature must be nonpositive");
    }
    CurvatureProfile p;
    p.kind_ = ProfileKind::custom_table;
    p.table_r_ = std::move(r);
    p.table_k_ = std::move(k);
    return p;
}

double CurvatureProfile::operator()(double r) const {
    switch (kind_) {
        case ProfileKind::euclidean:
            return 0.0;
        case ProfileKind::hyperbolic:
            return -a_ * a_;
        case ProfileKind::log_family: {
            double w = smoothstep(r - blend_radius_);
            return w == 0.0 ? 0.0 : w * log_family_k(r, c_);
        }
        case ProfileKind::log_sqrt: {
            double w = smoothstep(r - blend_radius_);
            return w == 0.0 ? 0.0 : w * log_sqrt_k(r);
        }
        case ProfileKind::custom_fn:
            return fn_(r);
        case ProfileKind::custom_table: {
            if (r <= table_r_.front()) return table_k_.front();
            if (r >= table_r_.back()) return table_k_.back();
            auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
            std::size_t i = static_cast<std::size_t>(it - table_r_.begin()) - 1;
            double t = (r - table_r_[i]) / (table_r_[i + 1] - table_r_[i]);
            return table_k_[i] + t * (table_k_[i + 1] - table_k_[i]);
        }
    }
    throw internal_error("unreachable profile kind");
}

std::string CurvatureProfile::describe() const {
    char buf[128];
    switch (kind_) {
        case ProfileKind::euclidean:
            return "euclidean";
        case ProfileKind::hyperbolic:
            std::snprintf(buf, sizeof buf, "hyperbolic(a=%.17g)", a_);
            return buf;
        case ProfileKind::log_family:
            std::snprintf(buf, sizeof buf, "log_family(c=%.17g,blend=%.17g)", c_, blend_radius_);
            return buf;
        case ProfileKind::log_sqrt:
            std::snprintf(buf, sizeof buf, "log_sqrt(blend=%.17g)", blend_radius_);
            return buf;
        case ProfileKind::custom_fn:
            return "custom_fn";
        case ProfileKind::custom_table:
            std::snprintf(buf, sizeof buf, "custom_table(n=%zu)", table_r_.size());
            return buf;
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ODE solve: Dormand-Prince 5(4), adaptive, landing exactly on each grid node.
//
// The march runs in x = log r on d(x) = log(G/r), the quantity the table
// stores. G'' + K G = 0 becomes d'' = -(d' + d'^2 + K r^2). Integrating d
// directly keeps rounding relative to d itself; recovering d from a G-space
// solve as log(G) - x loses ~ulp(|log r|) per node to cancellation, which the
// residual verification would amplify by 1/r at the small-r end of the grid.

namespace {

struct State2 {
    double d;
    double dp;
};

struct Dopri {
    const CurvatureProfile& K;

    State2 f(double x, State2 y) const {
        double r = std::exp(x);
        return {y.dp, -(y.dp + y.dp * y.dp + K(r) * r * r)};
    }

    // One accepted step from (x, y) of size at most h_try, not passing x_end.
    // Returns actual step size; updates y and the error-controlled h_next.
    double step(double x, State2& y, double h_try, double rtol, double& h_next) const {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

        double h = h_try;
        for (int tries = 0; tries < 60; ++tries) {
            State2 k1 = f(x, y);
            State2 k2 = f(x + h * a21, {y.d + h * a21 * k1.d, y.dp + h * a21 * k1.dp});
            State2 k3 = f(x + h * 0.3, {y.d + h * (a31 * k1.d + a32 * k2.d),
                                        y.dp + h * (a31 * k1.dp + a32 * k2.dp)});
            State2 k4 = f(x + h * 0.8, {y.d + h * (a41 * k1.d + a42 * k2.d + a43 * k3.d),
                                        y.dp + h * (a41 * k1.dp + a42 * k2.dp + a43 * k3.dp)});
            State2 k5 = f(x + h * (8.0 / 9),
                          {y.d + h * (a51 * k1.d + a52 * k2.d + a53 * k3.d + a54 * k4.d),
                           y.dp + h * (a51 * k1.dp + a52 * k2.dp + a53 * k3.dp + a54 * k4.dp)});
            State2 k6 = f(x + h,
                          {y.d + h * (a61 * k1.d + a62 * k2.d + a63 * k3.d + a64 * k4.d + a65 * k5.d),
                           y.dp + h * (a61 * k1.dp + a62 * k2.dp + a63 * k3.dp + a64 * k4.dp +
                                       a65 * k5.dp)});
            State2 y5 = {y.d + h * (b1 * k1.d + b3 * k3.d + b4 * k4.d + b5 * k5.d + b6 * k6.d),
                         y.dp + h * (b1 * k1.dp + b3 * k3.dp + b4 * k4.dp + b5 * k5.dp + b6 * k6.dp)};
            State2 k7 = f(x + h, y5);

            double err_d = h * (e1 * k1.d + e3 * k3.d + e4 * k4.d + e5 * k5.d + e6 * k6.d + e7 * k7.d);
            double err_dp =
                h * (e1 * k1.dp + e3 * k3.dp + e4 * k4.dp + e5 * k5.dp + e6 * k6.dp + e7 * k7.dp);
            // Absolute floor: d is exactly zero ahead of a curvature onset, and a
            // purely relative scale would pin the step size at the wall there.
            double sc_d = 1e-13 + rtol * std::max(std::abs(y.d), std::abs(y5.d));
            double sc_dp = 1e-13 + rtol * std::max(std::abs(y.dp), std::abs(y5.dp));
            double err = std::max(std::abs(err_d) / sc_d, std::abs(err_dp) / sc_dp);

            if (!std::isfinite(y5.d) || !std::isfinite(y5.dp))
                throw numeric_error("warp solve overflowed; reduce r_max");

            if (err <= 1.0) {
                y = y5;
                double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                h_next = h * std::clamp(fac, 1.0, 5.0);
                return h;
            }
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.7);
        }
        throw numeric_error("warp solve step control failed to converge");
    }

    void advance_to(double& x, State2& y, double x_end, double rtol, double& h) const {
        while (x < x_end) {
            double h_try = std::min(h, x_end - x);
            double h_next = h;
            double taken = step(x, y, h_try, rtol, h_next);
            x += taken;
            h = h_next;
        }
    }
};

}  // namespace

WarpFunction solve_jacobi(const CurvatureProfile& profile, double r_max, double rel_tol,
                          bool force_table) {
    if (!(r_max > kTableRMin * 100))
        throw config_error("solve_jacobi: r_max too small");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2))
        throw config_error("solve_jacobi: rel_tol out of range");

    if (!force_table) {
        WarpFunction w;
        w.r_max_ = r_max;
        if (profile.kind() == ProfileKind::euclidean) {
            w.closed_ = WarpFunction::Closed::flat;
            return w;
        }
        if (profile.kind() == ProfileKind::hyperbolic) {
            w.closed_ = WarpFunction::Closed::sinh;
            w.a_ = profile.a();
            return w;
        }
    }

    const double x0 = std::log(kTableRMin);
    const double x1 = std::log(r_max);
    const std::size_t n =
        2 + static_cast<std::size_t>(std::ceil((x1 - x0) / std::log(kGridRatio)));
    const double dx = (x1 - x0) / static_cast<double>(n - 1);

    WarpFunction w;
    w.r_max_ = r_max;
    w.x0_ = x0;
    w.dx_ = dx;
    w.nodes_x_.resize(n);
    w.nodes_d_.resize(n);
    w.slope_.resize(n);

    Dopri ode{profile};
    double rtol = std::min(rel_tol * 1e-2, 1e-9);

    // Series start d = -K r^2/6 + O(r^4); exact zero for all blended kinds.
    double k0 = profile(kTableRMin);
    if (k0 > 1e-9) throw config_error("curvature profile must be nonpositive");
    double x = x0;
    State2 y = {-k0 * kTableRMin * kTableRMin / 6.0, -k0 * kTableRMin * kTableRMin / 3.0};
    double h = 0.5 * dx;

    for (std::size_t i = 0; i < n; ++i) {
        double xi = (i + 1 == n) ? x1 : x0 + dx * static_cast<double>(i);
        if (xi > x) ode.advance_to(x, y, xi, rtol, h);
        double ri = std::exp(xi);
        if (profile(ri) > 1e-9) throw config_error("curvature profile must be nonpositive");
        // slope = d log G / d log r - 1 = d'; nonnegative whenever K <= 0.
        if (y.dp < -1e-9)
            throw numeric_error("warp solve violated G'/G >= 1/r (is K <= 0?)");
        w.nodes_x_[i] = xi;
        w.nodes_d_[i] = y.d;
        w.slope_[i] = y.dp;
    }

    double resid = w.max_ode_residual(profile);
    if (resid > std::max(rel_tol, 1e-6))
        throw numeric_error("warp table residual " + std::to_string(resid) +
                            " exceeds tolerance");
    return w;
}

std::size_t WarpFunction::cell(double x) const {
    std::size_t n = nodes_x_.size();
    if (dx_ > 0.0) {
        double u = (x - x0_) / dx_;
        if (u <= 0.0) return 0;
        std::size_t i = static_cast<std::size_t>(u);
        return std::min(i, n - 2);
    }
    auto it = std::upper_bound(nodes_x_.begin(), nodes_x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - nodes_x_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, n - 2);
}

void WarpFunction::eval_table(double r, double& d, double& dprime) const {
    double x = std::log(r);
    if (x <= nodes_x_.front()) {
        // series region: deviation from flat decays quadratically toward 0
        double q = std::exp(2.0 * (x - nodes_x_.front()));
        d = nodes_d_.front() * q;
        dprime = 2.0 * d;
        return;
    }
    std::size_t i = cell(x);
    double xa = nodes_x_[i], xb = nodes_x_[i + 1];
    double hx = xb - xa;
    if (x >= nodes_x_.back()) {
        // log-linear extension past the table, constant slope
        d = nodes_d_.back() + slope_.back() * (x - nodes_x_.back());
        dprime = slope_.back();
        return;
    }
    double t = (x - xa) / hx;
    double da = nodes_d_[i], db = nodes_d_[i + 1];
    double ma = slope_[i] * hx, mb = slope_[i + 1] * hx;
    double t2 = t * t, t3 = t2 * t;
    d = (2 * t3 - 3 * t2 + 1) * da + (t3 - 2 * t2 + t) * ma + (-2 * t3 + 3 * t2) * db +
        (t3 - t2) * mb;
    dprime = ((6 * t2 - 6 * t) * da + (3 * t2 - 4 * t + 1) * ma + (6 * t - 6 * t2) * db +
              (3 * t2 - 2 * t) * mb) /
             hx;
}

double WarpFunction::g(double r) const {
    switch (closed_) {
        case Closed::flat:
            return r;
        case Closed::sinh:
            return std::sinh(a_ * r) / a_;
        case Closed::none:
            break;
    }
    double d, dp;
    eval_table(r, d, dp);
    return r * std::exp(d);
}

double WarpFunction::dg(double r) const {
    switch (closed_) {
        case Closed::flat:
            return 1.0;
        case Closed::sinh:
            return std::cosh(a_ * r);
        case Closed::none:
            break;
    }
    double d, dp;
    eval_table(r, d, dp);
    return std::exp(d) * (1.0 + dp);
}

double WarpFunction::log_g(double r) const {
    switch (closed_) {
        case Closed::flat:
            return std::log(r);
        case Closed::sinh: {
            double u = a_ * r;
            if (u > 20.0) return u - std::log(2.0 * a_) + std::log1p(-std::exp(-2.0 * u));
            return std::log(std::sinh(u) / a_);
        }
        case Closed::none:
            break;
    }
    double d, dp;
    eval_table(r, d, dp);
    return std::log(r) + d;
}

double WarpFunction::dlog_g(double r) const {
    switch (closed_) {
        case Closed::flat:
            return 1.0 / r;
        case Closed::sinh: {
            double u = a_ * r;
            if (u > 20.0) {
                double e = std::exp(-2.0 * u);
                return a_ * (1.0 + 2.0 * e / (1.0 - e));
            }
            return a_ / std::tanh(u);
        }
        case Closed::none:
            break;
    }
    double d, dp;
    eval_table(r, d, dp);
    return (1.0 + dp) / r;
}

double WarpFunction::inv_g(double r) const {
    switch (closed_) {
        case Closed::flat:
            return 1.0 / r;
        case Closed::sinh: {
            double u = a_ * r;
            if (u > 20.0) {
                double e = std::exp(-u);
                return 2.0 * a_ * e / (1.0 - e * e);
            }
            return a_ / std::sinh(u);
        }
        case Closed::none:
            break;
    }
    double d, dp;
    eval_table(r, d, dp);
    return std::exp(-d) / r;
}

double WarpFunction::inv_g_sq(double r) const {
    double v = inv_g(r);
    return v * v;
}

double WarpFunction::max_ode_residual(const CurvatureProfile& profile) const {
    if (!tabulated() || dx_ == 0.0) return 0.0;  // needs the uniform solver grid
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < nodes_x_.size(); ++i) {
        double hx = dx_;
        double dp = (-nodes_d_[i + 2] + 8 * nodes_d_[i + 1] - 8 * nodes_d_[i - 1] +
                     nodes_d_[i - 2]) /
                    (12 * hx);
        double dpp = (-nodes_d_[i + 2] + 16 * nodes_d_[i + 1] - 30 * nodes_d_[i] +
                      16 * nodes_d_[i - 1] - nodes_d_[i - 2]) /
                     (12 * hx * hx);
        double r = std::exp(nodes_x_[i]);
        double G = r * std::exp(nodes_d_[i]);
        double resid = std::abs(G * ((dpp + dp + dp * dp) / (r * r) + profile(r)));
        worst = std::max(worst, resid / std::max(1.0, G));
    }
    return worst;
}

void WarpFunction::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path + " for writing");
    out.precision(17);
    out << "r,G,Gprime\n";
    if (tabulated()) {
        for (std::size_t i = 0; i < nodes_x_.size(); ++i) {
            double r = std::exp(nodes_x_[i]);
            out << r << ',' << g(r) << ',' << dg(r) << '\n';
        }
    } else {
        double r = kTableRMin;
        while (r < r_max_ * (1.0 - 1e-12)) {
            out << r << ',' << g(r) << ',' << dg(r) << '\n';
            r *= kGridRatio;
        }
        out << r_max_ << ',' << g(r_max_) << ',' << dg(r_max_) << '\n';
    }
}

WarpFunction WarpFunction::import_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw config_error("empty warp csv " + path);
    WarpFunction w;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double r, g, dg;
        char c1, c2;
        if (!(ls >> r >> c1 >> g >> c2 >> dg) || c1 != ',' || c2 != ',')
            throw config_error("malformed warp csv row: " + line);
        if (!(r > 0.0) || !(g > 0.0))
            throw config_error("warp csv needs positive r and g");
        if (!w.nodes_x_.empty() && std::log(r) <= w.nodes_x_.back())
            throw config_error("warp csv radii must be strictly increasing");
        w.nodes_x_.push_back(std::log(r));
        w.nodes_d_.push_back(std::log(g / r));
        w.slope_.push_back(r * dg / g - 1.0);
    }
    if (w.nodes_x_.size() < 4) throw config_error("warp csv needs at least 4 rows");
    w.r_max_ = std::exp(w.nodes_x_.back());
    // keep the fast uniform path when spacing is uniform (our own exports)
    double h0 = w.nodes_x_[1] - w.nodes_x_[0];
    bool uniform = true;
    for (std::size_t i = 1; i + 1 < w.nodes_x_.size(); ++i)
        if (std::abs(w.nodes_x_[i + 1] - w.nodes_x_[i] - h0) > 1e-9 * std::max(1.0, std::abs(h0)))
            uniform = false;
    if (uniform) {
        w.x0_ = w.nodes_x_.front();
        w.dx_ = h0;
    }
    return w;
}

WarpEval warp_eval(const WarpFunction& w, double r) {
    if (!(r > 0.0)) throw config_error("warp_eval needs r > 0");
    return {w.g(r), w.dg(r)};
}

double radial_log_derivative(const WarpFunction& w, double r) {
    if (!(r > 0.0)) throw config_error("radial_log_derivative needs r > 0");
    return w.dlog_g(r);
}

}  // namespace mlab
