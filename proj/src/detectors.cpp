#include "mlab/detectors.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

double angle_between(const double* a, const double* b, int m) {
    double dot = 0.0;
    for (int i = 0; i < m; ++i) dot += a[i] * b[i];
    return std::acos(std::clamp(dot, -1.0, 1.0));
}

}  // namespace

BinomialCI wilson_ci99(std::uint64_t successes, std::uint64_t trials) {
    BinomialCI ci;
    ci.successes = successes;
    ci.trials = trials;
    if (trials == 0) return ci;
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = kZ99 * kZ99;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = kZ99 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    ci.fraction = p;
    ci.lo = std::max(0.0, center - half);
    ci.hi = std::min(1.0, center + half);
    return ci;
}

EnsembleStats compute_ensemble_stats(const std::vector<PathRecord>& paths) {
    EnsembleStats st;
    st.n_paths = paths.size();
    if (paths.empty()) return st;
    const std::size_t n_levels = paths.front().levels.size();
    const std::size_t n_returns = paths.front().returns.size();
    st.levels.resize(n_levels);
    st.returns.resize(n_returns);
    for (std::size_t i = 0; i < n_levels; ++i) st.levels[i].level = paths.front().levels[i].level;
    for (std::size_t i = 0; i < n_returns; ++i) {
        st.returns[i].a = paths.front().returns[i].a;
        st.returns[i].k = paths.front().returns[i].k;
    }

    std::vector<double> z_ends;
    z_ends.reserve(paths.size());
    st.min_r = std::numeric_limits<double>::infinity();
    std::uint64_t censored = 0;
    std::vector<double> hit_mean(n_levels, 0.0), hit_m2(n_levels, 0.0);

    for (const auto& p : paths) {
        if (p.levels.size() != n_levels || p.returns.size() != n_returns)
            throw internal_error("inconsistent watch layout across paths");
        st.steps_total += p.steps;
        st.stop_reasons[to_string(p.stop)] += 1;
        if (p.stop == StopReason::horizon || p.stop == StopReason::step_limit) censored += 1;
        st.min_r = std::min(st.min_r, p.min_r);
        st.mean_t_end += p.t_end;
        st.mean_r_end += p.r_end;
        st.mean_z_end += p.z_end;
        z_ends.push_back(p.z_end);
        for (std::size_t i = 0; i < n_levels; ++i) {
            const auto& lw = p.levels[i];
            auto& ls = st.levels[i];
            if (lw.hit()) {
                ls.hits += 1;
                double d = lw.t_hit - hit_mean[i];
                hit_mean[i] += d / static_cast<double>(ls.hits);
                hit_m2[i] += d * (lw.t_hit - hit_mean[i]);
            } else {
                ls.censored += 1;
            }
        }
        for (std::size_t i = 0; i < n_returns; ++i) {
            const auto& rw = p.returns[i];
            auto& rs = st.returns[i];
            if (!rw.reached_k()) {
                rs.never_reached_k += 1;
                continue;
            }
            rs.reached_k += 1;
            if (rw.returned())
                rs.returned += 1;
            else if (p.stop == StopReason::horizon || p.stop == StopReason::step_limit)
                rs.censored_watching += 1;
        }
    }
    double np = static_cast<double>(st.n_paths);
    st.mean_t_end /= np;
    st.mean_r_end /= np;
    st.mean_z_end /= np;
    st.median_z_end = median_of(std::move(z_ends));
    st.censored_fraction = static_cast<double>(censored) / np;
    for (std::size_t i = 0; i < n_levels; ++i) {
        auto& ls = st.levels[i];
        ls.mean_t = hit_mean[i];
        ls.var_t = ls.hits > 1 ? hit_m2[i] / static_cast<double>(ls.hits - 1) : 0.0;
        ls.se_t = ls.hits > 0 ? std::sqrt(ls.var_t / static_cast<double>(ls.hits)) : 0.0;
    }
    for (auto& rs : st.returns) rs.ci = wilson_ci99(rs.returned, rs.reached_k);
    return st;
}

double bessel_return_bound(double a, double k, int n) {
    if (!(a < k) || !(a > 0.0)) throw config_error("return bound needs 0 < a < k");
    if (n < 3) throw config_error("flat return bound needs n >= 3");
    return std::pow(a / k, n - 2);
}

double log_regime_return_bound(double a, double k, double eps) {
    if (!(a < k) || !(a > 1.0)) throw config_error("log regime bound needs 1 < a < k");
    if (!(eps > 0.0)) throw config_error("log regime bound needs eps > 0");
    return std::pow(std::log(a) / std::log(k), 1.0 + eps);
}

double radial_hit_probability(const WarpFunction& warp, int n, double alpha, double r0,
                              double a, double b) {
    if (!(a < r0 && r0 < b)) throw config_error("radial_hit_probability needs a < r0 < b");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("alpha must be in (0,1]");
    double beta = (static_cast<double>(n) - alpha * alpha) / (alpha * alpha);
    double lga = warp.log_g(a);
    // scale function s(x) = ∫_a^x (G(a)/G(rho))^beta d rho via Simpson in log space
    auto scale_to = [&](double x) {
        const int cells = 4096;
        double ua = std::log(a), ux = std::log(x);
        double h = (ux - ua) / (2.0 * cells);
        auto f = [&](double u) {
            double rho = std::exp(u);
            return rho * std::exp(-beta * (warp.log_g(rho) - lga));
        };
        double sum = f(ua) + f(ux);
        for (int i = 1; i < 2 * cells; ++i) sum += f(ua + h * i) * (i % 2 ? 4.0 : 2.0);
        return sum * h / 3.0;
    };
    double sb = scale_to(b);
    double s0 = scale_to(r0);
    return (sb - s0) / sb;  // s(a) = 0
}

Verdict hitting_time_bound_check(const EnsembleStats& stats, std::size_t level_index, int n,
                                 double r0, bool exact_oracle) {
    if (level_index >= stats.levels.size())
        throw config_error("hitting_time_bound_check: no such monitored level");
    const auto& ls = stats.levels[level_index];
    double bound = (ls.level * ls.level - r0 * r0) / static_cast<double>(n);
    Verdict v;
    v.name = "hitting_time_bound(C=" + std::to_string(ls.level) + ")";
    v.diagnostics["level"] = ls.level;
    v.diagnostics["bound"] = bound;
    v.diagnostics["hits"] = static_cast<double>(ls.hits);
    v.diagnostics["censored"] = static_cast<double>(ls.censored);
    if (ls.hits < 100) {
        v.kind = "inconclusive";
        v.note = "insufficient uncensored hits";
        return v;
    }
    v.diagnostics["mean"] = ls.mean_t;
    v.diagnostics["se"] = ls.se_t;
    if (exact_oracle)
        v.passed = std::abs(ls.mean_t - bound) <= 3.0 * ls.se_t;
    else
        v.passed = ls.mean_t <= bound + 3.0 * ls.se_t;
    v.kind = v.passed ? "pass" : "fail";
    return v;
}

Verdict return_probability_check(const EnsembleStats& stats, std::size_t pair_index,
                                 double bound, const std::string& label) {
    if (pair_index >= stats.returns.size())
        throw config_error("return_probability_check: no such return pair");
    const auto& rs = stats.returns[pair_index];
    Verdict v;
    v.name = "return_probability(" + label + ")";
    v.diagnostics["a"] = rs.a;
    v.diagnostics["k"] = rs.k;
    v.diagnostics["bound"] = bound;
    v.diagnostics["denominator"] = static_cast<double>(rs.reached_k);
    v.diagnostics["returned"] = static_cast<double>(rs.returned);
    v.diagnostics["censored_watching"] = static_cast<double>(rs.censored_watching);
    v.diagnostics["never_reached_k"] = static_cast<double>(rs.never_reached_k);
    if (rs.reached_k < 100) {
        v.kind = "inconclusive";
        v.note = "insufficient paths reached k";
        return v;
    }
    v.diagnostics["fraction"] = rs.ci.fraction;
    v.diagnostics["ci_lo"] = rs.ci.lo;
    v.diagnostics["ci_hi"] = rs.ci.hi;
    v.diagnostics["strict_upper_pass"] = rs.ci.hi <= bound ? 1.0 : 0.0;
    v.passed = rs.ci.lo <= bound;
    v.kind = v.passed ? "transient" : "fail";
    return v;
}

Verdict transience_verdict(const EnsembleStats& stats, const std::vector<double>& bounds) {
    if (bounds.size() != stats.returns.size())
        throw config_error("transience_verdict needs one bound per return pair");
    Verdict v;
    v.name = "transience";
    bool all_pass = true;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        Verdict sub = return_probability_check(stats, i, bounds[i], "pair" + std::to_string(i));
        if (sub.kind == "inconclusive") {
            v.kind = "inconclusive";
            v.note = sub.note;
            return v;
        }
        all_pass = all_pass && sub.passed;
        v.diagnostics["fraction_" + std::to_string(i)] = sub.diagnostics["fraction"];
        v.diagnostics["bound_" + std::to_string(i)] = bounds[i];
    }
    if (stats.returns.size() >= 3) {
        // pairs are compared in listed order, which is expected to be
        // increasing k; only enforceable when the stats carry the k values
        bool ks_known = true;
        for (const auto& rs : stats.returns) ks_known = ks_known && rs.k > 0.0;
        for (std::size_t i = 0; i + 1 < stats.returns.size(); ++i) {
            if (ks_known && !(stats.returns[i].k < stats.returns[i + 1].k))
                throw config_error("transience_verdict expects pairs sorted by k");
            double slack = (stats.returns[i].ci.hi - stats.returns[i].ci.lo +
                            stats.returns[i + 1].ci.hi - stats.returns[i + 1].ci.lo) /
                           2.0;
            if (stats.returns[i + 1].ci.fraction > stats.returns[i].ci.fraction + slack)
                all_pass = false;
        }
    }
    v.passed = all_pass;
    v.kind = all_pass ? "transient" : "fail";
    return v;
}

Verdict theta_convergence_classify(const std::vector<PathRecord>& paths,
                                   const ClassifyParams& params) {
    Verdict v;
    v.name = "theta_classification";
    if (paths.empty()) {
        v.kind = "inconclusive";
        v.note = "no paths";
        return v;
    }
    const int m = paths.front().m;
    std::uint64_t censored = 0;
    std::vector<double> dz_half, diam;
    std::uint64_t thin_paths = 0;

    for (const auto& p : paths) {
        bool truncated = p.stop == StopReason::step_limit ||
                         (!params.horizon_is_protocol && p.stop == StopReason::horizon);
        if (p.t.empty() || p.theta.empty()) {
            censored += 1;
            thin_paths += 1;
            continue;
        }
        const double T = p.t_end;

        // z at T/2, linear interpolation on the decimated samples
        double half = 0.5 * T;
        auto it = std::lower_bound(p.t.begin(), p.t.end(), half);
        double z_half;
        if (it == p.t.begin()) {
            z_half = p.z.front() * (half / p.t.front());  // before first sample: z ~ linear
        } else if (it == p.t.end()) {
            z_half = p.z.back();
        } else {
            std::size_t j = static_cast<std::size_t>(it - p.t.begin());
            double w = (half - p.t[j - 1]) / (p.t[j] - p.t[j - 1]);
            z_half = p.z[j - 1] + w * (p.z[j] - p.z[j - 1]);
        }
        dz_half.push_back(std::max(0.0, p.z_end - z_half));

        // tail window samples (plus the final state)
        double t_lo = params.window * T;
        std::size_t first =
            static_cast<std::size_t>(std::lower_bound(p.t.begin(), p.t.end(), t_lo) - p.t.begin());
        std::size_t count = p.t.size() - first;
        if (count + 1 < 10) {
            censored += 1;
            thin_paths += 1;
            continue;
        }
        if (truncated) censored += 1;
        // subsample to bound the O(k²) pairwise sweep
        std::size_t stride = 1 + count / 128;
        std::vector<const double*> pts;
        for (std::size_t j = first; j < p.t.size(); j += stride)
            pts.push_back(&p.theta[j * static_cast<std::size_t>(m)]);
        pts.push_back(p.theta_end.data());
        double d = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                d = std::max(d, angle_between(pts[i], pts[j], m));
        diam.push_back(d);
    }

    double cfrac = static_cast<double>(censored) / static_cast<double>(paths.size());
    v.diagnostics["censored_fraction"] = cfrac;
    v.diagnostics["qualified_paths"] = static_cast<double>(diam.size());
    v.diagnostics["thin_paths"] = static_cast<double>(thin_paths);
    if (cfrac > params.censored_cap) {
        v.kind = "inconclusive";
        v.note = "censored fraction above cap";
        return v;
    }
    if (diam.size() * 2 < paths.size()) {
        v.kind = "inconclusive";
        v.note = "fewer than 10 tail samples on most paths";
        return v;
    }

    double med_dz = median_of(dz_half);
    double med_diam = median_of(diam);
    std::size_t above_floor = 0;
    for (double d : diam)
        if (d > params.osc_floor) above_floor += 1;
    double frac_above = static_cast<double>(above_floor) / static_cast<double>(diam.size());

    v.diagnostics["median_dz_half"] = med_dz;
    v.diagnostics["median_tail_diameter"] = med_diam;
    v.diagnostics["fraction_diameter_above_floor"] = frac_above;
    v.diagnostics["z_plateau_tol"] = params.z_plateau_tol();
    v.diagnostics["z_growth_floor"] = params.z_growth_floor();
    v.diagnostics["osc_tol"] = params.osc_tol;
    v.diagnostics["osc_floor"] = params.osc_floor;
    v.diagnostics["window"] = params.window;

    if (med_dz < params.z_plateau_tol() && med_diam < params.osc_tol) {
        v.kind = "theta_converges";
        v.passed = true;
    } else if (med_dz > params.z_growth_floor() && frac_above >= 0.9) {
        v.kind = "theta_diverges";
        v.passed = true;
    } else {
        v.kind = "inconclusive";
    }
    return v;
}

Verdict shrinking_exit_check(const std::vector<ExitBatch>& batches, double delta,
                             bool convergent_regime) {
    if (!convergent_regime)
        throw internal_error("shrinking_exit_check applies to the convergent regime only");
    if (batches.size() < 2) throw config_error("shrinking_exit_check needs >= 2 r0 batches");
    Verdict v;
    v.name = "shrinking_exit";
    v.diagnostics["delta"] = delta;
    std::vector<BinomialCI> cis;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto& batch = batches[b];
        if (b > 0 && !(batch.r0 > batches[b - 1].r0))
            throw config_error("shrinking_exit_check batches must have increasing r0");
        std::uint64_t inside = 0, total = 0;
        for (const auto& p : *batch.paths) {
            if (p.stop != StopReason::hit_outer) continue;  // exit proxy never reached
            total += 1;
            if (angle_between(p.theta_end.data(), batch.theta0.data(), p.m) < delta) inside += 1;
        }
        BinomialCI ci = wilson_ci99(inside, total);
        cis.push_back(ci);
        std::string tag = "r0_" + std::to_string(batch.r0);
        v.diagnostics["fraction_" + tag] = ci.fraction;
        v.diagnostics["ci_lo_" + tag] = ci.lo;
        v.diagnostics["ci_hi_" + tag] = ci.hi;
    }
    const BinomialCI& last = cis.back();
    double hw_last = 0.5 * (last.hi - last.lo);
    bool pass = last.fraction >= 1.0 - delta - hw_last;
    for (std::size_t i = 0; i + 1 < cis.size(); ++i) {
        double slack = 0.5 * (cis[i].hi - cis[i].lo) + 0.5 * (cis[i + 1].hi - cis[i + 1].lo);
        if (cis[i + 1].fraction < cis[i].fraction - slack) pass = false;
    }
    v.passed = pass;
    v.kind = pass ? "pass" : "fail";
    return v;
}

BinomialCI exit_distribution(const std::vector<PathRecord>& paths, const SphericalCap& cap,
                             bool convergent_regime) {
    if (!convergent_regime)
        throw internal_error("exit_distribution applies to the convergent regime only");
    if (paths.empty()) throw config_error("exit_distribution needs paths");
    const int m = paths.front().m;
    if (static_cast<int>(cap.center.size()) != m)
        throw config_error("cap center dimension mismatch");
    double n2 = 0.0;
    for (double x : cap.center) n2 += x * x;
    if (std::abs(n2 - 1.0) > 1e-8) throw config_error("cap center must be a unit vector");
    std::uint64_t inside = 0, total = 0;
    for (const auto& p : paths) {
        if (p.stop != StopReason::hit_outer) continue;
        total += 1;
        bool in = angle_between(p.theta_end.data(), cap.center.data(), m) <= cap.radius;
        if (in != cap.complement) inside += 1;
    }
    return wilson_ci99(inside, total);
}

Verdict exit_profile_nonconstant(const std::vector<BinomialCI>& grid) {
    if (grid.size() < 2) throw config_error("exit profile needs >= 2 grid points");
    Verdict v;
    v.name = "exit_profile_nonconstant";
    double best_gap = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v.diagnostics["p_" + std::to_string(i)] = grid[i].fraction;
        for (std::size_t j = i + 1; j < grid.size(); ++j) {
            double hw = 0.5 * (grid[i].hi - grid[i].lo) + 0.5 * (grid[j].hi - grid[j].lo);
            best_gap = std::max(best_gap, std::abs(grid[i].fraction - grid[j].fraction) - hw);
        }
    }
    v.diagnostics["best_gap_beyond_ci"] = best_gap;
    v.passed = best_gap > 0.0;
    v.kind = v.passed ? "pass" : "fail";
    return v;
}

double drift_functional_value(DriftFunctional f, double param, double r) {
    switch (f) {
        case DriftFunctional::inv_r:
            return 1.0 / r;
        case DriftFunctional::inv_log_pow:
            return std::pow(std::log(r), -param);
        case DriftFunctional::neg_inv_log_pow:
            return -std::pow(std::log(r), -param);
        case DriftFunctional::logloglog:
            return std::log(std::log(std::log(r)));
    }
    throw internal_error("unreachable drift functional");
}

Verdict drift_sign_check(const std::vector<double>& per_path_sums, int expected_sign,
                         const std::string& label) {
    Verdict v;
    v.name = "drift_sign(" + label + ")";
    if (per_path_sums.size() < 100) {
        v.kind = "inconclusive";
        v.note = "region never visited by enough paths";
        return v;
    }
    double mean = 0.0;
    for (double s : per_path_sums) mean += s;
    mean /= static_cast<double>(per_path_sums.size());
    double var = 0.0;
    for (double s : per_path_sums) var += (s - mean) * (s - mean);
    var /= static_cast<double>(per_path_sums.size() - 1);
    double se = std::sqrt(var / static_cast<double>(per_path_sums.size()));
    v.diagnostics["mean_increment_sum"] = mean;
    v.diagnostics["se"] = se;
    v.diagnostics["paths"] = static_cast<double>(per_path_sums.size());
    v.passed = expected_sign > 0 ? (mean >= -3.0 * se) : (mean <= 3.0 * se);
    v.kind = v.passed ? "pass" : "fail";
    return v;
}

}  // namespace mlab
