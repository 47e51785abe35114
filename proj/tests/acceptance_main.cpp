// Acceptance gate. Runs the shipped presets at their documented sizes plus a
// handful of direct oracle checks, and prints exactly one PASS/FAIL line per
// criterion. Every tolerance is written out here, next to the check it gates.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlab/detectors.hpp"
#include "mlab/experiments.hpp"
#include "mlab/geometry.hpp"

using namespace mlab;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

fs::path out_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() / "mlab_acceptance" / tag;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct PresetRun {
    RunResult result;
    double wall = 0.0;
};

PresetRun run_preset(const std::string& name, const char* tag,
                     const ExperimentConfig& overrides, std::uint64_t seed, int threads) {
    ExperimentConfig cfg = preset_config(name);
    for (const auto& [k, v] : overrides) cfg[k] = v;
    RunOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    opt.quiet = true;
    opt.out_dir = out_dir(tag).string();
    double t0 = now_seconds();
    PresetRun r;
    r.result = run_experiment(cfg, opt);
    r.wall = now_seconds() - t0;
    return r;
}

// first verdict whose name starts with the prefix
const ordered_json* find_verdict(const ordered_json& report, const std::string& prefix) {
    for (const auto& v : report.at("verdicts"))
        if (v.at("name").get<std::string>().rfind(prefix, 0) == 0) return &v;
    return nullptr;
}

int failures = 0;

void line(int idx, bool ok, const std::string& text) {
    if (!ok) ++failures;
    std::printf("[%2d/10] %s %s\n", idx, ok ? "PASS" : "FAIL", text.c_str());
    std::fflush(stdout);
}

std::string f3(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

}  // namespace

int main() {
    // 1. warp solver accuracy against the constant-curvature closed form,
    //    fed as an opaque custom profile so the table path is exercised
    {
        double t0 = now_seconds();
        WarpFunction warp =
            solve_jacobi(CurvatureProfile::custom([](double) { return -1.0; }), 12.0);
        double worst = 0.0;
        for (int i = 0; i <= 9900; ++i) {
            double r = 0.1 + i * 1e-3;
            worst = std::max(worst, std::abs(warp.g(r) / std::sinh(r) - 1.0));
        }
        double wall = now_seconds() - t0;
        bool ok = worst <= 1e-7 && wall < 1.0;
        line(1, ok, "warp solver: max rel err vs sinh on [0.1,10] = " + f3(worst) +
                        " (tol 1e-07), " + f3(wall) + " s (< 1 s)");
    }

    // 2 + 3. rank-3 flat transience preset at full size
    {
        PresetRun pr = run_preset("transience-n3-euclidean", "flat", {}, 2026, 1);
        const ordered_json& rep = pr.result.report;

        const ordered_json* hv = find_verdict(rep, "hitting_time_bound");
        double mean = hv ? hv->at("diagnostics").at("mean").get<double>() : -1.0;
        double se = hv ? hv->at("diagnostics").at("se").get<double>() : 0.0;
        bool ok2 = hv && hv->at("passed").get<bool>() && std::abs(mean - 8.0) <= 3.0 * se &&
                   pr.wall < 120.0;
        line(2, ok2, "flat n=3 exit time: mean = " + f3(mean) + " vs oracle 8 (band 3 se = " +
                         f3(3.0 * se) + "), " + f3(pr.wall) + " s (< 120 s)");

        const ordered_json* o10 = find_verdict(rep, "return_oracle(1,10)");
        const ordered_json* o100 = find_verdict(rep, "return_oracle(1,100)");
        const ordered_json* tv = find_verdict(rep, "transience");
        double f10 = o10 ? o10->at("diagnostics").at("fraction").get<double>() : -1.0;
        double f100 = o100 ? o100->at("diagnostics").at("fraction").get<double>() : -1.0;
        bool ok3 = o10 && o100 && tv && o10->at("passed").get<bool>() &&
                   o100->at("passed").get<bool>() && tv->at("passed").get<bool>();
        line(3, ok3, "flat return fractions: (1,10) = " + f3(f10) + " vs 0.1, (1,100) = " +
                         f3(f100) + " vs 0.01, inside 99% CI and never above the bound");
    }

    // 4. log-regime transience, n = 2
    {
        PresetRun pr = run_preset("transience-n2-log", "log", {}, 2026, 1);
        const ordered_json& rep = pr.result.report;
        double hi = rep.at("metrics").at("return_upper_ci").get<double>();
        double bound = rep.at("metrics").at("bound").get<double>();
        bool ok = rep.at("passed").get<bool>() && hi <= bound && pr.wall < 600.0;
        line(4, ok, "log regime n=2: return upper 99% CI = " + f3(hi) + " <= bound " +
                        f3(bound) + ", " + f3(pr.wall) + " s (< 600 s)");
    }

    // 5. sharp-threshold twins with horizon doubling
    {
        PresetRun pr = run_preset("angle-threshold-n3", "threshold", {}, 2026, 1);
        const ordered_json& rep = pr.result.report;
        const ordered_json* cv = find_verdict(rep, "theta_classification(converge)");
        const ordered_json* dv = find_verdict(rep, "theta_classification(diverge)");
        const ordered_json* s1 = find_verdict(rep, "stability(converge)");
        const ordered_json* s2 = find_verdict(rep, "stability(diverge)");
        double cens = rep.at("censored_fraction").get<double>();
        std::string ck = cv ? cv->at("kind").get<std::string>() : "missing";
        std::string dk = dv ? dv->at("kind").get<std::string>() : "missing";
        bool ok = cv && dv && s1 && s2 && ck == "theta_converges" && dk == "theta_diverges" &&
                  s1->at("passed").get<bool>() && s2->at("passed").get<bool>() && cens <= 0.20;
        line(5, ok, "threshold twins: c=1.0 -> " + ck + ", c=0.4 -> " + dk +
                        ", censored = " + f3(cens) + " (cap 0.2), stable under 2T");
    }

    // 6. shrinking exit caps, hyperbolic n = 2
    {
        PresetRun pr = run_preset("angle-convergence-hyperbolic-n2", "shrink", {}, 2026, 1);
        const ordered_json& rep = pr.result.report;
        const ordered_json* sv = find_verdict(rep, "shrinking_exit");
        double f20 =
            sv ? sv->at("diagnostics").at("fraction_r0_" + std::to_string(20.0)).get<double>()
               : -1.0;
        bool ok = sv && sv->at("passed").get<bool>() && f20 >= 0.8 &&
                  rep.at("passed").get<bool>();
        line(6, ok, "hyperbolic exit concentration: P(angle < 0.2 | r0=20) = " + f3(f20) +
                        " >= 0.8, nondecreasing in r0");
    }

    // 7. flat n = 2 non-convergence, radial preset and helicoid surface
    {
        PresetRun pe = run_preset("angle-nonconvergence-euclidean-n2", "flat2", {}, 2026, 1);
        PresetRun ph = run_preset("minimal-surface-helicoid", "heli", {}, 2026, 1);
        const ordered_json* mv = find_verdict(ph.result.report, "ambient_martingale");
        std::string ke = pe.result.report.at("verdict").get<std::string>();
        std::string kh = ph.result.report.at("verdict").get<std::string>();
        bool ok = ke == "theta_diverges" && kh == "theta_diverges" && mv &&
                  mv->at("passed").get<bool>() && pe.result.report.at("passed").get<bool>() &&
                  ph.result.report.at("passed").get<bool>();
        line(7, ok, "flat n=2 verdicts: radial -> " + ke + ", helicoid -> " + kh +
                        ", ambient drift within 3 se of 0 componentwise");
    }

    // 8. drift signs of the four comparison functionals in their regimes
    {
        const double e2 = std::exp(2.0), e3 = std::exp(3.0), e5 = std::exp(5.0);
        Verdict a = run_drift_experiment(DriftFunctional::inv_r, 0.0,
                                         CurvatureProfile::euclidean(), 3, 4, 10.0, 2.0, 50.0,
                                         -1, 4000, 811, 1, "1/r flat n=3");
        Verdict b = run_drift_experiment(DriftFunctional::inv_log_pow, 0.25,
                                         CurvatureProfile::log_family(1.5, 3.0), 2, 3, e3, e2,
                                         e5, -1, 4000, 812, 1, "(log r)^-1/4 log(1.5) n=2");
        Verdict c = run_drift_experiment(DriftFunctional::neg_inv_log_pow, 0.5,
                                         CurvatureProfile::log_family(1.0, 3.0), 3, 4, e3, e2,
                                         e5, +1, 4000, 813, 1, "-(log r)^-1/2 log(1.0) n=3");
        Verdict d = run_drift_experiment(DriftFunctional::logloglog, 0.0,
                                         CurvatureProfile::log_family(0.4, 3.0), 3, 4, e3, e2,
                                         e5, +1, 4000, 814, 1, "logloglog log(0.4) n=3");
        bool ok = a.passed && b.passed && c.passed && d.passed;
        line(8, ok, "drift signs: 1/r " + std::string(a.passed ? "ok" : "BAD") +
                        ", (log r)^-eps " + (b.passed ? "ok" : "BAD") + ", -(log r)^-alpha " +
                        (c.passed ? "ok" : "BAD") + ", logloglog " + (d.passed ? "ok" : "BAD") +
                        " (each within 3 se of its side)");
    }

    // 9. rank-2 distribution diffusion on H^3
    {
        PresetRun pr = run_preset("subriemannian-h3", "h3", {}, 2026, 1);
        const ordered_json& rep = pr.result.report;
        double hi = rep.at("metrics").at("return_upper_ci").get<double>();
        const ordered_json* nv = find_verdict(rep, "exit_profile_nonconstant");
        bool ok = rep.at("passed").get<bool>() && hi < 0.02 && nv &&
                  nv->at("passed").get<bool>();
        line(9, ok, "H3 distribution diffusion: return upper CI = " + f3(hi) +
                        " < 0.02, exit profile nonconstant across the theta0 grid");
    }

    // 10. byte-identical reports across thread counts
    {
        ExperimentConfig small;
        small["paths"] = "500";
        PresetRun r1 = run_preset("transience-n3-euclidean", "det1", small, 77, 1);
        PresetRun r3 = run_preset("transience-n3-euclidean", "det3", small, 77, 3);
        ordered_json a = r1.result.report, b = r3.result.report;
        a.erase("timing");
        b.erase("timing");
        bool ok = a.dump(2) == b.dump(2);
        line(10, ok, std::string("determinism: threads=1 vs threads=3 reports ") +
                         (ok ? "byte-identical" : "DIFFER") + " outside the timing block");
    }

    if (failures == 0) {
        std::printf("acceptance: all 10 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", failures);
    return 1;
}
