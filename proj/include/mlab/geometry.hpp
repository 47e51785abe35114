#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mlab {

// Radially symmetric curvature profile K(r) ≤ 0.
//
// The log-type profiles are singular at r = 1, so they are blended: K ≡ 0 on
// [0, blend_radius], a C¹ cubic ramp on [blend_radius, blend_radius+1], and
// the asymptotic formula beyond. Closed-form kinds need no blending.
enum class ProfileKind {
    euclidean,    // K ≡ 0
    hyperbolic,   // K ≡ -a²
    log_family,   // K = -c / (r² log r)
    log_sqrt,     // profile whose warp grows like r·(log r)^(1/2)·(log log r)^(1/2)
    custom_fn,    // user-supplied K(r)
    custom_table  // piecewise-linear interpolation of (r, K) samples
};

class CurvatureProfile {
  public:
    static CurvatureProfile euclidean();
    static CurvatureProfile hyperbolic(double a);
    static CurvatureProfile log_family(double c, double blend_radius = 3.0);
    static CurvatureProfile log_sqrt(double blend_radius = 6.0);
    static CurvatureProfile custom(std::function<double(double)> k);
    static CurvatureProfile custom_table(std::vector<double> r, std::vector<double> k);

    double operator()(double r) const;

    ProfileKind kind() const { return kind_; }
    double a() const { return a_; }
    double c() const { return c_; }
    double blend_radius() const { return blend_radius_; }

    // Short stable token used in config hashing and report output.
    std::string describe() const;

  private:
    CurvatureProfile() = default;

    ProfileKind kind_ = ProfileKind::euclidean;
    double a_ = 1.0;
    double c_ = 1.0;
    double blend_radius_ = 0.0;
    std::function<double(double)> fn_;
    std::vector<double> table_r_, table_k_;
};

// Warp function G of a rotationally symmetric metric dr² + G(r)²·dθ²:
// the solution of G″ + K·G = 0, G(0) = 0, G′(0) = 1.
//
// Backed either by a closed form (euclidean, hyperbolic) or by a table on a
// geometric grid interpolated with a monotone piecewise-cubic Hermite in
// (log r, log G/r) space, using the solver's exact derivatives as slopes.
// Below the first grid node the K ≡ 0 series G = r is used (all blended
// profiles are exactly flat there; custom profiles get the two-term series).
//
// Guarantees for K ≤ 0: G > 0 and G′/G ≥ 1/r on (0, r_max].
class WarpFunction {
  public:
    double g(double r) const;         // G(r); may overflow to +inf for huge r
    double dg(double r) const;        // G′(r)
    double log_g(double r) const;     // log G(r), safe where g() would overflow
    double dlog_g(double r) const;    // G′/G, the radial log-derivative
    double inv_g(double r) const;     // 1/G, underflow-safe for large r
    double inv_g_sq(double r) const;  // 1/G², the angular clock rate

    double r_max() const { return r_max_; }
    bool tabulated() const { return !nodes_x_.empty(); }
    std::size_t node_count() const { return nodes_x_.size(); }

    // Largest interpolation-cell ODE residual |G″ + K G| / max(1, G), measured
    // by finite differences in log-log space at the interior grid nodes.
    double max_ode_residual(const CurvatureProfile& profile) const;

    void export_csv(const std::string& path) const;
    static WarpFunction import_csv(const std::string& path);

    friend WarpFunction solve_jacobi(const CurvatureProfile&, double, double, bool);

  private:
    // closed forms
    enum class Closed { none, flat, sinh } closed_ = Closed::none;
    double a_ = 1.0;
    double r_max_ = 0.0;

    // table in x = log r, d = log(G/r); slope_ holds d′(x) from the solver
    std::vector<double> nodes_x_, nodes_d_, slope_;
    double x0_ = 0.0, dx_ = 0.0;  // uniform grid origin/step in x

    std::size_t cell(double x) const;
    void eval_table(double r, double& d, double& dprime) const;
};

// Solve the warp ODE for the given profile out to r_max. rel_tol controls the
// integrator and the post-solve residual verification (floored at 1e-6, the
// finite-difference noise level). Closed-form profiles return closed-form
// warps unless force_table is set (used to cross-check solver vs closed form).
WarpFunction solve_jacobi(const CurvatureProfile& profile, double r_max,
                          double rel_tol = 1e-8, bool force_table = false);

// (G, G′) at r.
struct WarpEval {
    double g;
    double dg;
};
WarpEval warp_eval(const WarpFunction& w, double r);

// G′/G at r. This is the only geometry quantity the step drift needs.
double radial_log_derivative(const WarpFunction& w, double r);

}  // namespace mlab
