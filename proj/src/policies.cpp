#include "mlab/policies.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "mlab/errors.hpp"

namespace mlab {

namespace {
void check_rank(int n, int m) {
    if (n < 2) throw config_error("policy rank n must be >= 2");
    if (n >= m) throw config_error("policy needs rank n < ambient dimension m");
}
}  // namespace

FramePolicy FramePolicy::radial(int n, int m) {
    check_rank(n, m);
    return FramePolicy(PolicyKind::radial, n, m);
}

FramePolicy FramePolicy::sphere(int n, int m) {
    check_rank(n, m);
    return FramePolicy(PolicyKind::sphere, n, m);
}

FramePolicy FramePolicy::fixed_angle(int n, int m, double phi) {
    check_rank(n, m);
    if (!(phi >= 0.0 && phi <= 1.5707963267948966))
        throw config_error("fixed_angle needs phi in [0, pi/2]");
    FramePolicy p(PolicyKind::fixed_angle, n, m);
    p.phi_ = phi;
    return p;
}

FramePolicy FramePolicy::random_rotation(int n, int m, double rate) {
    check_rank(n, m);
    if (!(rate > 0.0)) throw config_error("random_rotation needs rate > 0");
    FramePolicy p(PolicyKind::random_rotation, n, m);
    p.rate_ = rate;
    return p;
}

// alpha² = squared norm of the radial components of an isotropic orthonormal
// n-frame = |projection of the radial unit vector onto the frame's span|².
double FramePolicy::draw_isotropic_alpha(RngStream& rng) const {
    std::vector<double> v(static_cast<std::size_t>(n_) * m_);
    for (auto& x : v) x = rng.next_normal();
    double alpha_sq = 0.0;
    for (int i = 0; i < n_; ++i) {
        double* vi = v.data() + static_cast<std::size_t>(i) * m_;
        for (int j = 0; j < i; ++j) {
            const double* vj = v.data() + static_cast<std::size_t>(j) * m_;
            double dot = 0.0;
            for (int k = 0; k < m_; ++k) dot += vi[k] * vj[k];
            for (int k = 0; k < m_; ++k) vi[k] -= dot * vj[k];
        }
        double norm = 0.0;
        for (int k = 0; k < m_; ++k) norm += vi[k] * vi[k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) return draw_isotropic_alpha(rng);  // degenerate draw, retry
        for (int k = 0; k < m_; ++k) vi[k] /= norm;
        alpha_sq += vi[0] * vi[0];  // first coordinate plays the radial role
    }
    return std::sqrt(std::min(1.0, alpha_sq));
}

PolicyState FramePolicy::init_state(RngStream& rng) const {
    PolicyState ps;
    switch (kind_) {
        case PolicyKind::radial:
            ps.alpha = 1.0;
            break;
        case PolicyKind::sphere:
            ps.alpha = 0.0;
            break;
        case PolicyKind::fixed_angle:
            ps.alpha = std::cos(phi_);
            break;
        case PolicyKind::random_rotation:
            ps.alpha = draw_isotropic_alpha(rng);
            ps.next_clock = -std::log(rng.next_uniform()) / rate_;
            break;
    }
    return ps;
}

double FramePolicy::alignment(PolicyState& ps, double t, RngStream& rng) const {
    if (kind_ == PolicyKind::random_rotation) {
        while (t >= ps.next_clock) {
            ps.alpha = draw_isotropic_alpha(rng);
            ps.next_clock += -std::log(rng.next_uniform()) / rate_;
        }
    }
    return ps.alpha;
}

std::string FramePolicy::describe() const {
    char buf[96];
    switch (kind_) {
        case PolicyKind::radial:
            std::snprintf(buf, sizeof buf, "radial(n=%d,m=%d)", n_, m_);
            break;
        case PolicyKind::sphere:
            std::snprintf(buf, sizeof buf, "sphere(n=%d,m=%d)", n_, m_);
            break;
        case PolicyKind::fixed_angle:
            std::snprintf(buf, sizeof buf, "fixed_angle(n=%d,m=%d,phi=%.17g)", n_, m_, phi_);
            break;
        case PolicyKind::random_rotation:
            std::snprintf(buf, sizeof buf, "random_rotation(n=%d,m=%d,rate=%.17g)", n_, m_, rate_);
            break;
    }
    return buf;
}

}  // namespace mlab
