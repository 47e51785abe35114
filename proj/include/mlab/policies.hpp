#pragma once

#include <string>

#include "mlab/rng.hpp"

namespace mlab {

// A frame policy chooses, at each instant, how much of the rank-n driving
// frame points in the radial direction. The step only needs the aggregate
// alignment alpha = |radial component of the frame| in [0, 1]:
//   radial drift      v  = (n - alpha²)/2 · G′/G
//   radial diffusion       alpha · dW
//   tangential power       (n - alpha²)/G² per unit time
// For the single-tilted-vector normal form alpha = cos(phi).
enum class PolicyKind { radial, sphere, fixed_angle, random_rotation };

// Per-path mutable policy data; owned by the path state so policy objects
// stay immutable and shareable across worker threads.
struct PolicyState {
    double alpha = 1.0;
    double next_clock = 0.0;
};

class FramePolicy {
  public:
    // alpha = 1: the first vector is exactly radial.
    static FramePolicy radial(int n, int m);
    // alpha = 0: the whole frame is tangential (r moves by drift alone).
    static FramePolicy sphere(int n, int m);
    // constant tilt phi in [0, pi/2] between the first vector and the radial
    // direction.
    static FramePolicy fixed_angle(int n, int m, double phi);
    // the frame is redrawn isotropically (Gram-Schmidt on m-dim Gaussians) at
    // exponential clocks with the given rate; alpha² then follows a
    // Beta(n/2, (m-n)/2) law.
    static FramePolicy random_rotation(int n, int m, double rate);

    PolicyKind kind() const { return kind_; }
    int rank() const { return n_; }
    int ambient_dim() const { return m_; }
    double phi() const { return phi_; }
    double rate() const { return rate_; }

    PolicyState init_state(RngStream& rng) const;
    // Current alignment; advances the rotation clock when one fires in (t_prev, t].
    double alignment(PolicyState& ps, double t, RngStream& rng) const;

    std::string describe() const;

  private:
    FramePolicy(PolicyKind k, int n, int m) : kind_(k), n_(n), m_(m) {}
    double draw_isotropic_alpha(RngStream& rng) const;

    PolicyKind kind_;
    int n_;
    int m_;
    double phi_ = 0.0;
    double rate_ = 1.0;
};

}  // namespace mlab
