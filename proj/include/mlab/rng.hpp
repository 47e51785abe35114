#pragma once

#include <cstdint>
#include <cmath>

namespace mlab {

// Counter-based pseudo-random stream. A stream is identified by a 128-bit id
// derived from (master_seed, path_index); draws are a pure function of
// (id, counter), so any path can be regenerated in isolation and results do
// not depend on scheduling order or the C++ standard library in use.
class RngStream {
  public:
    RngStream() = default;
    RngStream(std::uint64_t id_lo, std::uint64_t id_hi)
        : id_lo_(id_lo), id_hi_(id_hi) {}

    std::uint64_t id_lo() const { return id_lo_; }
    std::uint64_t id_hi() const { return id_hi_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        std::uint64_t z = id_lo_ + (counter_++) * 0x9E3779B97F4A7C15ull;
        z = mix(z);
        z += id_hi_;
        return mix(z);
    }

    // Strictly inside (0,1); the offset keeps log() and Box-Muller finite.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller on explicit uniforms (the distribution
    // adapters in <random> are not reproducible across standard libraries).
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        cached_ = rad * std::sin(ang);
        have_cached_ = true;
        return rad * std::cos(ang);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t id_lo_ = 0;
    std::uint64_t id_hi_ = 0;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Derive the per-path stream. id_lo is a bijection of path_index for a fixed
// seed, so distinct indices can never collide on the full 128-bit id.
RngStream make_stream(std::uint64_t master_seed, std::uint64_t path_index);

}  // namespace mlab
