#include "mlab/rng.hpp"

namespace mlab {

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
}  // namespace

RngStream make_stream(std::uint64_t master_seed, std::uint64_t path_index) {
    std::uint64_t lo = mix64(master_seed) + path_index;
    std::uint64_t hi = mix64(mix64(master_seed ^ 0xD1B54A32D192ED03ull) + path_index);
    return RngStream(lo, hi);
}

}  // namespace mlab
