#include "patriot/rng.hpp"

#include <cmath>
#include <numbers>

#include "patriot/errors.hpp"

namespace patriot {

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_stream_seed(std::uint64_t global_seed, const std::string& name) {
    if (name.empty()) {
        throw ValidationError("derive_stream_seed: stream name must be non-empty");
    }
    std::uint64_t state = fnv1a64(name) ^ global_seed;
    return splitmix64_next(state);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian(double mean, double stddev) {
    if (stddev < 0.0) {
        throw ValidationError("gaussian: stddev must be >= 0");
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

} // namespace patriot
