#ifndef PATRIOT_RNG_HPP
#define PATRIOT_RNG_HPP

#include <cstdint>
#include <string>

namespace patriot {

/// One splitmix64 step: advances the state and returns the mixed output.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// FNV-1a 64-bit hash over a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

/// Seed for a named stream: fnv1a64(name) XOR global_seed, then one
/// splitmix64 step. Identical (global_seed, name) pairs give identical
/// streams on every platform.
std::uint64_t derive_stream_seed(std::uint64_t global_seed, const std::string& name);

/// A named, independently seeded pseudo-random stream. All stochastic
/// behavior in the framework draws from streams like this so that runs
/// replay bit-exactly.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t state, std::string name)
        : state_(state), name_(std::move(name)) {}

    static RngStream derived(std::uint64_t global_seed, const std::string& name) {
        return RngStream(derive_stream_seed(global_seed, name), name);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform in [0,1): top 53 bits scaled by 2^-53. Consumes one u64.
    double uniform();

    /// Box-Muller gaussian; consumes exactly two uniforms, the second
    /// variate is discarded. stddev must be >= 0.
    double gaussian(double mean, double stddev);

    std::uint64_t state() const { return state_; }
    const std::string& name() const { return name_; }

private:
    std::uint64_t state_ = 0;
    std::string name_;
};

} // namespace patriot

#endif
