#ifndef PROBC_RNG_HPP
#define PROBC_RNG_HPP

#include <cstdint>

namespace probc {

// Counter-based generator built on the SplitMix64 finalizer: output k is
// mix(seed + k*gamma), so the stream is reproducible and cheap to split.
// substream(i) reseeds with mix(seed, i), giving statistically independent
// streams for parallel chains. Every draw the sampler makes flows through
// this type; no std:: distributions are used, so runs are reproducible
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

    Rng substream(std::uint64_t index) const;

    std::uint64_t next_u64();

    // Uniform on (0,1]; never returns 0 so log() is safe.
    double next_double();

    double uniform(double lo, double hi);
    double normal(double mean, double sd);
    double gamma(double shape, double scale);
    double beta(double a, double b);

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

}  // namespace probc

#endif
