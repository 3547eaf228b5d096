#include "probc/rng.hpp"

#include <cmath>

namespace probc {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

Rng Rng::substream(std::uint64_t index) const {
    return Rng(mix64(seed_ ^ mix64((index + 1) * kGamma)));
}

std::uint64_t Rng::next_u64() { return mix64(seed_ + (++counter_) * kGamma); }

double Rng::next_double() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

double Rng::normal(double mean, double sd) {
    // Box-Muller, cosine branch only: two uniforms per draw keeps the
    // stream position independent of past calls.
    double u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape, double scale) {
    if (shape < 1.0) {
        // Boost the shape, then correct with u^(1/shape).
        double u = next_double();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x = normal(0.0, 1.0);
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = next_double();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v * scale;
        }
    }
}

double Rng::beta(double a, double b) {
    double x = gamma(a, 1.0);
    double y = gamma(b, 1.0);
    return x / (x + y);
}

}  // namespace probc
