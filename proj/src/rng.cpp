#include "dfscsn/rng.hpp"

#include <cmath>

#include "dfscsn/stats.hpp"

namespace dfscsn {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_ = std::mt19937_64(seq);
}

double RngStream::uniform() {
    // 53-bit mantissa, shifted off the open endpoints
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() { return norm_quantile(uniform()); }

double RngStream::normal(double mean, double sd) { return mean + sd * normal(); }

double RngStream::gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw ValidationError("gamma: shape and scale must be > 0");
    if (shape < 1.0) {
        // boost to shape+1, then scale back with a uniform power
        double u = uniform();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

double RngStream::inverse_gamma(double shape, double scale) {
    return scale / gamma(shape, 1.0);
}

RngStream substream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(seed, stream_id);
}

}  // namespace dfscsn
