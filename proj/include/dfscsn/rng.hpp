#pragma once

#include <cstdint>
#include <random>

#include "dfscsn/common.hpp"

namespace dfscsn {

/// Deterministic random stream. Wraps mt19937_64 but generates all variates
/// through our own transforms (inverse-CDF normal, Marsaglia-Tsang gamma) so
/// draws do not depend on the standard library's unspecified distribution
/// algorithms. Streams are derived from (seed, stream_id); chain i always
/// gets stream i regardless of how work is scheduled across threads.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Uniform on (lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via the AS241 inverse CDF (one uniform per draw).
    double normal();
    double normal(double mean, double sd);
    /// Gamma(shape, scale) by Marsaglia-Tsang squeeze; shape > 0.
    double gamma(double shape, double scale);
    /// InverseGamma(shape, scale): scale / Gamma(shape, 1).
    double inverse_gamma(double shape, double scale);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Derive a fresh substream deterministically, e.g. one per posterior draw.
RngStream substream(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace dfscsn
