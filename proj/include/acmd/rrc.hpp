#pragma once

// Root-raised-cosine pulse design and symbol shaping.

#include <cmath>
#include <cstddef>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fir.hpp"
#include "acmd/signal.hpp"

namespace acmd {

struct RrcFilter {
    double rolloff{0.25};
    int span_symbols{32};
    int samples_per_symbol{4};
    std::vector<double> taps; // symmetric, unit energy
};

namespace detail {

// Closed-form RRC impulse response, symbol period T = 1. The two singular
// points of the formula (t = 0 and |t| = 1/(4*beta)) use their analytic
// limits.
inline double rrc_impulse(double t, double beta) {
    if (beta <= 0.0) {
        if (std::abs(t) < 1e-12) return 1.0;
        return std::sin(M_PI * t) / (M_PI * t);
    }
    if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / M_PI;
    const double x = 4.0 * beta * t;
    if (std::abs(std::abs(x) - 1.0) < 1e-9) {
        const double a = M_PI / (4.0 * beta);
        return (beta / std::sqrt(2.0)) *
               ((1.0 + 2.0 / M_PI) * std::sin(a) + (1.0 - 2.0 / M_PI) * std::cos(a));
    }
    const double num = std::sin(M_PI * t * (1.0 - beta)) + x * std::cos(M_PI * t * (1.0 + beta));
    const double den = M_PI * t * (1.0 - x * x);
    return num / den;
}

} // namespace detail

inline RrcFilter design_rrc(double rolloff, int span_symbols, int sps) {
    if (rolloff < 0.0 || rolloff > 1.0)
        throw ParameterError("rrc rolloff must lie in [0, 1]");
    if (span_symbols < 2 || span_symbols % 2 != 0)
        throw ParameterError("rrc span must be an even integer >= 2");
    if (sps < 1)
        throw ParameterError("rrc samples_per_symbol must be >= 1");

    RrcFilter f;
    f.rolloff = rolloff;
    f.span_symbols = span_symbols;
    f.samples_per_symbol = sps;

    const int half = span_symbols * sps / 2;
    f.taps.resize(static_cast<std::size_t>(2 * half + 1));
    for (int k = -half; k <= half; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(sps);
        f.taps[static_cast<std::size_t>(k + half)] = detail::rrc_impulse(t, rolloff);
    }
    double energy = 0.0;
    for (double v : f.taps) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : f.taps) v *= scale;
    return f;
}

// Zero-stuff to sps samples/symbol and pulse-shape. The sqrt(sps) factor
// restores unit average power for a unit-power symbol stream. Frames are one
// period of a repeating pattern, hence the circular option.
inline RealSignal shape_symbols(const std::vector<double>& symbols, const RrcFilter& rrc,
                                double baud_rate_hz, bool circular = true) {
    if (symbols.empty()) throw ParameterError("cannot shape an empty symbol sequence");
    const int sps = rrc.samples_per_symbol;
    std::vector<double> up(symbols.size() * static_cast<std::size_t>(sps), 0.0);
    for (std::size_t n = 0; n < symbols.size(); ++n)
        up[n * static_cast<std::size_t>(sps)] = symbols[n];
    RealSignal sig{std::move(up), baud_rate_hz * sps};
    RealSignal shaped = circular ? fir_filter_circular(sig, rrc.taps) : fir_filter(sig, rrc.taps);
    const double g = std::sqrt(static_cast<double>(sps));
    for (double& v : shaped.samples) v *= g;
    return shaped;
}

} // namespace acmd
