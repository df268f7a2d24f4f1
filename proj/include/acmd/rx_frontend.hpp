#pragma once

// Receiver DSP front end: circular cross-correlation frame sync and the
// matched-filter/decimate/normalize step that produces the symbol-spaced
// bipolar sequence r_n the equalizers consume.

#include <cmath>
#include <cstddef>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/fir.hpp"
#include "acmd/rrc.hpp"
#include "acmd/signal.hpp"

namespace acmd {

struct SyncResult {
    long offset_samples{0};
    double correlation_peak{0.0}; // normalized, in [0, 1]
};

// Circular normalized cross-correlation of the received signal against a
// reference waveform of the same length. The peak is normalized by the
// reference energy and the received energy under the reference support, so
// a perfect match scores 1.
inline SyncResult synchronize(const RealSignal& received, const RealSignal& reference,
                              double peak_threshold = 0.2) {
    received.validate();
    reference.validate();
    const std::size_t n = received.size();
    if (reference.size() != n)
        throw ParameterError("sync reference must match the received length");

    std::vector<double> x = received.samples;
    const std::vector<double>& ref = reference.samples;
    const double mx = mean(x);
    for (double& v : x) v -= mx;

    double ref_energy = 0.0, ref_peak = 0.0;
    for (double v : ref) {
        ref_energy += v * v;
        ref_peak = std::max(ref_peak, std::abs(v));
    }
    if (ref_energy <= 0.0) throw ParameterError("sync reference has no energy");

    // support mask from the raw reference so its exact zeros stay outside
    std::vector<double> mask(n, 0.0), x2(n);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = std::abs(ref[i]) > 1e-9 * ref_peak ? 1.0 : 0.0;
        x2[i] = x[i] * x[i];
    }

    const auto xf = fft_real(x);
    const auto rf = fft_real(ref);
    const auto x2f = fft_real(x2);
    const auto mf = fft_real(mask);
    std::vector<cplx> cf(n), ef(n);
    for (std::size_t k = 0; k < n; ++k) {
        cf[k] = xf[k] * std::conj(rf[k]);
        ef[k] = x2f[k] * std::conj(mf[k]);
    }
    const auto corr = ifft(std::move(cf));
    const auto wenergy = ifft(std::move(ef));

    SyncResult best;
    const double ref_norm = std::sqrt(ref_energy);
    for (std::size_t k = 0; k < n; ++k) {
        const double we = std::max(wenergy[k].real(), 1e-30);
        const double rho = corr[k].real() / (ref_norm * std::sqrt(we));
        if (rho > best.correlation_peak) {
            best.correlation_peak = rho;
            best.offset_samples = static_cast<long>(k);
        }
    }
    if (best.correlation_peak < peak_threshold)
        throw SyncFailure("correlation peak " + std::to_string(best.correlation_peak) +
                          " below threshold");
    return best;
}

// Convenience form: reference is the RRC-shaped training prefix (zeros over
// the payload span). Dispersive scenarios should correlate against a
// channel-matched reference instead; see the pipeline.
inline SyncResult synchronize(const RealSignal& received, const SymbolFrame& training,
                              const RrcFilter& rrc, double peak_threshold = 0.2) {
    if (training.training_len < 64)
        throw ParameterError("synchronization needs a training prefix of at least 64 symbols");
    const std::size_t sps = static_cast<std::size_t>(rrc.samples_per_symbol);
    if (received.size() % sps != 0)
        throw FramingError("received length is not a whole number of symbols");
    std::vector<double> seq(received.size() / sps, 0.0);
    for (std::size_t i = 0; i < training.training_len && i < seq.size(); ++i)
        seq[i] = training.symbols[i];
    const double baud = received.sample_rate_hz / static_cast<double>(sps);
    return synchronize(received, shape_symbols(seq, rrc, baud), peak_threshold);
}

// Matched filter, symbol-rate decimation at the sync offset, DC removal and
// unit-power normalization. Output is aligned 1:1 with transmitted symbols.
inline std::vector<double> to_symbols(const RealSignal& received, const SyncResult& sync,
                                      const RrcFilter& rrc, std::size_t expected_symbols = 0) {
    received.validate();
    const std::size_t sps = static_cast<std::size_t>(rrc.samples_per_symbol);
    const std::size_t n = received.size();
    if (n < sps || n % sps != 0)
        throw FramingError("received length is not a whole number of symbols");
    const std::size_t n_sym = n / sps;
    if (expected_symbols != 0 && n_sym != expected_symbols)
        throw FramingError("decimated length does not match the expected frame");

    const RealSignal matched = fir_filter_circular(received, rrc.taps);
    std::vector<double> r(n_sym);
    for (std::size_t m = 0; m < n_sym; ++m) {
        const std::size_t idx =
            (static_cast<std::size_t>(sync.offset_samples) + m * sps) % n;
        r[m] = matched.samples[idx];
    }
    const double mu = mean(r);
    for (double& v : r) v -= mu;
    const double scale = rms(r);
    if (scale <= 1e-12 * std::max(1.0, std::abs(mu))) {
        std::fill(r.begin(), r.end(), 0.0); // constant input: nothing but DC
        return r;
    }
    for (double& v : r) v /= scale;
    return r;
}

} // namespace acmd
