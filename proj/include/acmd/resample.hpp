#pragma once

// Band-limited rate conversion by spectral resizing: FFT, move the bins to a
// grid of the new length, inverse FFT. Exact for signals band-limited below
// both Nyquist rates, circular by construction (consistent with the frame-
// periodic simulation model). Requested ratios must reduce to a rational
// p/q that divides the signal length.

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/signal.hpp"

namespace acmd {

namespace detail {

struct Ratio {
    long num{1};
    long den{1};
};

// Continued-fraction rational approximation of x.
inline Ratio rational_approx(double x, long max_den = (1L << 20), double rel_tol = 1e-9) {
    if (!(x > 0.0)) throw ParameterError("rate ratio must be positive");
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double r = x;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_f = std::floor(r);
        const long a = static_cast<long>(a_f);
        const long p2 = a * p1 + p0;
        const long q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        const double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::abs(approx - x) <= rel_tol * x) return {p1, q1};
        const double frac = r - a_f;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    if (q1 >= 1 && std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <= rel_tol * x)
        return {p1, q1};
    throw ParameterError("rate ratio is not rational within the configured precision");
}

// Resize a length-n spectrum to length m (brick-wall band limitation).
// Hermitian symmetry of real-signal spectra is preserved, including the
// split/fold of the shared Nyquist bin.
inline std::vector<cplx> resize_spectrum(const std::vector<cplx>& x, std::size_t m) {
    const std::size_t n = x.size();
    std::vector<cplx> y(m, cplx{0.0, 0.0});
    if (m == n) {
        y = x;
    } else {
        const std::size_t keep = std::min(n, m);
        const std::size_t half = (keep - 1) / 2; // strictly-positive bins kept
        for (std::size_t k = 0; k <= half; ++k) y[k] = x[k];
        for (std::size_t k = 1; k <= half; ++k) y[m - k] = x[n - k];
        if (keep % 2 == 0) {
            const std::size_t nyq = keep / 2;
            if (m > n) {
                // upsample: old Nyquist bin splits symmetrically
                y[nyq] = 0.5 * x[nyq];
                y[m - nyq] = 0.5 * x[nyq];
            } else {
                // downsample: fold the two old bins at the new Nyquist
                y[nyq] = 0.5 * (x[nyq] + x[n - nyq]);
            }
        }
    }
    const double scale = static_cast<double>(m) / static_cast<double>(n);
    for (cplx& v : y) v *= scale;
    return y;
}

} // namespace detail

inline ComplexSignal resample(const ComplexSignal& sig, double new_rate_hz) {
    sig.validate();
    if (new_rate_hz <= 0.0) throw ParameterError("resample target rate must be positive");
    const detail::Ratio r = detail::rational_approx(new_rate_hz / sig.sample_rate_hz);
    if (r.num == r.den) return {sig.samples, new_rate_hz};
    const long n = static_cast<long>(sig.size());
    if ((n * r.num) % r.den != 0)
        throw ParameterError("signal length is incompatible with the rational rate ratio");
    const std::size_t m = static_cast<std::size_t>(n * r.num / r.den);
    std::vector<cplx> spec = fft(sig.samples);
    return {ifft(detail::resize_spectrum(spec, m)), new_rate_hz};
}

inline RealSignal resample(const RealSignal& sig, double new_rate_hz) {
    sig.validate();
    if (new_rate_hz <= 0.0) throw ParameterError("resample target rate must be positive");
    const detail::Ratio r = detail::rational_approx(new_rate_hz / sig.sample_rate_hz);
    if (r.num == r.den) return {sig.samples, new_rate_hz};
    const long n = static_cast<long>(sig.size());
    if ((n * r.num) % r.den != 0)
        throw ParameterError("signal length is incompatible with the rational rate ratio");
    const std::size_t m = static_cast<std::size_t>(n * r.num / r.den);
    std::vector<cplx> spec = fft_real(sig.samples);
    std::vector<cplx> out = ifft(detail::resize_spectrum(spec, m));
    std::vector<double> re(m);
    for (std::size_t i = 0; i < m; ++i) re[i] = out[i].real();
    return {std::move(re), new_rate_hz};
}

} // namespace acmd
