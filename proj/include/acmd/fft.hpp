#pragma once

// FFT engine and frequency-domain filtering. Power-of-two sizes run an
// iterative radix-2 transform; every other size goes through Bluestein's
// chirp-z algorithm, so the 82240-symbol frame (N = 328960) transforms
// exactly without padding. Twiddle tables and chirp kernels are cached per
// size behind a mutex; the transforms themselves are pure, so concurrent
// pipelines are safe.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/signal.hpp"

namespace acmd {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct FftCache {
    std::mutex mu;
    // pow2 size -> forward twiddles W_n^k = exp(-2*pi*i*k/n), k < n/2
    std::map<std::size_t, std::shared_ptr<const std::vector<cplx>>> twiddles;
    struct Chirp {
        std::vector<cplx> w;     // exp(-i*pi*n^2/N)
        std::vector<cplx> bfft;  // FFT of the padded conjugate chirp
        std::size_t m;           // pow2 convolution length
    };
    std::map<std::size_t, std::shared_ptr<const Chirp>> chirps;

    static FftCache& instance() {
        static FftCache c;
        return c;
    }
};

inline std::shared_ptr<const std::vector<cplx>> pow2_twiddles(std::size_t n) {
    FftCache& c = FftCache::instance();
    std::lock_guard<std::mutex> lk(c.mu);
    auto it = c.twiddles.find(n);
    if (it != c.twiddles.end()) return it->second;
    auto tw = std::make_shared<std::vector<cplx>>(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ph = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        (*tw)[k] = {std::cos(ph), std::sin(ph)};
    }
    c.twiddles.emplace(n, tw);
    return tw;
}

inline void fft_pow2_inplace(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    // bit reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    auto tw = pow2_twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx w = (*tw)[k * stride];
                if (inverse) w = std::conj(w);
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (cplx& v : a) v *= inv;
    }
}

inline std::shared_ptr<const FftCache::Chirp> chirp_kernel(std::size_t n) {
    FftCache& c = FftCache::instance();
    {
        std::lock_guard<std::mutex> lk(c.mu);
        auto it = c.chirps.find(n);
        if (it != c.chirps.end()) return it->second;
    }
    auto ch = std::make_shared<FftCache::Chirp>();
    ch->m = next_pow2(2 * n - 1);
    ch->w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // i^2 mod 2n keeps the chirp phase exact for large i
        const std::uint64_t q = (static_cast<std::uint64_t>(i) * i) % (2 * n);
        const double ph = -M_PI * static_cast<double>(q) / static_cast<double>(n);
        ch->w[i] = {std::cos(ph), std::sin(ph)};
    }
    std::vector<cplx> b(ch->m, cplx{0.0, 0.0});
    b[0] = std::conj(ch->w[0]);
    for (std::size_t i = 1; i < n; ++i) {
        b[i] = std::conj(ch->w[i]);
        b[ch->m - i] = std::conj(ch->w[i]);
    }
    fft_pow2_inplace(b, false);
    ch->bfft = std::move(b);
    std::lock_guard<std::mutex> lk(c.mu);
    auto [it, inserted] = c.chirps.emplace(n, ch);
    return it->second;
}

inline void fft_bluestein(std::vector<cplx>& x) {
    const std::size_t n = x.size();
    auto ch = chirp_kernel(n);
    std::vector<cplx> a(ch->m, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * ch->w[i];
    fft_pow2_inplace(a, false);
    for (std::size_t i = 0; i < ch->m; ++i) a[i] *= ch->bfft[i];
    fft_pow2_inplace(a, true);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i] * ch->w[i];
}

} // namespace detail

// Forward DFT, any length >= 1.
inline std::vector<cplx> fft(std::vector<cplx> x) {
    if (x.empty()) throw ParameterError("fft of empty sequence");
    if (detail::is_pow2(x.size()))
        detail::fft_pow2_inplace(x, false);
    else
        detail::fft_bluestein(x);
    return x;
}

// Inverse DFT with 1/N scaling, any length >= 1.
inline std::vector<cplx> ifft(std::vector<cplx> x) {
    if (x.empty()) throw ParameterError("ifft of empty sequence");
    if (detail::is_pow2(x.size())) {
        detail::fft_pow2_inplace(x, true);
        return x;
    }
    for (cplx& v : x) v = std::conj(v);
    detail::fft_bluestein(x);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (cplx& v : x) v = std::conj(v) * inv;
    return x;
}

inline std::vector<cplx> fft_real(const std::vector<double>& x) {
    std::vector<cplx> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = {x[i], 0.0};
    return fft(std::move(c));
}

// Baseband frequency of FFT bin k: f in (-fs/2, fs/2], bin n/2 maps to +fs/2.
inline double bin_frequency(std::size_t k, std::size_t n, double fs) {
    const double kk = static_cast<double>(k);
    const double nn = static_cast<double>(n);
    if (2 * k <= n) return kk / nn * fs;
    return (kk - nn) / nn * fs;
}

using TransferFn = std::function<cplx(double)>;

// Multiply the spectrum by transfer(f) and transform back. Signals are
// treated as one period of a periodic waveform (circular filtering).
inline ComplexSignal fft_apply(const ComplexSignal& sig, const TransferFn& transfer) {
    sig.validate();
    std::vector<cplx> spec = fft(sig.samples);
    const std::size_t n = spec.size();
    for (std::size_t k = 0; k < n; ++k)
        spec[k] *= transfer(bin_frequency(k, n, sig.sample_rate_hz));
    return {ifft(std::move(spec)), sig.sample_rate_hz};
}

// Real-signal variant: conjugate symmetry is enforced by evaluating the
// transfer at f >= 0 and mirroring, so the output is exactly real. The DC
// and Nyquist bins must be real for a real signal; they keep |H| with the
// sign of Re{H}, which leaves all-pass transfers all-pass.
inline RealSignal fft_apply(const RealSignal& sig, const TransferFn& transfer) {
    sig.validate();
    std::vector<cplx> spec = fft_real(sig.samples);
    const std::size_t n = spec.size();
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = bin_frequency(k, n, sig.sample_rate_hz);
        cplx h = transfer(f);
        if (k == 0 || 2 * k == n) h = {std::abs(h) * (h.real() >= 0.0 ? 1.0 : -1.0), 0.0};
        spec[k] *= h;
        if (k != 0 && 2 * k != n) spec[n - k] *= std::conj(h);
    }
    std::vector<cplx> out = ifft(std::move(spec));
    std::vector<double> re(n);
    for (std::size_t i = 0; i < n; ++i) re[i] = out[i].real();
    return {std::move(re), sig.sample_rate_hz};
}

} // namespace acmd
