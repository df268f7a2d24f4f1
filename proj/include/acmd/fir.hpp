#pragma once

// Linear-phase FIR filtering with group-delay compensation: output has the
// same length as the input and stays sample-aligned with it (delay floor(K/2)
// removed). A circular variant supports the frame-periodic simulation model.

#include <cstddef>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/signal.hpp"

namespace acmd {

namespace detail {

template <typename T>
std::vector<T> convolve_same(const std::vector<T>& x, const std::vector<double>& taps) {
    const std::size_t n = x.size();
    const std::size_t k = taps.size();
    const std::size_t delay = k / 2;
    std::vector<T> y(n, T{});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t full = i + delay; // index into the full convolution
        T acc{};
        const std::size_t j_lo = full >= n - 1 ? full - (n - 1) : 0;
        const std::size_t j_hi = std::min(full, k - 1);
        for (std::size_t j = j_lo; j <= j_hi; ++j) acc += taps[j] * x[full - j];
        y[i] = acc;
    }
    return y;
}

template <typename T>
std::vector<T> convolve_circular(const std::vector<T>& x, const std::vector<double>& taps) {
    const long n = static_cast<long>(x.size());
    const long k = static_cast<long>(taps.size());
    const long delay = k / 2;
    std::vector<T> y(x.size(), T{});
    for (long i = 0; i < n; ++i) {
        const long top = i + delay;
        T acc{};
        if (top - (k - 1) >= 0 && top < n) {
            const T* xp = x.data() + top;
            for (long j = 0; j < k; ++j) acc += taps[j] * xp[-j];
        } else {
            for (long j = 0; j < k; ++j) {
                long idx = (top - j) % n;
                if (idx < 0) idx += n;
                acc += taps[j] * x[static_cast<std::size_t>(idx)];
            }
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

} // namespace detail

template <typename T>
Signal<T> fir_filter(const Signal<T>& sig, const std::vector<double>& taps) {
    if (taps.empty()) throw ParameterError("fir_filter requires non-empty taps");
    sig.validate();
    return {detail::convolve_same(sig.samples, taps), sig.sample_rate_hz};
}

template <typename T>
Signal<T> fir_filter_circular(const Signal<T>& sig, const std::vector<double>& taps) {
    if (taps.empty()) throw ParameterError("fir_filter requires non-empty taps");
    sig.validate();
    return {detail::convolve_circular(sig.samples, taps), sig.sample_rate_hz};
}

} // namespace acmd
