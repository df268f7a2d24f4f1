#pragma once

// Core waveform/frame types shared by every pipeline stage, plus the seeded
// RNG that makes whole simulations reproducible bit-for-bit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "acmd/errors.hpp"

namespace acmd {

using cplx = std::complex<double>;

// Uniformly sampled waveform. Samples are dimensionless (unit symbol power
// at module boundaries by convention).
template <typename T>
struct Signal {
    std::vector<T> samples;
    double sample_rate_hz{0.0};

    Signal() = default;
    Signal(std::vector<T> s, double rate) : samples(std::move(s)), sample_rate_hz(rate) {}

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

    void validate() const {
        if (sample_rate_hz <= 0.0)
            throw ParameterError("signal sample rate must be positive");
        if (samples.empty())
            throw ParameterError("signal must hold at least one sample");
        for (const T& v : samples) {
            if (!is_finite(v))
                throw StateError("signal contains non-finite sample");
        }
    }

  private:
    static bool is_finite(double v) { return std::isfinite(v); }
    static bool is_finite(const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
};

using RealSignal = Signal<double>;
using ComplexSignal = Signal<cplx>;

// Bit/symbol payload with its training/payload split. Symbols are the
// bipolar M-level alphabet {-(M-1), ..., -1, +1, ..., M-1}; for M=2 that is
// exactly {-1, +1}.
struct SymbolFrame {
    std::vector<std::uint8_t> bits;
    std::vector<double> symbols;
    std::size_t training_len{0};
    std::size_t payload_len{0};
    int modulation_order{2};

    std::size_t total() const { return training_len + payload_len; }

    void validate() const {
        if (modulation_order < 2)
            throw ParameterError("modulation order must be >= 2");
        if (training_len + payload_len != symbols.size())
            throw FramingError("training_len + payload_len must equal symbol count");
    }
};

// Bipolar alphabet level m, m in [0, M).
inline double pam_level(int m, int modulation_order) {
    return static_cast<double>(2 * m - modulation_order + 1);
}

// Nearest alphabet point; exact midpoints resolve toward the upper level,
// so for M=2 a sample at exactly 0 decides +1.
inline double nearest_symbol(double x, int modulation_order) {
    const int m_max = modulation_order - 1;
    int m = static_cast<int>(std::floor((x + static_cast<double>(m_max)) / 2.0 + 0.5));
    m = std::clamp(m, 0, m_max);
    return pam_level(m, modulation_order);
}

// Deterministic RNG wrapper. Only raw mt19937_64 output is consumed and the
// normal variates come from our own Box-Muller, so identical seeds yield
// identical streams on every platform and standard library.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    static constexpr const char* algorithm() { return "mt19937_64+boxmuller"; }
    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    int bit() { return static_cast<int>(gen_() >> 63); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    cplx circular_normal() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool have_spare_{false};
    double spare_{0.0};
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

// Per-point seed derivation for sweeps: independent of execution order and
// of how many workers run the sweep.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point_index,
                                 std::uint64_t trial_index) {
    std::uint64_t h = detail::splitmix64(master ^ 0xac3d0701u);
    h = detail::splitmix64(h ^ point_index);
    h = detail::splitmix64(h ^ (trial_index * 0x9e3779b97f4a7c15ULL));
    return h;
}

// -- small numeric helpers used across modules ------------------------------

inline double mean(const std::vector<double>& x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double mean_power(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double mean_power(const std::vector<cplx>& x) {
    double acc = 0.0;
    for (const cplx& v : x) acc += std::norm(v);
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double rms(const std::vector<double>& x) { return std::sqrt(mean_power(x)); }

inline double db10(double x) { return 10.0 * std::log10(x); }
inline double undb10(double x) { return std::pow(10.0, x / 10.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

} // namespace acmd
