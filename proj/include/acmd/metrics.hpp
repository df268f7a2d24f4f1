#pragma once

// Measurement side of the simulator: BER counting against the ground-truth
// frame, Welch PSD estimation, spectral-null counting, the folded-spectrum
// SNR integral, and eye/amplitude histograms exported as data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/signal.hpp"

namespace acmd {

// Conventional pre-FEC thresholds; configurable, the simulator treats them
// as plain numbers.
struct FecThresholds {
    double hd{3.8e-3}; // 7% overhead hard-decision limit
    double sd{2.0e-3}; // 9% overhead limit
};

struct BerReport {
    long bit_errors{0};
    long bits_compared{0};
    double ber{0.0};
    bool below_hd_fec{false};
    bool below_sd_fec{false};
};

inline BerReport ber(const std::vector<double>& decisions, const SymbolFrame& truth,
                     std::size_t skip, FecThresholds fec = {}) {
    if (decisions.size() != truth.symbols.size())
        throw FramingError("decision and truth sequences differ in length");
    if (skip >= decisions.size())
        throw ParameterError("skip leaves no symbols to compare");
    BerReport rep;
    for (std::size_t n = skip; n < decisions.size(); ++n) {
        const double d = nearest_symbol(decisions[n], truth.modulation_order);
        const double s = nearest_symbol(truth.symbols[n], truth.modulation_order);
        if (d != s) ++rep.bit_errors;
        ++rep.bits_compared;
    }
    rep.ber = static_cast<double>(rep.bit_errors) / static_cast<double>(rep.bits_compared);
    rep.below_hd_fec = rep.ber < fec.hd;
    rep.below_sd_fec = rep.ber < fec.sd;
    return rep;
}

struct PsdEstimate {
    std::vector<double> frequencies_hz;
    std::vector<double> power_db;
    std::size_t segment_len{0};
    double overlap{0.0};
    std::string window{"hann"};
};

// Welch periodogram average, Hann window, one-sided for real signals. The
// global mean is removed so the integrated PSD equals the signal variance.
inline PsdEstimate welch_psd(const RealSignal& signal, std::size_t segment = 4096,
                             double overlap_frac = 0.5) {
    signal.validate();
    const std::size_t n = signal.size();
    if (segment < 8 || segment > n)
        throw ParameterError("welch segment must satisfy 8 <= segment <= length");
    if (overlap_frac < 0.0 || overlap_frac >= 1.0)
        throw ParameterError("welch overlap must lie in [0, 1)");

    std::vector<double> w(segment);
    double u = 0.0;
    for (std::size_t i = 0; i < segment; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                     static_cast<double>(segment)));
        u += w[i] * w[i];
    }

    const double m = mean(signal.samples);
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::lround(static_cast<double>(segment) * (1.0 - overlap_frac))));
    std::vector<double> acc(segment / 2 + 1, 0.0);
    std::size_t count = 0;
    std::vector<cplx> buf(segment);
    for (std::size_t start = 0; start + segment <= n; start += hop) {
        for (std::size_t i = 0; i < segment; ++i)
            buf[i] = {(signal.samples[start + i] - m) * w[i], 0.0};
        const auto spec = fft(buf);
        for (std::size_t k = 0; k <= segment / 2; ++k) acc[k] += std::norm(spec[k]);
        ++count;
    }

    PsdEstimate psd;
    psd.segment_len = segment;
    psd.overlap = overlap_frac;
    const double fs = signal.sample_rate_hz;
    const double scale = 1.0 / (fs * u * static_cast<double>(count));
    psd.frequencies_hz.resize(acc.size());
    psd.power_db.resize(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        double p = acc[k] * scale;
        if (k != 0 && k != segment / 2) p *= 2.0; // fold negative frequencies
        psd.frequencies_hz[k] = static_cast<double>(k) * fs / static_cast<double>(segment);
        psd.power_db[k] = db10(std::max(p, 1e-300));
    }
    return psd;
}

inline double integrate_psd_linear(const PsdEstimate& psd) {
    if (psd.frequencies_hz.size() < 2) return 0.0;
    const double df = psd.frequencies_hz[1] - psd.frequencies_hz[0];
    double acc = 0.0;
    for (double p : psd.power_db) acc += undb10(p) * df;
    return acc;
}

struct NullCount {
    long count{0};
    std::vector<double> frequencies_hz;
};

namespace detail {

inline std::vector<double> moving_median5(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    std::vector<double> win;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        const std::size_t hi = std::min(i + 2, x.size() - 1);
        win.assign(x.begin() + static_cast<long>(lo), x.begin() + static_cast<long>(hi) + 1);
        std::sort(win.begin(), win.end());
        y[i] = win[win.size() / 2];
    }
    return y;
}

} // namespace detail

// Local minima of the median-smoothed PSD with at least depth_db of
// topographic prominence: walking outward from the minimum, the curve rises
// by depth_db on both sides before dipping back below the minimum. Only
// minima strictly inside (0, f_max) are counted; the flanking peaks may sit
// beyond f_max. Each reported position is refined to the unsmoothed minimum
// inside its notch so the median filter cannot bias it.
inline NullCount count_spectral_nulls(const PsdEstimate& psd, double f_max_hz,
                                      double depth_db = 10.0) {
    const std::vector<double> s = detail::moving_median5(psd.power_db);
    const std::size_t n = s.size();
    NullCount out;
    if (n < 3) return out;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(s[i] <= s[i - 1] && s[i] < s[i + 1])) continue;
        const double f = psd.frequencies_hz[i];
        if (f <= 0.0 || f >= f_max_hz) continue;

        bool left_ok = false, right_ok = false;
        std::size_t lj = i, rj = i;
        for (std::size_t j = i; j-- > 0;) {
            if (s[j] < s[i]) break;
            if (s[j] >= s[i] + depth_db) {
                left_ok = true;
                lj = j;
                break;
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (s[j] < s[i]) break;
            if (s[j] >= s[i] + depth_db) {
                right_ok = true;
                rj = j;
                break;
            }
        }
        if (!left_ok || !right_ok) continue;

        // refine on the raw PSD within the notch
        std::size_t best = i;
        for (std::size_t j = lj; j <= rj; ++j)
            if (psd.power_db[j] < psd.power_db[best]) best = j;
        ++out.count;
        out.frequencies_hz.push_back(psd.frequencies_hz[best]);
    }
    return out;
}

struct FoldedSnrInput {
    std::vector<cplx> folded_response; // folded channel on a uniform w-grid over [-pi/T, pi/T)
    double n0{1.0};                    // two-sided noise PSD is N0/2
    double t_symbol{1.0};              // seconds

    void validate() const {
        if (folded_response.empty()) throw ParameterError("folded response must be non-empty");
        if (n0 <= 0.0 || t_symbol <= 0.0) throw ParameterError("N0 and T must be positive");
    }
};

struct FoldedSnrResult {
    double snr{0.0};
    bool diverged{false}; // an exact spectral null on the grid
};

// SNR = [ T^2 N0 / (2 pi) * integral dw / |H_folded|^2 ]^-1; a zero of the
// folded spectrum on the grid makes the integral diverge and the SNR zero.
inline FoldedSnrResult folded_snr(const FoldedSnrInput& in) {
    in.validate();
    FoldedSnrResult out;
    const double t = in.t_symbol;
    const double dw = (2.0 * M_PI / t) / static_cast<double>(in.folded_response.size());
    double integral = 0.0;
    for (const cplx& h : in.folded_response) {
        const double mag2 = std::norm(h);
        if (mag2 <= 0.0) {
            out.diverged = true;
            out.snr = 0.0;
            return out;
        }
        integral += dw / mag2;
    }
    out.snr = 1.0 / (t * t * in.n0 / (2.0 * M_PI) * integral);
    return out;
}

struct EyePdf {
    int sps{1};
    double amp_min{0.0}, amp_max{0.0};
    std::vector<std::vector<long>> eye; // [phase over two symbols][amplitude bin]
    std::vector<double> pdf_centers;
    std::vector<double> pdf_mass; // unit total mass
};

// Eye histogram over a two-symbol span plus the amplitude PDF of the
// symbol-instant samples. Pass sps = 1 for a symbol-rate sequence.
inline EyePdf eye_and_pdf(const std::vector<double>& symbol_aligned, int sps, int amp_bins = 101) {
    if (symbol_aligned.empty()) throw ParameterError("eye_and_pdf needs samples");
    if (sps < 1 || amp_bins < 1) throw ParameterError("invalid eye/pdf binning");
    EyePdf out;
    out.sps = sps;
    auto [lo_it, hi_it] = std::minmax_element(symbol_aligned.begin(), symbol_aligned.end());
    out.amp_min = *lo_it;
    out.amp_max = *hi_it;
    const double span = out.amp_max - out.amp_min;
    const int phases = 2 * sps;
    out.eye.assign(static_cast<std::size_t>(phases),
                   std::vector<long>(static_cast<std::size_t>(amp_bins), 0));
    auto bin_of = [&](double v) {
        if (span <= 0.0) return amp_bins / 2;
        int b = static_cast<int>((v - out.amp_min) / span * amp_bins);
        return std::clamp(b, 0, amp_bins - 1);
    };
    std::vector<long> pdf(static_cast<std::size_t>(amp_bins), 0);
    long pdf_total = 0;
    for (std::size_t i = 0; i < symbol_aligned.size(); ++i) {
        const int phase = static_cast<int>(i % static_cast<std::size_t>(phases));
        out.eye[static_cast<std::size_t>(phase)][static_cast<std::size_t>(bin_of(symbol_aligned[i]))]++;
        if (i % static_cast<std::size_t>(sps) == 0) {
            pdf[static_cast<std::size_t>(bin_of(symbol_aligned[i]))]++;
            ++pdf_total;
        }
    }
    out.pdf_centers.resize(static_cast<std::size_t>(amp_bins));
    out.pdf_mass.resize(static_cast<std::size_t>(amp_bins));
    for (int b = 0; b < amp_bins; ++b) {
        out.pdf_centers[static_cast<std::size_t>(b)] =
            span <= 0.0 ? out.amp_min
                        : out.amp_min + (static_cast<double>(b) + 0.5) * span / amp_bins;
        out.pdf_mass[static_cast<std::size_t>(b)] =
            static_cast<double>(pdf[static_cast<std::size_t>(b)]) / static_cast<double>(pdf_total);
    }
    return out;
}

} // namespace acmd
