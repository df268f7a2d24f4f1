#pragma once

// Transmitter chain: PAM2 frame generation, DC bias, RRC shaping, DAC
// quantization/bandwidth emulation and the single-drive MZM electro-optic
// model producing the launched optical field.

#include <cmath>
#include <cstdint>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/rrc.hpp"
#include "acmd/signal.hpp"

namespace acmd {

struct MzmParams {
    double v_pi{4.0};          // volts
    double bias_voltage{2.0};  // quadrature for the default v_pi
    double drive_swing{2.0};   // peak-to-peak drive, volts

    void validate() const {
        if (v_pi <= 0.0) throw ParameterError("mzm v_pi must be positive");
    }
};

struct TxConfig {
    double baud_rate_hz{64e9};
    double dc_bias{1.0}; // maps {-1,+1} to {0,2}
    double dac_bandwidth_hz{16e9};
    int dac_bits{8};
    MzmParams mzm;
    double launch_power_dbm{0.0};

    void validate() const {
        if (baud_rate_hz <= 0.0) throw ParameterError("baud rate must be positive");
        if (dac_bits < 4 || dac_bits > 16) throw ParameterError("dac_bits must lie in [4, 16]");
        mzm.validate();
    }
};

struct TxOutput {
    ComplexSignal field;
    bool clipping_warning{false};
};

inline SymbolFrame generate_frame(SeededRng& rng, std::size_t total_symbols,
                                  std::size_t training_len) {
    if (training_len > total_symbols)
        throw ParameterError("training length exceeds total symbols");
    SymbolFrame frame;
    frame.modulation_order = 2;
    frame.training_len = training_len;
    frame.payload_len = total_symbols - training_len;
    frame.bits.resize(total_symbols);
    frame.symbols.resize(total_symbols);
    for (std::size_t n = 0; n < total_symbols; ++n) {
        const int b = rng.bit();
        frame.bits[n] = static_cast<std::uint8_t>(b);
        frame.symbols[n] = b ? 1.0 : -1.0;
    }
    return frame;
}

namespace detail {

// 4th-order Bessel low-pass prototype, delay-normalized, rescaled so that
// |H| = -3 dB at f3db and the DC group delay is removed (keeps the chain
// sample-aligned).
inline cplx bessel4_lowpass(double f, double f3db) {
    static constexpr double kOmega3db = 2.1139176466; // of the prototype
    const double w = kOmega3db * f / f3db;
    const cplx s{0.0, w};
    const cplx s2 = s * s;
    const cplx den = s2 * s2 + 10.0 * s2 * s + 45.0 * s2 + 105.0 * s + 105.0;
    return (105.0 / den) * std::polar(1.0, w);
}

// Uniform mid-rise-style quantizer over the waveform's own range; error per
// sample bounded by half an LSB of that range.
inline void quantize_inplace(std::vector<double>& x, int bits) {
    double lo = x[0], hi = x[0];
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return;
    const double levels = static_cast<double>((1u << bits) - 1);
    const double lsb = (hi - lo) / levels;
    for (double& v : x) v = lo + std::round((v - lo) / lsb) * lsb;
}

} // namespace detail

// Full electrical-to-optical path. Returns the complex baseband field whose
// intensity carries the OOK waveform, scaled to the configured launch power
// (1.0 == 1 mW so the dBm bookkeeping stays meaningful).
inline TxOutput shape_and_modulate(const SymbolFrame& frame, const TxConfig& cfg,
                                   const RrcFilter& rrc) {
    cfg.validate();
    frame.validate();

    std::vector<double> unipolar(frame.symbols.size());
    for (std::size_t n = 0; n < unipolar.size(); ++n)
        unipolar[n] = frame.symbols[n] + cfg.dc_bias;

    RealSignal drive = shape_symbols(unipolar, rrc, cfg.baud_rate_hz);
    detail::quantize_inplace(drive.samples, cfg.dac_bits);
    drive = fft_apply(drive, [&cfg](double f) {
        return detail::bessel4_lowpass(f, cfg.dac_bandwidth_hz);
    });

    // Drive scaling is referenced to the nominal symbol amplitude, not the
    // waveform extremes: a unit-power bipolar component swings drive_swing/2
    // around the bias point. The sign makes higher electrical levels
    // brighter (non-inverting overall).
    double taps_sum = 0.0;
    for (double t : rrc.taps) taps_sum += t;
    const double dc_gain = taps_sum / std::sqrt(static_cast<double>(rrc.samples_per_symbol));
    const double e_dc = cfg.dc_bias * dc_gain;
    const MzmParams& mzm = cfg.mzm;

    TxOutput out;
    out.clipping_warning = mzm.drive_swing > 2.0 * mzm.v_pi;
    out.field.sample_rate_hz = drive.sample_rate_hz;
    out.field.samples.resize(drive.size());
    for (std::size_t i = 0; i < drive.size(); ++i) {
        const double v = -(mzm.drive_swing / 2.0) * (drive.samples[i] - e_dc);
        const double e = std::cos(M_PI * (v + mzm.bias_voltage) / (2.0 * mzm.v_pi));
        out.field.samples[i] = {e, 0.0};
    }

    const double target_mw = dbm_to_mw(cfg.launch_power_dbm);
    const double p = mean_power(out.field.samples);
    const double g = std::sqrt(target_mw / std::max(p, 1e-300));
    for (cplx& v : out.field.samples) v *= g;
    return out;
}

inline double net_rate_gbps(double link_rate_gbps, long payload, long total, double fec_overhead) {
    if (payload <= 0 || payload > total)
        throw ParameterError("payload must satisfy 0 < payload <= total");
    if (fec_overhead < 0.0) throw ParameterError("fec overhead must be non-negative");
    return link_rate_gbps * static_cast<double>(payload) / static_cast<double>(total) /
           (1.0 + fec_overhead);
}

} // namespace acmd
