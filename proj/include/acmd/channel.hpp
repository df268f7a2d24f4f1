#pragma once

// Fiber and receiver front-end models: SSMF chromatic dispersion as the
// all-pass H(w) = exp(j*beta2*L*w^2/2), flat ASE-style optical noise set by
// an OSNR (or ROP) knob, square-law photodetection, and the PD/ADC path.

#include <cmath>
#include <optional>
#include <vector>

#include "acmd/errors.hpp"
#include "acmd/fft.hpp"
#include "acmd/resample.hpp"
#include "acmd/signal.hpp"
#include "acmd/tx.hpp"

namespace acmd {

inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s

struct FiberParams {
    double length_km{0.0};
    double dispersion_ps_nm_km{17.0};
    double wavelength_nm{1550.116};
    double loss_db_km{0.2};

    void validate() const {
        if (length_km < 0.0) throw ParameterError("fiber length must be >= 0");
        if (wavelength_nm <= 1200.0 || wavelength_nm >= 1700.0)
            throw ParameterError("wavelength must lie in (1200, 1700) nm");
    }
};

// One primary noise knob per scenario: either an explicit OSNR or a received
// optical power mapped to OSNR through a one-parameter calibration (the
// receiver EDFA runs at fixed output, so OSNR tracks ROP dB-for-dB).
struct NoiseParams {
    std::optional<double> osnr_db;
    std::optional<double> rop_dbm;
    double rop_to_osnr_offset_db{38.0};
    std::optional<double> electrical_snr_db; // post-PD AWGN, off by default
    double reference_bandwidth_nm{0.1};

    void validate() const {
        if (osnr_db.has_value() == rop_dbm.has_value())
            throw ParameterError("exactly one of osnr_db / rop_dbm must be set");
    }

    double effective_osnr_db() const {
        validate();
        return osnr_db ? *osnr_db : (*rop_dbm + rop_to_osnr_offset_db);
    }
};

struct ReceiverParams {
    double pd_bandwidth_hz{31e9};
    double adc_rate_hz{80e9};
    int adc_bits{8};
    double r_dc{0.0}; // residual DC after mean removal

    void validate() const {
        if (pd_bandwidth_hz <= 0.0 || adc_rate_hz <= 0.0)
            throw ParameterError("receiver bandwidths must be positive");
    }
};

// beta2 in ps^2/km from D (ps/nm/km) and wavelength (nm). Anomalous
// dispersion (D > 0) gives negative beta2.
inline double beta2_from_dispersion(double d_ps_nm_km, double wavelength_nm) {
    if (wavelength_nm <= 0.0) throw ParameterError("wavelength must be positive");
    const double d_si = d_ps_nm_km * 1e-6;          // s/m^2
    const double lambda_m = wavelength_nm * 1e-9;
    const double beta2_si = -d_si * lambda_m * lambda_m / (2.0 * M_PI * kSpeedOfLight);
    return beta2_si * 1e27; // s^2/m -> ps^2/km
}

inline ComplexSignal apply_ssmf(const ComplexSignal& field, const FiberParams& fiber) {
    fiber.validate();
    if (fiber.length_km == 0.0) return field;
    const double beta2_l = beta2_from_dispersion(fiber.dispersion_ps_nm_km, fiber.wavelength_nm) *
                           1e-24 * fiber.length_km; // s^2
    const double loss = std::pow(10.0, -fiber.loss_db_km * fiber.length_km / 20.0);
    return fft_apply(field, [beta2_l, loss](double f) {
        const double w = 2.0 * M_PI * f;
        return loss * std::polar(1.0, 0.5 * beta2_l * w * w);
    });
}

// Circular complex Gaussian noise, flat over the simulated band, at the
// power implied by the OSNR knob in its reference bandwidth.
inline ComplexSignal add_optical_noise(const ComplexSignal& field, const NoiseParams& noise,
                                       SeededRng& rng) {
    field.validate();
    const double osnr_db = noise.effective_osnr_db();
    if (std::isinf(osnr_db) && osnr_db > 0.0) return field;
    if (!std::isfinite(osnr_db)) throw ParameterError("osnr must be finite or +inf");
    const double osnr = undb10(osnr_db);
    if (osnr <= 0.0) throw ParameterError("osnr must be positive in linear units");

    const double lambda_m = 1550.116e-9; // reference-bandwidth conversion wavelength
    const double bref_hz = kSpeedOfLight / (lambda_m * lambda_m) *
                           (noise.reference_bandwidth_nm * 1e-9);
    const double p_sig = mean_power(field.samples);
    const double noise_power = p_sig / osnr * (field.sample_rate_hz / bref_hz);
    const double sigma = std::sqrt(noise_power / 2.0);

    ComplexSignal out = field;
    for (cplx& v : out.samples) v += sigma * rng.circular_normal();
    return out;
}

// Absolute square-law detection: R_t = |E_t|^2.
inline RealSignal photodetect(const ComplexSignal& field) {
    field.validate();
    std::vector<double> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(field.samples[i]);
    return {std::move(out), field.sample_rate_hz};
}

// PD bandwidth, optional electrical noise, ADC rate/quantization, DC removal.
inline RealSignal receiver_frontend(const RealSignal& signal, const ReceiverParams& rx,
                                    SeededRng& rng,
                                    std::optional<double> electrical_snr_db = std::nullopt) {
    rx.validate();
    RealSignal out = fft_apply(signal, [&rx](double f) {
        return detail::bessel4_lowpass(f, rx.pd_bandwidth_hz);
    });
    if (electrical_snr_db) {
        const double snr = undb10(*electrical_snr_db);
        const double sigma = std::sqrt(variance(out.samples) / snr);
        for (double& v : out.samples) v += sigma * rng.normal();
    }
    out = resample(out, rx.adc_rate_hz);
    detail::quantize_inplace(out.samples, rx.adc_bits);
    const double m = mean(out.samples);
    for (double& v : out.samples) v += rx.r_dc - m;
    return out;
}

// Detected-intensity fading response of dispersion + square-law detection;
// minima of cos(beta2*L*w^2/2) are the spectral nulls.
inline double cd_fading_response(double f_hz, const FiberParams& fiber) {
    const double beta2_l = beta2_from_dispersion(fiber.dispersion_ps_nm_km, fiber.wavelength_nm) *
                           1e-24 * fiber.length_km;
    const double w = 2.0 * M_PI * f_hz;
    return std::cos(0.5 * beta2_l * w * w);
}

// Analytic null positions f_k = sqrt((2k+1)*pi/(|beta2|*L)) / (2*pi).
inline std::vector<double> analytic_null_frequencies(const FiberParams& fiber, double f_max_hz) {
    std::vector<double> nulls;
    const double beta2_l = std::abs(beta2_from_dispersion(fiber.dispersion_ps_nm_km,
                                                          fiber.wavelength_nm)) *
                           1e-24 * fiber.length_km;
    if (beta2_l <= 0.0) return nulls;
    for (int k = 0;; ++k) {
        const double f = std::sqrt((2.0 * k + 1.0) * M_PI / beta2_l) / (2.0 * M_PI);
        if (f >= f_max_hz) break;
        nulls.push_back(f);
    }
    return nulls;
}

} // namespace acmd
