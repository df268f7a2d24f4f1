#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "acmd/rrc.hpp"
#include "acmd/signal.hpp"
#include "acmd/tx.hpp"

using namespace acmd;

namespace {

SymbolFrame constant_frame(std::size_t n, double value) {
    SymbolFrame f;
    f.modulation_order = 2;
    f.training_len = 0;
    f.payload_len = n;
    f.bits.assign(n, value > 0 ? 1 : 0);
    f.symbols.assign(n, value);
    return f;
}

} // namespace

TEST_CASE("generate_frame splits and reproduces deterministically") {
    SeededRng rng(123);
    const SymbolFrame f = generate_frame(rng, 82240, 5000);
    REQUIRE(f.training_len == 5000);
    REQUIRE(f.payload_len == 77240);
    REQUIRE(f.symbols.size() == 82240);
    for (std::size_t i = 0; i < f.symbols.size(); ++i) {
        REQUIRE((f.symbols[i] == 1.0 || f.symbols[i] == -1.0));
        REQUIRE(f.bits[i] == (f.symbols[i] > 0 ? 1 : 0));
    }

    SeededRng rng2(123);
    const SymbolFrame g = generate_frame(rng2, 82240, 5000);
    REQUIRE(f.symbols == g.symbols);

    SeededRng rng3(9);
    const SymbolFrame h = generate_frame(rng3, 8, 0);
    REQUIRE(h.payload_len == 8);
    REQUIRE(h.training_len == 0);

    SeededRng rng4(9);
    REQUIRE_THROWS_AS(generate_frame(rng4, 10, 11), ParameterError);
}

TEST_CASE("generate_frame symbols are near equiprobable") {
    SeededRng rng(77);
    const SymbolFrame f = generate_frame(rng, 100000, 0);
    double m = 0.0;
    for (double s : f.symbols) m += s;
    m /= static_cast<double>(f.symbols.size());
    REQUIRE(std::abs(m) < 0.02);
}

TEST_CASE("net rate arithmetic reproduces the published figures") {
    REQUIRE(net_rate_gbps(64.0, 77240, 82240, 0.07) == Catch::Approx(56.18).margin(0.01));
    REQUIRE(net_rate_gbps(64.0, 77240, 82240, 0.09) == Catch::Approx(55.15).margin(0.01));
    REQUIRE(net_rate_gbps(42.0, 1000, 1000, 0.0) == Catch::Approx(42.0).margin(1e-12));
    REQUIRE_THROWS_AS(net_rate_gbps(64.0, 0, 10, 0.07), ParameterError);
    REQUIRE_THROWS_AS(net_rate_gbps(64.0, 11, 10, 0.07), ParameterError);
}

TEST_CASE("all-ones frame modulates to a near-constant field") {
    const RrcFilter rrc = design_rrc(0.25, 32, 4);
    TxConfig cfg;
    const SymbolFrame f = constant_frame(512, 1.0);
    const TxOutput out = shape_and_modulate(f, cfg, rrc);
    REQUIRE_FALSE(out.clipping_warning);
    double lo = 1e300, hi = -1e300;
    for (const cplx& v : out.field.samples) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    REQUIRE((hi - lo) / hi < 0.02); // truncation-level polyphase ripple only
    const double p = mean_power(out.field.samples);
    REQUIRE(p == Catch::Approx(dbm_to_mw(cfg.launch_power_dbm)).epsilon(1e-9));
}

TEST_CASE("small-signal MZM output is proportional to the shaped waveform") {
    const RrcFilter rrc = design_rrc(0.25, 32, 4);
    TxConfig cfg;
    cfg.dc_bias = 0.0;
    cfg.dac_bits = 16;                 // keep quantization negligible
    cfg.dac_bandwidth_hz = 1e12;       // effectively linear electrical path
    cfg.mzm.drive_swing = 0.01;        // deep small-signal regime

    SeededRng rng(5);
    const SymbolFrame f = generate_frame(rng, 1024, 0);
    const TxOutput out = shape_and_modulate(f, cfg, rrc);
    const RealSignal shaped = shape_symbols(f.symbols, rrc, cfg.baud_rate_hz);

    // field = carrier + a*shaped: correlation of the AC part with the shaped
    // waveform should be essentially exact
    std::vector<double> ac(out.field.size());
    for (std::size_t i = 0; i < ac.size(); ++i) ac[i] = out.field.samples[i].real();
    const double am = mean(ac);
    for (double& v : ac) v -= am;
    double dot = 0.0, ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < ac.size(); ++i) {
        dot += ac[i] * shaped.samples[i];
        ea += ac[i] * ac[i];
        eb += shaped.samples[i] * shaped.samples[i];
    }
    REQUIRE(std::abs(dot) / std::sqrt(ea * eb) > 0.9999);
}

TEST_CASE("alternating symbols put the intensity peak at half the baud rate") {
    const RrcFilter rrc = design_rrc(0.25, 32, 4);
    TxConfig cfg;
    SymbolFrame f = constant_frame(256, 1.0);
    for (std::size_t i = 0; i < f.symbols.size(); i += 2) f.symbols[i] = -1.0;
    const TxOutput out = shape_and_modulate(f, cfg, rrc);

    std::vector<double> intensity(out.field.size());
    for (std::size_t i = 0; i < intensity.size(); ++i)
        intensity[i] = std::norm(out.field.samples[i]);
    const double im = mean(intensity);
    for (double& v : intensity) v -= im;
    const auto spec = fft_real(intensity);
    std::size_t peak = 1;
    for (std::size_t k = 1; k <= spec.size() / 2; ++k)
        if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
    const double f_peak = bin_frequency(peak, spec.size(), out.field.sample_rate_hz);
    REQUIRE(f_peak == Catch::Approx(32e9).margin(1e6));
}

TEST_CASE("modulated intensity is non-negative and clipping is flagged") {
    const RrcFilter rrc = design_rrc(0.25, 16, 4);
    SeededRng rng(2);
    const SymbolFrame f = generate_frame(rng, 512, 0);

    TxConfig cfg;
    const TxOutput out = shape_and_modulate(f, cfg, rrc);
    for (const cplx& v : out.field.samples) REQUIRE(std::norm(v) >= 0.0);
    REQUIRE_FALSE(out.clipping_warning);

    TxConfig hot = cfg;
    hot.mzm.drive_swing = 2.5 * hot.mzm.v_pi;
    REQUIRE(shape_and_modulate(f, hot, rrc).clipping_warning);
}

TEST_CASE("shaped spectrum stays inside the rolloff band") {
    const RrcFilter rrc = design_rrc(0.25, 32, 4);
    SeededRng rng(31);
    const SymbolFrame f = generate_frame(rng, 4096, 0);
    const RealSignal shaped = shape_symbols(f.symbols, rrc, 64e9);
    const auto spec = fft_real(shaped.samples);
    const double edge = (1.0 + rrc.rolloff) / 2.0 * 64e9;
    double inside = 0.0, outside = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double fq = std::abs(bin_frequency(k, spec.size(), shaped.sample_rate_hz));
        (fq <= edge ? inside : outside) += std::norm(spec[k]);
    }
    REQUIRE(outside < 1e-3 * (inside + outside));
}

TEST_CASE("dac quantization moves samples by at most half an lsb") {
    SeededRng rng(4);
    std::vector<double> x(4096);
    for (auto& v : x) v = rng.normal();
    double lo = x[0], hi = x[0];
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> q = x;
    detail::quantize_inplace(q, 8);
    const double lsb = (hi - lo) / 255.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(q[i] - x[i]));
    REQUIRE(worst <= 0.5 * lsb + 1e-12);

    // 16-bit: quantization error rms well below 0.01% of full scale
    std::vector<double> q16 = x;
    detail::quantize_inplace(q16, 16);
    double rms_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        rms_err += (q16[i] - x[i]) * (q16[i] - x[i]);
    rms_err = std::sqrt(rms_err / static_cast<double>(x.size()));
    REQUIRE(rms_err < 1e-4 * (hi - lo));
}
