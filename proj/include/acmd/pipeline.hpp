#pragma once

// End-to-end orchestration: one run_scenario call walks a frame through the
// transmitter, fiber, receiver and the three detection stages, reporting the
// BER after each stage the way the three-curve comparisons are built. Sweeps
// fan scenarios out over a worker pool with per-point seeds derived from the
// master seed, so results do not depend on execution order or parallelism.

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "acmd/channel.hpp"
#include "acmd/equalizer.hpp"
#include "acmd/errors.hpp"
#include "acmd/metrics.hpp"
#include "acmd/mlse.hpp"
#include "acmd/rx_frontend.hpp"
#include "acmd/scenario.hpp"
#include "acmd/tx.hpp"

namespace acmd {

struct RunRecord {
    std::string scenario_name;
    std::uint64_t seed{0};
    std::string config_digest;
    double osnr_db{0.0};
    std::optional<double> rop_dbm;
    int mlse_memory{0};
    bool clipping{false};
    double sync_peak{0.0};
    long null_count{-1};
    std::vector<double> null_frequencies_hz;
    std::optional<BerReport> ber_pnle;
    std::optional<BerReport> ber_pnle_dfe;
    std::optional<BerReport> ber_acmd;
    std::string error_stage;   // empty on success
    std::string error_message;
    double runtime_ms{0.0};    // volatile: excluded from the canonical form
};

// Optional heavyweight outputs for plot emission.
struct RunArtifacts {
    PsdEstimate psd_received;
    EyePdf eye_received;
    EyePdf eye_pnle;
    EyePdf eye_dfe;
    EqFreqResponse eq_response;
    PostFilterTaps post_filter_taps;
    NoiseAutocorr noise_autocorr;
    PnleTaps pnle_taps;
    DfeTaps dfe_taps;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Reference for frame sync: the shaped training prefix passed through the
// power-fading response of the dispersed intensity channel. Correlating
// against the plain shaped prefix fails at long spans because the fading
// decorrelates it from the received waveform.
inline RealSignal sync_reference(const SymbolFrame& frame, const RrcFilter& rrc,
                                 const LinkScenario& sc) {
    if (frame.training_len < 64)
        throw ParameterError("synchronization needs a training prefix of at least 64 symbols");
    std::vector<double> seq(frame.symbols.size(), 0.0);
    for (std::size_t i = 0; i < frame.training_len; ++i) seq[i] = frame.symbols[i];
    RealSignal ref = shape_symbols(seq, rrc, sc.tx.baud_rate_hz);
    if (sc.fiber.length_km > 0.0) {
        ref = fft_apply(ref, [&sc](double f) {
            return cplx{cd_fading_response(f, sc.fiber), 0.0};
        });
    }
    return ref;
}

} // namespace detail

inline RunRecord run_scenario(const LinkScenario& scenario, RunArtifacts* artifacts = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.scenario_name = scenario.name;
    rec.seed = scenario.seed;
    rec.config_digest = detail::hex64(detail::fnv1a64(dump_config(scenario)));
    rec.mlse_memory = scenario.dsp.mlse_memory;

    std::string stage = "validate";
    try {
        scenario.validate();
        rec.osnr_db = scenario.noise.effective_osnr_db();
        rec.rop_dbm = scenario.noise.rop_dbm;

        SeededRng rng(scenario.seed);
        const SymbolFrame frame =
            generate_frame(rng, static_cast<std::size_t>(scenario.frame.total_symbols),
                           static_cast<std::size_t>(scenario.frame.training_len));
        const RrcFilter rrc =
            design_rrc(scenario.dsp.rrc_rolloff, scenario.dsp.rrc_span, scenario.dsp.sps);

        stage = "tx";
        const TxOutput tx = shape_and_modulate(frame, scenario.tx, rrc);
        rec.clipping = tx.clipping_warning;

        stage = "fiber";
        ComplexSignal field = apply_ssmf(tx.field, scenario.fiber);
        field = add_optical_noise(field, scenario.noise, rng);

        stage = "photodetect";
        const RealSignal pd = photodetect(field);

        stage = "receiver";
        const RealSignal adc = receiver_frontend(pd, scenario.rx, rng,
                                                 scenario.noise.electrical_snr_db);

        stage = "psd";
        const PsdEstimate psd =
            welch_psd(adc, static_cast<std::size_t>(scenario.dsp.psd_segment), 0.5);
        const NullCount nulls = count_spectral_nulls(psd, scenario.tx.baud_rate_hz / 2.0);
        rec.null_count = nulls.count;
        rec.null_frequencies_hz = nulls.frequencies_hz;
        if (artifacts) artifacts->psd_received = psd;

        stage = "resample";
        const RealSignal rx4 =
            resample(adc, scenario.tx.baud_rate_hz * scenario.dsp.sps);

        stage = "synchronize";
        const RealSignal ref = detail::sync_reference(frame, rrc, scenario);
        const SyncResult sync = synchronize(rx4, ref);
        rec.sync_peak = sync.correlation_peak;

        stage = "to_symbols";
        const std::vector<double> r = to_symbols(rx4, sync, rrc, frame.total());
        if (artifacts) artifacts->eye_received = eye_and_pdf(r, 1);

        const std::size_t skip = frame.training_len;

        stage = "pnle";
        PnleTaps init =
            make_pnle_taps(scenario.dsp.pnle_k1, scenario.dsp.pnle_k2, scenario.dsp.pnle_k3);
        AdamState adam;
        adam.alpha = {scenario.dsp.adam_alpha1, scenario.dsp.adam_alpha2,
                      scenario.dsp.adam_alpha3};
        adam.decay_steps = scenario.dsp.adam_decay_steps;
        const PnleTrainResult trained =
            train_pnle(r, frame, init, adam, scenario.dsp.adam_epochs, scenario.dsp.adam_batch,
                       Edge::wrap);
        const std::vector<double> p = pnle_forward(r, trained.taps, Edge::wrap);
        std::vector<double> pnle_decisions(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            pnle_decisions[i] = nearest_symbol(p[i], frame.modulation_order);
        rec.ber_pnle = ber(pnle_decisions, frame, skip,
                           {scenario.dsp.hd_fec_threshold, scenario.dsp.sd_fec_threshold});
        if (artifacts) {
            artifacts->eye_pnle = eye_and_pdf(p, 1);
            artifacts->pnle_taps = trained.taps;
        }

        stage = "dfe";
        DfeTaps dfe = make_dfe_taps(scenario.dsp.dfe_f1, scenario.dsp.dfe_f2);
        const LmsState lms{scenario.dsp.lms_mu, LmsState::Mode::training};
        if (scenario.dsp.dfe_epochs > 1 && frame.training_len > 0) {
            const std::vector<double> p_train(p.begin(),
                                              p.begin() + static_cast<long>(frame.training_len));
            for (int e = 1; e < scenario.dsp.dfe_epochs; ++e)
                dfe = dfe_run(p_train, dfe, lms, &frame).taps;
        }
        const DfeRunResult dfe_out = dfe_run(p, dfe, lms, &frame, Edge::wrap);
        rec.ber_pnle_dfe = ber(dfe_out.decisions, frame, skip,
                               {scenario.dsp.hd_fec_threshold, scenario.dsp.sd_fec_threshold});
        if (artifacts) {
            artifacts->eye_dfe = eye_and_pdf(dfe_out.q, 1);
            artifacts->dfe_taps = dfe_out.taps;
            artifacts->eq_response =
                equalizer_frequency_response(trained.taps, dfe_out.taps, 1024);
        }

        stage = "acmd";
        const std::vector<double> prefix(frame.symbols.begin(),
                                         frame.symbols.begin() +
                                             static_cast<long>(frame.training_len));
        const AcmdDetectResult det =
            acmd_detect(dfe_out.q, scenario.dsp.mlse_memory, &prefix, frame.modulation_order);
        rec.ber_acmd = ber(det.decisions, frame, skip,
                           {scenario.dsp.hd_fec_threshold, scenario.dsp.sd_fec_threshold});
        if (artifacts) {
            artifacts->post_filter_taps = det.post_filter_taps;
            artifacts->noise_autocorr = det.autocorr;
        }
    } catch (const Error& e) {
        rec.error_stage = stage;
        rec.error_message = e.what();
    }

    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return rec;
}

struct NullCheckResult {
    long count{0};
    long expected{0};
    std::vector<double> frequencies_hz;
    std::vector<double> analytic_hz;
    double bin_hz{0.0};
    bool positions_within_one_bin{false};
};

// Spectral characterization of a scenario's link: the chain runs with a low
// drive swing and the noise sources off, the way one measures a channel
// response, and the detected-signal PSD is searched for fading nulls below
// half the baud rate.
inline NullCheckResult null_check(LinkScenario s) {
    s.tx.mzm.drive_swing = 0.6;
    s.noise.osnr_db = std::numeric_limits<double>::infinity();
    s.noise.rop_dbm.reset();
    s.noise.electrical_snr_db.reset();
    s.validate();

    SeededRng rng(s.seed);
    const SymbolFrame frame =
        generate_frame(rng, static_cast<std::size_t>(s.frame.total_symbols),
                       static_cast<std::size_t>(s.frame.training_len));
    const RrcFilter rrc = design_rrc(s.dsp.rrc_rolloff, s.dsp.rrc_span, s.dsp.sps);
    const TxOutput tx = shape_and_modulate(frame, s.tx, rrc);
    ComplexSignal field = apply_ssmf(tx.field, s.fiber);
    field = add_optical_noise(field, s.noise, rng);
    const RealSignal adc = receiver_frontend(photodetect(field), s.rx, rng);
    const PsdEstimate psd = welch_psd(adc, static_cast<std::size_t>(s.dsp.psd_segment), 0.5);

    NullCheckResult out;
    const double f_max = s.tx.baud_rate_hz / 2.0;
    const NullCount nulls = count_spectral_nulls(psd, f_max);
    out.count = nulls.count;
    out.frequencies_hz = nulls.frequencies_hz;
    out.analytic_hz = analytic_null_frequencies(s.fiber, f_max);
    out.expected = static_cast<long>(out.analytic_hz.size());
    out.bin_hz = psd.frequencies_hz.size() > 1
                     ? psd.frequencies_hz[1] - psd.frequencies_hz[0]
                     : 0.0;
    out.positions_within_one_bin = out.count == out.expected;
    for (std::size_t i = 0; i < out.frequencies_hz.size() && out.positions_within_one_bin; ++i) {
        if (std::abs(out.frequencies_hz[i] - out.analytic_hz[i]) > out.bin_hz + 1e-6)
            out.positions_within_one_bin = false;
    }
    return out;
}

inline LinkScenario sweep_point(const LinkScenario& base, const SweepSpec& sweep,
                                std::size_t point_index, int trial_index) {
    LinkScenario s = base;
    const double v = sweep.values[point_index];
    switch (sweep.variable) {
        case SweepSpec::Variable::rop_dbm:
            s.noise.osnr_db.reset();
            s.noise.rop_dbm = v;
            break;
        case SweepSpec::Variable::mlse_memory:
            s.dsp.mlse_memory = static_cast<int>(std::lround(v));
            break;
        case SweepSpec::Variable::pf_taps:
            // (P+1)-tap post filter pairs with memory-P detection
            s.dsp.mlse_memory = static_cast<int>(std::lround(v)) - 1;
            break;
    }
    s.seed = derive_seed(base.seed, point_index, static_cast<std::uint64_t>(trial_index));
    return s;
}

inline std::vector<RunRecord> run_sweep(const LinkScenario& base, const SweepSpec& sweep,
                                        int parallelism = 1) {
    sweep.validate();
    base.validate();
    if (parallelism < 1) throw ParameterError("parallelism must be >= 1");

    struct Job {
        std::size_t point;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < sweep.values.size(); ++i)
        for (int t = 0; t < sweep.trials; ++t) jobs.push_back({i, t});

    std::vector<RunRecord> records(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            records[j] = run_scenario(sweep_point(base, sweep, jobs[j].point, jobs[j].trial));
        }
    };
    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(parallelism, static_cast<int>(jobs.size()));
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return records;
}

} // namespace acmd
