#pragma once

// Persistence: result records as JSON lines, tap sets as a plain-text
// format with full double precision, CSV plot files for the figure kinds.

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acmd/equalizer.hpp"
#include "acmd/metrics.hpp"
#include "acmd/mlse.hpp"
#include "acmd/pipeline.hpp"

namespace acmd {

inline nlohmann::json to_json(const BerReport& r) {
    return {{"bit_errors", r.bit_errors},
            {"bits_compared", r.bits_compared},
            {"ber", r.ber},
            {"below_hd_fec", r.below_hd_fec},
            {"below_sd_fec", r.below_sd_fec}};
}

// Canonical form (include_volatile = false) omits wall-clock fields so that
// equal seeds give byte-identical records.
inline nlohmann::json to_json(const RunRecord& rec, bool include_volatile = true) {
    nlohmann::json j{{"scenario", rec.scenario_name},
                     {"seed", rec.seed},
                     {"config_digest", rec.config_digest},
                     {"osnr_db", rec.osnr_db},
                     {"mlse_memory", rec.mlse_memory},
                     {"clipping", rec.clipping},
                     {"sync_peak", rec.sync_peak},
                     {"null_count", rec.null_count},
                     {"null_frequencies_hz", rec.null_frequencies_hz}};
    if (rec.rop_dbm) j["rop_dbm"] = *rec.rop_dbm;
    if (rec.ber_pnle) j["ber_pnle"] = to_json(*rec.ber_pnle);
    if (rec.ber_pnle_dfe) j["ber_pnle_dfe"] = to_json(*rec.ber_pnle_dfe);
    if (rec.ber_acmd) j["ber_acmd"] = to_json(*rec.ber_acmd);
    if (!rec.error_stage.empty()) {
        j["error_stage"] = rec.error_stage;
        j["error_message"] = rec.error_message;
    }
    if (include_volatile) j["runtime_ms"] = rec.runtime_ms;
    return j;
}

inline std::string record_line(const RunRecord& rec, bool include_volatile = true) {
    return to_json(rec, include_volatile).dump();
}

inline std::vector<nlohmann::json> read_record_lines(std::istream& in) {
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

// -- tap-set persistence -----------------------------------------------------

struct EqualizerSnapshot {
    PnleTaps pnle;
    DfeTaps dfe;
    PostFilterTaps post_filter;
    NoiseAutocorr autocorr;
};

namespace detail {

inline void write_vec(std::ostream& os, const std::vector<double>& v) {
    os << v.size();
    os << std::setprecision(17);
    for (double x : v) os << ' ' << x;
    os << '\n';
}

inline std::vector<double> read_vec(std::istream& is) {
    std::size_t n = 0;
    if (!(is >> n)) throw ParameterError("malformed taps file (missing length)");
    std::vector<double> v(n);
    for (auto& x : v)
        if (!(is >> x)) throw ParameterError("malformed taps file (missing value)");
    return v;
}

} // namespace detail

inline void save_equalizer(std::ostream& os, const EqualizerSnapshot& s) {
    os << "acmd-taps v1\n";
    os << "pnle reference " << s.pnle.reference_tap << '\n';
    detail::write_vec(os, s.pnle.h1);
    detail::write_vec(os, s.pnle.h2);
    detail::write_vec(os, s.pnle.h3);
    os << "dfe\n";
    detail::write_vec(os, s.dfe.f1);
    detail::write_vec(os, s.dfe.f2);
    os << "post_filter\n";
    detail::write_vec(os, s.post_filter.w);
    os << "autocorr\n";
    detail::write_vec(os, s.autocorr.r);
}

inline EqualizerSnapshot load_equalizer(std::istream& is) {
    std::string magic, version;
    is >> magic >> version;
    if (magic != "acmd-taps" || version != "v1")
        throw ParameterError("not an acmd-taps v1 file");
    EqualizerSnapshot s;
    std::string tag;
    is >> tag >> tag; // "pnle reference"
    is >> s.pnle.reference_tap;
    s.pnle.h1 = detail::read_vec(is);
    s.pnle.h2 = detail::read_vec(is);
    s.pnle.h3 = detail::read_vec(is);
    is >> tag; // "dfe"
    s.dfe.f1 = detail::read_vec(is);
    s.dfe.f2 = detail::read_vec(is);
    is >> tag; // "post_filter"
    s.post_filter.w = detail::read_vec(is);
    is >> tag; // "autocorr"
    s.autocorr.r = detail::read_vec(is);
    return s;
}

// -- CSV plot files ------------------------------------------------------------

inline void write_psd_csv(std::ostream& os, const PsdEstimate& psd) {
    os << "frequency_hz,power_db\n" << std::setprecision(10);
    for (std::size_t k = 0; k < psd.frequencies_hz.size(); ++k)
        os << psd.frequencies_hz[k] << ',' << psd.power_db[k] << '\n';
}

inline void write_pdf_csv(std::ostream& os, const EyePdf& e) {
    os << "amplitude,mass\n" << std::setprecision(10);
    for (std::size_t b = 0; b < e.pdf_centers.size(); ++b)
        os << e.pdf_centers[b] << ',' << e.pdf_mass[b] << '\n';
}

inline void write_eye_csv(std::ostream& os, const EyePdf& e) {
    os << "phase_index,amplitude,count\n" << std::setprecision(10);
    const double span = e.amp_max - e.amp_min;
    const std::size_t bins = e.pdf_centers.size();
    for (std::size_t ph = 0; ph < e.eye.size(); ++ph)
        for (std::size_t b = 0; b < e.eye[ph].size(); ++b) {
            const double amp =
                span <= 0.0 ? e.amp_min
                            : e.amp_min + (static_cast<double>(b) + 0.5) * span /
                                              static_cast<double>(bins);
            os << ph << ',' << amp << ',' << e.eye[ph][b] << '\n';
        }
}

inline void write_ber_curve_csv(std::ostream& os, const std::vector<nlohmann::json>& records) {
    os << "scenario,seed,osnr_db,rop_dbm,mlse_memory,ber_pnle,ber_pnle_dfe,ber_acmd\n";
    os << std::setprecision(10);
    for (const auto& r : records) {
        os << r.value("scenario", std::string{}) << ',' << r.value("seed", 0ULL) << ','
           << r.value("osnr_db", 0.0) << ',';
        if (r.contains("rop_dbm"))
            os << r["rop_dbm"].get<double>();
        else
            os << "none";
        os << ',' << r.value("mlse_memory", 0) << ',';
        auto ber_of = [&r](const char* key) -> std::string {
            if (!r.contains(key)) return "none";
            std::ostringstream tmp;
            tmp << std::setprecision(10) << r[key]["ber"].get<double>();
            return tmp.str();
        };
        os << ber_of("ber_pnle") << ',' << ber_of("ber_pnle_dfe") << ',' << ber_of("ber_acmd")
           << '\n';
    }
}

} // namespace acmd
