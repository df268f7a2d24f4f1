#pragma once

// Experiment descriptions: one LinkScenario bundles every knob of a run.
// Scenarios serialize to a flat, diffable key-value text format with section
// headers; the same binder drives parsing, dumping and --override handling,
// so the three can never disagree on names.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "acmd/channel.hpp"
#include "acmd/errors.hpp"
#include "acmd/tx.hpp"

namespace acmd {

// Training schedule defaults are the calibrated ones shared by the bundled
// presets: mini-batch Adam with per-order step sizes and 1/t decay for the
// polynomial equalizer, and a single training-LMS pass followed by
// decision-directed tracking for the DFE (the schedule the experiment used).
struct DspConfig {
    int sps{4};
    double rrc_rolloff{0.25};
    int rrc_span{32};
    int pnle_k1{111};
    int pnle_k2{71};
    int pnle_k3{41};
    int dfe_f1{71};
    int dfe_f2{31};
    int mlse_memory{10};
    double adam_alpha1{4e-3};
    double adam_alpha2{1e-3};
    double adam_alpha3{1e-4};
    int adam_epochs{200};
    int adam_batch{500};
    int adam_decay_steps{600};
    double lms_mu{2.5e-4};
    int dfe_epochs{1};
    double hd_fec_threshold{3.8e-3};
    double sd_fec_threshold{2.0e-3};
    int psd_segment{2048};
};

struct FrameSpec {
    long total_symbols{82240};
    long training_len{5000};
};

struct LinkScenario {
    std::string name{"custom"};
    std::uint64_t seed{1};
    TxConfig tx;
    FiberParams fiber;
    NoiseParams noise;
    ReceiverParams rx;
    DspConfig dsp;
    FrameSpec frame;

    void validate() const {
        tx.validate();
        fiber.validate();
        noise.validate();
        rx.validate();
        if (frame.total_symbols < 1 || frame.training_len < 0 ||
            frame.training_len > frame.total_symbols)
            throw ParameterError("invalid frame spec");
        if (dsp.mlse_memory < 0) throw ParameterError("mlse memory must be >= 0");
    }
};

struct SweepSpec {
    enum class Variable { rop_dbm, mlse_memory, pf_taps };
    Variable variable{Variable::mlse_memory};
    std::vector<double> values;
    int trials{1};

    void validate() const {
        if (values.empty()) throw ParameterError("sweep needs at least one value");
        if (trials < 1) throw ParameterError("sweep trials must be >= 1");
    }
};

inline const char* to_string(SweepSpec::Variable v) {
    switch (v) {
        case SweepSpec::Variable::rop_dbm: return "rop_dbm";
        case SweepSpec::Variable::mlse_memory: return "mlse_memory";
        case SweepSpec::Variable::pf_taps: return "pf_taps";
    }
    return "?";
}

inline SweepSpec::Variable sweep_variable_from_string(const std::string& s) {
    if (s == "rop_dbm") return SweepSpec::Variable::rop_dbm;
    if (s == "mlse_memory") return SweepSpec::Variable::mlse_memory;
    if (s == "pf_taps") return SweepSpec::Variable::pf_taps;
    throw ParameterError("unknown sweep variable: " + s);
}

namespace detail {

using Slot = std::variant<double*, int*, long*, std::uint64_t*, std::string*,
                          std::optional<double>*>;

struct Binding {
    std::string key; // "section.name" or plain "name"
    Slot slot;
};

inline std::vector<Binding> bindings(LinkScenario& s) {
    return {
        {"name", &s.name},
        {"seed", &s.seed},
        {"tx.baud_rate_hz", &s.tx.baud_rate_hz},
        {"tx.dc_bias", &s.tx.dc_bias},
        {"tx.dac_bandwidth_hz", &s.tx.dac_bandwidth_hz},
        {"tx.dac_bits", &s.tx.dac_bits},
        {"tx.launch_power_dbm", &s.tx.launch_power_dbm},
        {"mzm.v_pi", &s.tx.mzm.v_pi},
        {"mzm.bias_voltage", &s.tx.mzm.bias_voltage},
        {"mzm.drive_swing", &s.tx.mzm.drive_swing},
        {"fiber.length_km", &s.fiber.length_km},
        {"fiber.dispersion_ps_nm_km", &s.fiber.dispersion_ps_nm_km},
        {"fiber.wavelength_nm", &s.fiber.wavelength_nm},
        {"fiber.loss_db_km", &s.fiber.loss_db_km},
        {"noise.osnr_db", &s.noise.osnr_db},
        {"noise.rop_dbm", &s.noise.rop_dbm},
        {"noise.rop_to_osnr_offset_db", &s.noise.rop_to_osnr_offset_db},
        {"noise.electrical_snr_db", &s.noise.electrical_snr_db},
        {"noise.reference_bandwidth_nm", &s.noise.reference_bandwidth_nm},
        {"rx.pd_bandwidth_hz", &s.rx.pd_bandwidth_hz},
        {"rx.adc_rate_hz", &s.rx.adc_rate_hz},
        {"rx.adc_bits", &s.rx.adc_bits},
        {"rx.r_dc", &s.rx.r_dc},
        {"dsp.sps", &s.dsp.sps},
        {"dsp.rrc_rolloff", &s.dsp.rrc_rolloff},
        {"dsp.rrc_span", &s.dsp.rrc_span},
        {"dsp.pnle_k1", &s.dsp.pnle_k1},
        {"dsp.pnle_k2", &s.dsp.pnle_k2},
        {"dsp.pnle_k3", &s.dsp.pnle_k3},
        {"dsp.dfe_f1", &s.dsp.dfe_f1},
        {"dsp.dfe_f2", &s.dsp.dfe_f2},
        {"dsp.mlse_memory", &s.dsp.mlse_memory},
        {"dsp.adam_alpha1", &s.dsp.adam_alpha1},
        {"dsp.adam_alpha2", &s.dsp.adam_alpha2},
        {"dsp.adam_alpha3", &s.dsp.adam_alpha3},
        {"dsp.adam_epochs", &s.dsp.adam_epochs},
        {"dsp.adam_batch", &s.dsp.adam_batch},
        {"dsp.adam_decay_steps", &s.dsp.adam_decay_steps},
        {"dsp.lms_mu", &s.dsp.lms_mu},
        {"dsp.dfe_epochs", &s.dsp.dfe_epochs},
        {"dsp.hd_fec_threshold", &s.dsp.hd_fec_threshold},
        {"dsp.sd_fec_threshold", &s.dsp.sd_fec_threshold},
        {"dsp.psd_segment", &s.dsp.psd_segment},
        {"frame.total_symbols", &s.frame.total_symbols},
        {"frame.training_len", &s.frame.training_len},
    };
}

inline std::string slot_to_string(const Slot& slot) {
    char buf[64];
    if (auto p = std::get_if<double*>(&slot)) {
        std::snprintf(buf, sizeof buf, "%.17g", **p);
        return buf;
    }
    if (auto p = std::get_if<int*>(&slot)) return std::to_string(**p);
    if (auto p = std::get_if<long*>(&slot)) return std::to_string(**p);
    if (auto p = std::get_if<std::uint64_t*>(&slot)) return std::to_string(**p);
    if (auto p = std::get_if<std::string*>(&slot)) return **p;
    if (auto p = std::get_if<std::optional<double>*>(&slot)) {
        if (!(*p)->has_value()) return "none";
        std::snprintf(buf, sizeof buf, "%.17g", ***p);
        return buf;
    }
    return "?";
}

inline double parse_double(const std::string& v, const std::string& key) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ParameterError("cannot parse '" + v + "' for " + key);
    }
    if (pos != v.size()) throw ParameterError("trailing junk in value for " + key);
    return d;
}

inline void slot_from_string(const Slot& slot, const std::string& v, const std::string& key) {
    if (auto p = std::get_if<double*>(&slot)) {
        **p = parse_double(v, key);
    } else if (auto p = std::get_if<int*>(&slot)) {
        **p = static_cast<int>(std::llround(parse_double(v, key)));
    } else if (auto p = std::get_if<long*>(&slot)) {
        **p = static_cast<long>(std::llround(parse_double(v, key)));
    } else if (auto p = std::get_if<std::uint64_t*>(&slot)) {
        **p = std::stoull(v);
    } else if (auto p = std::get_if<std::string*>(&slot)) {
        **p = v;
    } else if (auto p = std::get_if<std::optional<double>*>(&slot)) {
        if (v == "none")
            (*p)->reset();
        else
            **p = parse_double(v, key);
    }
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace detail

// Canonical text form; parse(dump(s)) == s.
inline std::string dump_config(const LinkScenario& scenario) {
    LinkScenario s = scenario; // bind to a copy, slots are non-const
    std::ostringstream out;
    out << "# acmd scenario config\n";
    std::string section;
    for (const auto& b : detail::bindings(s)) {
        const auto dot = b.key.find('.');
        const std::string sec = dot == std::string::npos ? "" : b.key.substr(0, dot);
        const std::string name = dot == std::string::npos ? b.key : b.key.substr(dot + 1);
        if (sec != section) {
            out << "\n[" << sec << "]\n";
            section = sec;
        }
        out << name << " = " << detail::slot_to_string(b.slot) << "\n";
    }
    return out.str();
}

struct ParsedConfig {
    LinkScenario scenario;
    std::optional<SweepSpec> sweep;
};

inline ParsedConfig parse_config(std::istream& in, LinkScenario base = {}) {
    ParsedConfig out;
    out.scenario = std::move(base);
    auto binds = detail::bindings(out.scenario);
    std::map<std::string, detail::Slot> index;
    for (auto& b : binds) index.emplace(b.key, b.slot);

    SweepSpec sweep;
    bool has_sweep = false;
    std::string section, line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParameterError("config line without '=': " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section == "sweep") {
            has_sweep = true;
            if (key == "variable") {
                sweep.variable = sweep_variable_from_string(value);
            } else if (key == "trials") {
                sweep.trials = static_cast<int>(std::stol(value));
            } else if (key == "values") {
                sweep.values.clear();
                std::istringstream vs(value);
                std::string tok;
                while (std::getline(vs, tok, ','))
                    sweep.values.push_back(detail::parse_double(detail::trim(tok), key));
            } else {
                throw ParameterError("unknown sweep key: " + key);
            }
            continue;
        }
        const std::string full = section.empty() ? key : section + "." + key;
        const auto it = index.find(full);
        if (it == index.end()) throw ParameterError("unknown config key: " + full);
        detail::slot_from_string(it->second, value, full);
    }
    if (has_sweep) {
        sweep.validate();
        out.sweep = std::move(sweep);
    }
    return out;
}

// "section.key=value" (or "key=value" for top-level entries)
inline void apply_override(LinkScenario& scenario, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ParameterError("override must look like section.key=value");
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    for (auto& b : detail::bindings(scenario)) {
        if (b.key == key) {
            detail::slot_from_string(b.slot, value, key);
            return;
        }
    }
    throw ParameterError("unknown config key: " + key);
}

// Bundled presets. Tap numbers per transmission span follow the published
// configuration. The OSNR operating points are simulator calibrations (the
// experimental ROP axis is not reproducible in a model, so each preset pins
// an OSNR giving the same qualitative regime); rop_to_osnr_offset_db is
// chosen so the experiment's quoted ROP operating point for that span maps
// exactly onto the calibrated OSNR, which keeps ROP sweeps meaningful.
inline LinkScenario preset(const std::string& name) {
    LinkScenario s;
    s.name = name;
    s.tx.launch_power_dbm = 7.0;
    if (name == "obtb") {
        s.tx.launch_power_dbm = 0.0;
        s.fiber.length_km = 0.0;
        s.noise.osnr_db = 36.0;
        s.noise.rop_to_osnr_offset_db = 45.0; // error-free point quoted at -9 dBm
        s.dsp.pnle_k1 = 61;
        s.dsp.pnle_k2 = 21;
        s.dsp.pnle_k3 = 11;
        s.dsp.dfe_f1 = 15;
        s.dsp.dfe_f2 = 5;
        s.dsp.mlse_memory = 1; // two-tap post filter
    } else if (name == "50km") {
        s.fiber.length_km = 50.0;
        s.noise.osnr_db = 42.0;
        s.noise.rop_to_osnr_offset_db = 46.0; // operating point quoted at -4 dBm
        s.dsp.pnle_k1 = 111;
        s.dsp.pnle_k2 = 71;
        s.dsp.pnle_k3 = 41;
        s.dsp.dfe_f1 = 71;
        s.dsp.dfe_f2 = 31;
        s.dsp.mlse_memory = 10;
    } else if (name == "75km") {
        s.fiber.length_km = 75.0;
        s.noise.osnr_db = 44.0;
        s.noise.rop_to_osnr_offset_db = 52.5; // operating point quoted at -8.5 dBm
        s.dsp.pnle_k1 = 261;
        s.dsp.pnle_k2 = 81;
        s.dsp.pnle_k3 = 41;
        s.dsp.dfe_f1 = 71;
        s.dsp.dfe_f2 = 41;
        s.dsp.mlse_memory = 10;
    } else if (name == "100km") {
        s.fiber.length_km = 100.0;
        s.noise.osnr_db = 46.0;
        s.noise.rop_to_osnr_offset_db = 60.0; // operating point quoted at -14 dBm
        s.dsp.pnle_k1 = 291;
        s.dsp.pnle_k2 = 81;
        s.dsp.pnle_k3 = 41;
        s.dsp.dfe_f1 = 71;
        s.dsp.dfe_f2 = 61;
        s.dsp.mlse_memory = 10;
    } else {
        throw ParameterError("unknown preset: " + name + " (obtb|50km|75km|100km)");
    }
    return s;
}

inline bool is_preset_name(const std::string& name) {
    return name == "obtb" || name == "50km" || name == "75km" || name == "100km";
}

} // namespace acmd
