// Command-line front end for the link simulator: run single scenarios,
// sweep a variable over a worker pool, inspect configs, verify the fading
// nulls of a preset link, and regenerate plot CSVs from stored records.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acmd/acmd.hpp"

namespace fs = std::filesystem;
using namespace acmd;

namespace {

LinkScenario load_scenario(const std::string& source, std::optional<SweepSpec>* sweep = nullptr) {
    if (is_preset_name(source)) return preset(source);
    std::ifstream in(source);
    if (!in) throw ParameterError("cannot open config file: " + source);
    ParsedConfig parsed = parse_config(in);
    if (sweep) *sweep = parsed.sweep;
    return parsed.scenario;
}

void apply_cli_overrides(LinkScenario& s, const std::vector<std::string>& overrides,
                         const std::optional<std::uint64_t>& seed) {
    for (const std::string& o : overrides) apply_override(s, o);
    if (seed) s.seed = *seed;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParameterError("cannot write " + path.string());
    out << text;
}

void emit_run_artifacts(const fs::path& dir, const LinkScenario& s, const RunRecord& rec,
                        const RunArtifacts& art) {
    fs::create_directories(dir);
    write_file(dir / "scenario.cfg", dump_config(s));
    {
        std::ofstream out(dir / "records.jsonl");
        out << record_line(rec) << '\n';
    }
    {
        std::ofstream out(dir / "psd.csv");
        write_psd_csv(out, art.psd_received);
    }
    {
        std::ofstream out(dir / "eye_received.csv");
        write_eye_csv(out, art.eye_received);
    }
    {
        std::ofstream out(dir / "eye_pnle.csv");
        write_eye_csv(out, art.eye_pnle);
    }
    {
        std::ofstream out(dir / "eye_dfe.csv");
        write_eye_csv(out, art.eye_dfe);
    }
    {
        std::ofstream out(dir / "pdf_received.csv");
        write_pdf_csv(out, art.eye_received);
    }
    {
        std::ofstream out(dir / "pdf_pnle.csv");
        write_pdf_csv(out, art.eye_pnle);
    }
    {
        std::ofstream out(dir / "pdf_dfe.csv");
        write_pdf_csv(out, art.eye_dfe);
    }
    {
        std::ofstream out(dir / "taps.txt");
        EqualizerSnapshot snap;
        snap.pnle = art.pnle_taps;
        snap.dfe = art.dfe_taps;
        snap.post_filter = art.post_filter_taps;
        snap.autocorr = art.noise_autocorr;
        save_equalizer(out, snap);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acmd-sim: C-band IM/DD link simulator with adaptive channel-matched detection"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    int parallel = 1;
    std::string out_dir;
    std::vector<std::string> overrides;
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--parallel", parallel, "worker threads for sweeps")->capture_default_str();
    app.add_option("--out", out_dir, "directory for records and plot CSVs");
    app.add_option("--override", overrides, "config override, section.key=value")->take_all();

    std::string source;
    auto* cmd_run = app.add_subcommand("run", "run one scenario (preset name or config file)");
    cmd_run->add_option("scenario", source, "preset (obtb|50km|75km|100km) or config path")
        ->required();

    std::string sweep_source;
    auto* cmd_sweep = app.add_subcommand("sweep", "run the sweep described by a config file");
    cmd_sweep->add_option("config", sweep_source, "config path containing a [sweep] section")
        ->required();

    std::string dump_source{"custom"};
    auto* cmd_dump = app.add_subcommand("dump-config", "print a scenario config");
    cmd_dump->add_option("scenario", dump_source, "preset name, config path, or 'custom'");

    std::string null_source;
    auto* cmd_null = app.add_subcommand("null-check", "verify the fading-null count of a link");
    cmd_null->add_option("scenario", null_source, "preset name or config path")->required();

    std::string records_path;
    auto* cmd_plots = app.add_subcommand("emit-plots", "regenerate plot CSVs from records");
    cmd_plots->add_option("records", records_path, "records.jsonl path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            LinkScenario s = load_scenario(source);
            apply_cli_overrides(s, overrides, seed);
            RunArtifacts art;
            const RunRecord rec = run_scenario(s, out_dir.empty() ? nullptr : &art);
            std::cout << record_line(rec) << '\n';
            if (!out_dir.empty() && rec.error_stage.empty())
                emit_run_artifacts(out_dir, s, rec, art);
            if (!rec.error_stage.empty()) {
                std::cerr << "error [" << rec.error_stage << "]: " << rec.error_message << '\n';
                return 2;
            }
            return 0;
        }

        if (cmd_sweep->parsed()) {
            std::optional<SweepSpec> sweep;
            LinkScenario s = load_scenario(sweep_source, &sweep);
            if (!sweep) throw ParameterError("config has no [sweep] section: " + sweep_source);
            apply_cli_overrides(s, overrides, seed);
            const std::vector<RunRecord> recs = run_sweep(s, *sweep, parallel);
            bool failed = false;
            for (const RunRecord& r : recs) {
                std::cout << record_line(r) << '\n';
                if (!r.error_stage.empty()) {
                    std::cerr << "error [" << r.error_stage << "] seed " << r.seed << ": "
                              << r.error_message << '\n';
                    failed = true;
                }
            }
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                std::ofstream records(fs::path(out_dir) / "records.jsonl");
                std::ostringstream buffer;
                for (const RunRecord& r : recs) {
                    records << record_line(r) << '\n';
                    buffer << record_line(r) << '\n';
                }
                std::istringstream in(buffer.str());
                std::ofstream curve(fs::path(out_dir) / "ber_curve.csv");
                write_ber_curve_csv(curve, read_record_lines(in));
            }
            return failed ? 2 : 0;
        }

        if (cmd_dump->parsed()) {
            if (dump_source == "custom")
                std::cout << dump_config(LinkScenario{});
            else
                std::cout << dump_config(load_scenario(dump_source));
            return 0;
        }

        if (cmd_null->parsed()) {
            LinkScenario s = load_scenario(null_source);
            apply_cli_overrides(s, overrides, seed);
            const NullCheckResult res = null_check(s);
            std::cout << "link " << s.fiber.length_km << " km: " << res.count
                      << " nulls detected below " << s.tx.baud_rate_hz / 2.0 / 1e9
                      << " GHz (analytic " << res.expected << ")\n";
            for (std::size_t i = 0; i < res.frequencies_hz.size(); ++i) {
                std::cout << "  " << res.frequencies_hz[i] / 1e9 << " GHz";
                if (i < res.analytic_hz.size())
                    std::cout << " (analytic " << res.analytic_hz[i] / 1e9 << " GHz)";
                std::cout << '\n';
            }
            if (res.count != res.expected || !res.positions_within_one_bin) {
                std::cerr << "error [null-check]: measured nulls disagree with the analytic law\n";
                return 2;
            }
            return 0;
        }

        if (cmd_plots->parsed()) {
            std::ifstream in(records_path);
            if (!in) throw ParameterError("cannot open records file: " + records_path);
            const auto records = read_record_lines(in);
            const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
            fs::create_directories(dir);
            std::ofstream curve(dir / "ber_curve.csv");
            write_ber_curve_csv(curve, records);
            std::cout << "wrote " << (dir / "ber_curve.csv").string() << " (" << records.size()
                      << " records)\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error [config]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
