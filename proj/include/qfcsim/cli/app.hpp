#pragma once

// The qfcsim command-line tool. Every subcommand prints one JSON object
// (manifest + summary) on stdout and, with --out DIR, writes its point
// tables there as CSV files whose first line repeats the manifest.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.

#include "qfcsim/cli/csv.hpp"
#include "qfcsim/cli/manifest.hpp"
#include "qfcsim/qfcsim.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace qfcsim::cli {

using json = nlohmann::ordered_json;

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;
constexpr std::uint64_t default_seed = 42;
constexpr std::int64_t min_mc_trials = 100;

struct OutputTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct CommandResult {
    json summary = json::object();
    std::vector<OutputTable> tables;
};

namespace detail {

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_table(const std::filesystem::path& dir, const std::string& prefix,
                        const OutputTable& t, const json& manifest) {
    std::ofstream f(dir / (prefix + "_" + t.name + ".csv"), std::ios::binary);
    if (!f) throw ValidationError("cannot write to output directory '" + dir.string() + "'");
    f << "# manifest " << manifest.dump() << "\n";
    for (std::size_t i = 0; i < t.header.size(); ++i) f << (i ? "," : "") << t.header[i];
    f << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_number(row[i]);
        f << "\n";
    }
}

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("QFCSIM_SEED"); env && *env) {
        char* end = nullptr;
        errno = 0;
        const auto v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || *env == '-')
            throw ValidationError(std::string("QFCSIM_SEED is not an unsigned integer: '") + env +
                                  "'");
        return v;
    }
    return default_seed;
}

/// "0..10", "1,2" or "3".
inline std::vector<int> parse_counts(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        int v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size() || v < 0)
            throw ValidationError("--defect-counts: '" + text +
                                  "' is not a list like 0..10 or 1,2");
        return v;
    };
    std::vector<int> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const int lo = to_int(trim(text.substr(0, dots)));
        const int hi = to_int(trim(text.substr(dots + 2)));
        if (lo > hi) throw ValidationError("--defect-counts: range must be ascending");
        for (int n = lo; n <= hi; ++n) out.push_back(n);
        return out;
    }
    for (const auto& part : split(text)) out.push_back(to_int(part));
    return out;
}

inline EfficiencyMode parse_mode(const std::string& s) {
    return s == "at_nominal_q" ? EfficiencyMode::at_nominal_q : EfficiencyMode::peak_in_window;
}

inline SignConvention parse_sign(const std::string& s) {
    return s == "attenuating" ? SignConvention::attenuating : SignConvention::printed;
}

inline json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

inline json fit_params_json(const FitResult& fit, double scale, const std::string& unit) {
    json arr = json::array();
    for (const auto& p : fit.params) {
        auto scaled = [&](const std::optional<double>& v) {
            return v ? json(*v * scale) : json(nullptr);
        };
        arr.push_back({{"name", p.name},
                       {"value", p.value * scale},
                       {"std_error", scaled(p.std_error)},
                       {"ci95_lo", scaled(p.ci95_lo())},
                       {"ci95_hi", scaled(p.ci95_hi())},
                       {"unit", unit}});
    }
    return arr;
}

}  // namespace detail

/// State shared by the subcommand handlers: resolved seed and the bytes of
/// every input file read, which feed the config digest.
struct RunContext {
    std::uint64_t seed = default_seed;
    std::map<std::string, std::string> input_files;

    Table load(const std::string& role, const std::string& path,
               const std::vector<std::string>& columns) {
        auto bytes = read_file_bytes(path);
        std::istringstream in(bytes);
        auto t = parse_table(in, columns, path);
        input_files[role] = std::move(bytes);
        return t;
    }
};

namespace detail {

inline DefectMap load_defects(RunContext& ctx, const std::string& arg) {
    if (arg == "none") return DefectMap{};
    const auto t = ctx.load("defects", arg, {"position_um", "width_um"});
    std::vector<Defect> defects;
    for (const auto& r : t.rows) defects.push_back({r[0], r[1]});
    return DefectMap(std::move(defects));
}

inline std::vector<DataPoint> load_sweep(RunContext& ctx, const std::string& path,
                                         const std::string& y_column) {
    const auto t = ctx.load("data", path, {"pump_mw", y_column});
    std::vector<DataPoint> data;
    for (const auto& r : t.rows) data.push_back({units::mw_to_w(r[0]), r[1]});
    return data;
}

struct PumpSweep {
    std::vector<double> list_mw;
    double max_mw = 100.0;
    double step_mw = 2.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--pump-mw", list_mw, "Explicit pump powers (mW)")->delimiter(',');
        cmd->add_option("--pump-max-mw", max_mw, "Sweep end (mW)");
        cmd->add_option("--pump-step-mw", step_mw, "Sweep step (mW); the sweep starts at one step");
    }

    std::vector<double> powers_w() const {
        std::vector<double> mw = list_mw;
        if (mw.empty()) {
            qfcsim::detail::require(step_mw > 0.0 && max_mw >= step_mw,
                                    "pump sweep needs 0 < step <= max");
            const auto n = static_cast<int>(std::floor(max_mw / step_mw + 1e-9));
            for (int i = 1; i <= n; ++i) mw.push_back(step_mw * i);
        }
        std::vector<double> w;
        for (double p : mw) {
            qfcsim::detail::require(p >= 0.0, "pump powers must be >= 0");
            w.push_back(units::mw_to_w(p));
        }
        return w;
    }
};

struct Waveguide {
    double length_mm = 20.0;
    double period_um = 3.07;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--length-mm", length_mm, "Waveguide length (mm)");
        cmd->add_option("--period-um", period_um, "Poling period (um)");
    }
    WaveguideSpec spec() const { return WaveguideSpec(units::mm_to_cm(length_mm), period_um); }
};

struct Losses {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--alpha1", a1, "Signal attenuation (cm^-1)");
        cmd->add_option("--alpha2", a2, "Pump attenuation (cm^-1)");
        cmd->add_option("--alpha3", a3, "Converted-wave attenuation (cm^-1)");
    }
    LossSet set() const { return LossSet(a1, a2, a3); }
};

}  // namespace detail

/// Parses argv, runs one subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation and analysis of quantum frequency conversion in PPLN waveguides",
                 "qfcsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    RunContext ctx;
    std::optional<std::uint64_t> seed_flag;
    std::string out_dir;
    int threads = 1;
    std::function<CommandResult()> handler;
    std::string command_name;
    // options that do not influence the numbers
    const std::set<std::string> digest_excluded{"--out", "--threads", "--help"};
    const std::set<std::string> file_options{"data", "--defects", "--profile"};

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed_flag, "RNG seed (overrides QFCSIM_SEED; default 42)");
        cmd->add_option("--out", out_dir, "Directory for CSV tables");
    };
    auto bind = [&](CLI::App* cmd, std::string name, std::function<CommandResult()> fn) {
        cmd->callback([&handler, &command_name, name = std::move(name), fn = std::move(fn)] {
            command_name = name;
            handler = fn;
        });
    };

    // tuning-curve --------------------------------------------------------
    detail::Waveguide tc_wg;
    std::string tc_defects;
    std::string tc_mode = "peak_in_window";
    double tc_span = 10.0;
    int tc_points = 1001;
    {
        auto* cmd = app.add_subcommand("tuning-curve", "Relative efficiency versus grating frequency");
        common(cmd);
        tc_wg.add_to(cmd);
        cmd->add_option("--defects", tc_defects, "Defect map CSV (position_um,width_um) or 'none'")
            ->required();
        cmd->add_option("--mode", tc_mode, "Summary efficiency mode")
            ->check(CLI::IsMember({"at_nominal_q", "peak_in_window"}));
        cmd->add_option("--q-span", tc_span, "Half-width of the q window in units of 1/L");
        cmd->add_option("--points", tc_points, "Number of q samples");
        bind(cmd, "tuning-curve", [&] {
            const auto spec = tc_wg.spec();
            const auto defects = detail::load_defects(ctx, tc_defects);
            defects.check_within(spec);
            qfcsim::detail::require(tc_span > 0.0, "--q-span must be > 0");
            const double q0 = spec.nominal_q();
            const double dq = tc_span / spec.length_um();
            const auto curve = tuning_curve(spec, defects, q0 - dq, q0 + dq, tc_points);
            const auto s = summarize(curve);
            CommandResult r;
            r.summary = {{"mode", tc_mode},
                         {"defects", defects.size()},
                         {"relative_eta", relative_efficiency(spec, defects, detail::parse_mode(tc_mode))},
                         {"curve_peak_q_per_um", s.peak_q},
                         {"curve_peak_relative_eta", s.peak_value},
                         {"fwhm_per_um", s.fwhm}};
            OutputTable t{"curve", {"q_per_um", "relative_eta"}, {}};
            for (std::size_t i = 0; i < curve.q_values.size(); ++i)
                t.rows.push_back({curve.q_values[i], curve.relative_eta[i]});
            r.tables.push_back(std::move(t));
            return r;
        });
    }

    // evolution -----------------------------------------------------------
    detail::Waveguide ev_wg;
    std::string ev_defects;
    std::optional<double> ev_q;
    int ev_points = 401;
    {
        auto* cmd = app.add_subcommand("evolution", "Relative efficiency along the waveguide");
        common(cmd);
        ev_wg.add_to(cmd);
        cmd->add_option("--defects", ev_defects, "Defect map CSV or 'none'")->required();
        cmd->add_option("--q-per-um", ev_q, "Grating frequency (default 1/period)");
        cmd->add_option("--points", ev_points, "Uniform z samples");
        bind(cmd, "evolution", [&] {
            const auto spec = ev_wg.spec();
            const auto defects = detail::load_defects(ctx, ev_defects);
            const auto samples =
                efficiency_evolution(spec, defects, ev_q.value_or(spec.nominal_q()), ev_points);
            CommandResult r;
            r.summary = {{"q_per_um", ev_q.value_or(spec.nominal_q())},
                         {"final_relative_eta", samples.back().relative_eta}};
            OutputTable t{"evolution", {"z_mm", "relative_eta"}, {}};
            for (const auto& s : samples) t.rows.push_back({units::cm_to_mm(s.z_cm), s.relative_eta});
            r.tables.push_back(std::move(t));
            return r;
        });
    }

    // mc ------------------------------------------------------------------
    detail::Waveguide mc_wg;
    std::string mc_counts = "0..10";
    std::int64_t mc_trials = 10000;
    double mc_width = 12.3;
    double mc_threshold = 0.9;
    std::string mc_mode = "peak_in_window";
    int mc_bins = 0;
    std::vector<double> mc_lengths_mm;
    {
        auto* cmd = app.add_subcommand("mc", "Monte Carlo yield versus number of poling defects");
        common(cmd);
        mc_wg.add_to(cmd);
        cmd->add_option("--defect-counts", mc_counts, "Defect counts, e.g. 0..10 or 1,2");
        cmd->add_option("--trials", mc_trials, "Trials per defect count (>= 100)");
        cmd->add_option("--width-mean-um", mc_width, "Mean defect width (um)");
        cmd->add_option("--threshold", mc_threshold, "Relative-efficiency threshold");
        cmd->add_option("--mode", mc_mode, "Efficiency mode")
            ->check(CLI::IsMember({"at_nominal_q", "peak_in_window"}));
        cmd->add_option("--threads", threads, "Worker threads (results do not depend on it)");
        cmd->add_option("--bins", mc_bins, "Also write efficiency histograms with this many bins");
        cmd->add_option("--lengths-mm", mc_lengths_mm, "Also estimate yield at these lengths (mm)")
            ->delimiter(',');
        bind(cmd, "mc", [&] {
            if (mc_trials < min_mc_trials)
                throw ValidationError("--trials must be >= " + std::to_string(min_mc_trials) +
                                      " (got " + std::to_string(mc_trials) + ")");
            qfcsim::detail::require(threads >= 1, "--threads must be >= 1");
            const auto spec = mc_wg.spec();
            const auto counts = detail::parse_counts(mc_counts);
            McConfig cfg;
            cfg.trials = mc_trials;
            cfg.seed = ctx.seed;
            cfg.threshold = mc_threshold;
            cfg.mode = detail::parse_mode(mc_mode);
            cfg.workers = static_cast<unsigned>(threads);
            const WidthDistribution dist{mc_width};

            CommandResult r;
            OutputTable prob{"probability", {"n_defects", "p_hat", "ci_lo", "ci_hi"}, {}};
            OutputTable hist{"histogram", {"n_defects", "bin_lo", "bin_hi", "mass"}, {}};
            OutputTable by_len{"length", {"n_defects", "length_mm", "p_hat", "ci_lo", "ci_hi"}, {}};
            json rows = json::array();
            for (int n : counts) {
                const auto set = run_trials(spec, n, dist, cfg);
                auto est = estimate_probability(set.relative_eta, cfg.threshold);
                prob.rows.push_back({double(n), est.p_hat, est.ci_lo, est.ci_hi});
                json row = {{"n_defects", n},
                            {"p_hat", est.p_hat},
                            {"ci_lo", est.ci_lo},
                            {"ci_hi", est.ci_hi},
                            {"zero_width_defects", set.zero_width_defects}};
                if (mc_bins > 0) {
                    const auto h = make_histogram(set.relative_eta, mc_bins);
                    for (int b = 0; b < mc_bins; ++b)
                        hist.rows.push_back({double(n), h.edges[b], h.edges[b + 1], h.mass[b]});
                    row["mean_relative_eta"] = h.mean;
                }
                rows.push_back(std::move(row));
                if (!mc_lengths_mm.empty()) {
                    std::vector<double> lengths_cm;
                    for (double mm : mc_lengths_mm) lengths_cm.push_back(units::mm_to_cm(mm));
                    for (const auto& lp : probability_vs_length(spec, n, lengths_cm, dist, cfg))
                        by_len.rows.push_back({double(n), units::cm_to_mm(lp.length_cm),
                                               lp.estimate.p_hat, lp.estimate.ci_lo,
                                               lp.estimate.ci_hi});
                }
            }
            r.summary = {{"trials", mc_trials}, {"threshold", mc_threshold}, {"mode", mc_mode},
                         {"results", rows}};
            r.tables.push_back(std::move(prob));
            if (mc_bins > 0) r.tables.push_back(std::move(hist));
            if (!mc_lengths_mm.empty()) r.tables.push_back(std::move(by_len));
            return r;
        });
    }

    // cme -----------------------------------------------------------------
    double cme_eta_pct = 0.0;
    detail::Losses cme_loss;
    double cme_length_mm = 20.0;
    double cme_signal_mw = 1e-6;
    detail::PumpSweep cme_sweep;
    {
        auto* cmd = app.add_subcommand("cme", "Internal efficiency from the lossy coupled-mode equations");
        common(cmd);
        cmd->add_option("--eta-nor", cme_eta_pct, "Normalized efficiency (%/(W cm^2))")->required();
        cme_loss.add_to(cmd);
        cmd->add_option("--length-mm", cme_length_mm, "Waveguide length (mm)");
        cmd->add_option("--signal-mw", cme_signal_mw, "Launched signal power (mW)");
        cme_sweep.add_to(cmd);
        bind(cmd, "cme", [&] {
            CmeParams p;
            p.eta_nor = units::percent_eta_to_internal(cme_eta_pct);
            p.losses = cme_loss.set();
            p.length_cm = units::mm_to_cm(cme_length_mm);
            p.signal_power_w = units::mw_to_w(cme_signal_mw);
            const auto curve = internal_efficiency_curve(p, cme_sweep.powers_w());
            CommandResult r;
            OutputTable t{"efficiency", {"pump_mw", "eta_int"}, {}};
            std::size_t best = 0;
            for (std::size_t i = 0; i < curve.size(); ++i) {
                t.rows.push_back({units::w_to_mw(curve[i].pump_power_w), curve[i].eta_int});
                if (curve[i].eta_int > curve[best].eta_int) best = i;
            }
            r.summary = {{"eta_nor_percent", cme_eta_pct},
                         {"peak_pump_mw", units::w_to_mw(curve[best].pump_power_w)},
                         {"peak_eta_int", curve[best].eta_int}};
            r.tables.push_back(std::move(t));
            return r;
        });
    }

    // noise ---------------------------------------------------------------
    double nz_a = 0.0;
    double nz_eta_pct = 0.0;
    double nz_eta_max = 1.0;
    detail::Losses nz_loss;
    double nz_length_mm = 20.0;
    std::string nz_sign = "printed";
    std::string nz_model = "lossy";
    bool nz_enr = false;
    ThroughputBudget nz_budget;
    double nz_signal_mw = 1e-6;
    detail::PumpSweep nz_sweep;
    {
        auto* cmd = app.add_subcommand("noise", "Noise counts versus pump power, optionally with ENR");
        common(cmd);
        cmd->add_option("--a", nz_a, "Noise coefficient (Hz/(W cm))")->required();
        cmd->add_option("--eta-nor", nz_eta_pct, "Normalized efficiency (%/(W cm^2))")->required();
        cmd->add_option("--eta-max", nz_eta_max, "Peak internal efficiency for back-conversion");
        nz_loss.add_to(cmd);
        cmd->add_option("--length-mm", nz_length_mm, "Waveguide length (mm)");
        cmd->add_option("--sign", nz_sign, "Pump-profile convention")
            ->check(CLI::IsMember({"printed", "attenuating"}));
        cmd->add_option("--model", nz_model, "Noise model")
            ->check(CLI::IsMember({"lossy", "lossless"}));
        cmd->add_flag("--enr", nz_enr, "Also compute external efficiency and ENR");
        cmd->add_option("--twg", nz_budget.t_waveguide, "Waveguide transmission");
        cmd->add_option("--collect", nz_budget.t_collect, "Collection transmission");
        cmd->add_option("--filter", nz_budget.t_filter, "Filter transmission");
        cmd->add_option("--signal-mw", nz_signal_mw, "Signal power for the efficiency solve (mW)");
        nz_sweep.add_to(cmd);
        bind(cmd, "noise", [&] {
            NoiseParams np;
            np.a_hz_per_w_per_cm = nz_a;
            np.alpha_pump_per_cm = nz_loss.a2;
            np.alpha_dfg_per_cm = nz_loss.a3;
            np.eta_nor = units::percent_eta_to_internal(nz_eta_pct);
            np.eta_int_max = nz_eta_max;
            np.length_cm = units::mm_to_cm(nz_length_mm);
            np.sign = detail::parse_sign(nz_sign);
            np.validate();
            const auto sweep = nz_sweep.powers_w();
            CommandResult r;
            r.summary = {{"model", nz_model}, {"sign", nz_sign}};
            if (!nz_enr) {
                OutputTable t{"noise", {"pump_mw", "noise_hz"}, {}};
                for (double p : sweep)
                    t.rows.push_back({units::w_to_mw(p), nz_model == "lossy" ? noise_lossy(p, np)
                                                                             : noise_lossless(p, np)});
                r.summary["points"] = t.rows.size();
                r.tables.push_back(std::move(t));
                return r;
            }
            qfcsim::detail::require(nz_model == "lossy", "--enr uses the lossy noise model");
            CmeParams cp;
            cp.eta_nor = np.eta_nor;
            cp.losses = nz_loss.set();
            cp.length_cm = np.length_cm;
            cp.signal_power_w = units::mw_to_w(nz_signal_mw);
            const auto curve = enr_curve(sweep, np, cp, nz_budget);
            OutputTable t{"enr", {"pump_mw", "eta_int", "eta_ext", "noise_hz", "enr"}, {}};
            for (const auto& pt : curve.points)
                t.rows.push_back({units::w_to_mw(pt.pump_power_w), pt.eta_int, pt.eta_ext,
                                  pt.noise_hz, pt.enr.value_or(std::nan(""))});
            const auto& best_eta = curve.points[curve.argmax_eta_ext];
            r.summary["argmax_eta_ext_pump_mw"] = units::w_to_mw(best_eta.pump_power_w);
            r.summary["max_eta_ext"] = best_eta.eta_ext;
            r.summary["argmax_enr_pump_mw"] =
                curve.argmax_enr
                    ? json(units::w_to_mw(curve.points[*curve.argmax_enr].pump_power_w))
                    : json(nullptr);
            r.tables.push_back(std::move(t));
            return r;
        });
    }

    // budget --------------------------------------------------------------
    ThroughputBudget bd;
    double bd_eta = 0.0;
    {
        auto* cmd = app.add_subcommand("budget", "External efficiency from the throughput budget");
        common(cmd);
        cmd->add_option("--twg", bd.t_waveguide, "Waveguide transmission")->required();
        cmd->add_option("--eta-int", bd_eta, "Internal efficiency")->required();
        cmd->add_option("--collect", bd.t_collect, "Collection transmission")->required();
        cmd->add_option("--filter", bd.t_filter, "Filter transmission")->required();
        cmd->add_option("--detector", bd.detector_efficiency, "Detector efficiency");
        bind(cmd, "budget", [&] {
            const double eta_ext = external_efficiency(bd, bd_eta);
            CommandResult r;
            r.summary = {{"eta_ext", eta_ext},
                         {"eta_ext_with_detector", eta_ext * bd.detector_efficiency}};
            return r;
        });
    }

    // fit -----------------------------------------------------------------
    std::string fit_model;
    std::string fit_file;
    detail::Losses fit_loss;
    double fit_length_mm = 20.0;
    std::size_t fit_n = 5;
    bool fit_launched = false;
    double fit_eta_pct = 0.0;
    double fit_eta_max = 1.0;
    std::string fit_sign = "printed";
    {
        auto* cmd = app.add_subcommand("fit", "Fit efficiency or noise models to a measured sweep");
        common(cmd);
        cmd->add_option("--model", fit_model, "Model to fit")
            ->required()
            ->check(CLI::IsMember({"sin2", "lowconv", "noise-lossless", "noise-lossy"}));
        cmd->add_option("data", fit_file, "Sweep CSV (pump_mw,eta_int or pump_mw,counts_hz)")
            ->required();
        fit_loss.add_to(cmd);
        cmd->add_option("--length-mm", fit_length_mm, "Waveguide length (mm)");
        cmd->add_option("--n-points", fit_n, "Low-power points used by lowconv");
        cmd->add_flag("--launched-power", fit_launched,
                      "Powers are launched; convert to output power with e^{-alpha2 L}");
        cmd->add_option("--eta-nor", fit_eta_pct, "Normalized efficiency for noise models (%/(W cm^2))");
        cmd->add_option("--eta-max", fit_eta_max, "Peak internal efficiency for noise models");
        cmd->add_option("--sign", fit_sign, "Pump-profile convention for noise-lossy")
            ->check(CLI::IsMember({"printed", "attenuating"}));
        bind(cmd, "fit", [&] {
            const double L = units::mm_to_cm(fit_length_mm);
            qfcsim::detail::require(L > 0.0, "--length-mm must be > 0");
            const auto losses = fit_loss.set();
            const bool noise = fit_model.rfind("noise", 0) == 0;
            auto data = detail::load_sweep(ctx, fit_file, noise ? "counts_hz" : "eta_int");
            if (fit_launched)
                for (auto& d : data) d.x *= std::exp(-losses.alpha2() * L);
            FitResult fit;
            double scale = 1.0;
            std::string unit;
            if (fit_model == "lowconv") {
                fit = fit_efficiency_low_conversion(data, losses, L, fit_n);
                scale = units::internal_eta_to_percent(1.0);
                unit = "%/(W cm^2)";
            } else if (fit_model == "sin2") {
                fit = fit_efficiency_sin2(data, L);
                scale = units::internal_eta_to_percent(1.0);
                unit = "%/(W cm^2)";
            } else {
                NoiseParams np;
                np.alpha_pump_per_cm = losses.alpha2();
                np.alpha_dfg_per_cm = losses.alpha3();
                np.eta_nor = units::percent_eta_to_internal(fit_eta_pct);
                np.eta_int_max = fit_eta_max;
                np.length_cm = L;
                np.sign = detail::parse_sign(fit_sign);
                np.validate();
                fit = fit_noise(data, np,
                                fit_model == "noise-lossy" ? NoiseModelKind::lossy
                                                           : NoiseModelKind::lossless);
                unit = "Hz/(W cm)";
            }
            CommandResult r;
            r.summary = {{"model", fit_model},
                         {"params", detail::fit_params_json(fit, scale, unit)},
                         {"r2", fit.r2},
                         {"points", data.size()},
                         {"iterations", fit.iterations},
                         {"converged", fit.converged}};
            // residuals cover the points the fit used; lowconv keeps the lowest n
            std::vector<DataPoint> used(data);
            if (fit_model == "lowconv") {
                std::stable_sort(used.begin(), used.end(),
                                 [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
                used.resize(fit.residuals.size());
            }
            OutputTable t{"residuals", {"pump_mw", "measured", "residual"}, {}};
            for (std::size_t i = 0; i < used.size() && i < fit.residuals.size(); ++i)
                t.rows.push_back({units::w_to_mw(used[i].x), used[i].y, fit.residuals[i]});
            r.tables.push_back(std::move(t));
            return r;
        });
    }

    // loss ----------------------------------------------------------------
    std::string cut_file;
    std::string fp_file;
    std::optional<double> fp_contrast_flag;
    double fp_index = 0.0;
    double fp_length_mm = 0.0;
    {
        auto* loss = app.add_subcommand("loss", "Propagation loss from cut-back or Fabry-Perot data");
        loss->require_subcommand(1);
        auto* cut = loss->add_subcommand("cutback", "Fit ln T = c - alpha L");
        common(cut);
        cut->add_option("data", cut_file, "CSV with length_cm,transmission")->required();
        bind(cut, "loss cutback", [&] {
            const auto t = ctx.load("data", cut_file, {"length_cm", "transmission"});
            std::vector<CutbackPoint> pts;
            for (const auto& row : t.rows) pts.push_back({row[0], row[1]});
            const auto res = cutback_fit(pts);
            CommandResult r;
            r.summary = {{"alpha_per_cm", res.alpha_per_cm},
                         {"std_error", detail::optional_json(res.std_error)},
                         {"r2", res.r2},
                         {"intercept", res.intercept}};
            OutputTable out_t{"cutback", {"length_cm", "ln_transmission", "fitted"}, {}};
            for (const auto& p : pts)
                out_t.rows.push_back({p.length_cm, std::log(p.transmission),
                                      res.intercept - res.alpha_per_cm * p.length_cm});
            r.tables.push_back(std::move(out_t));
            return r;
        });

        auto* fp = loss->add_subcommand("fp", "Fabry-Perot fringe contrast to loss");
        common(fp);
        auto* file_opt = fp->add_option("data", fp_file, "CSV with frequency_ghz,transmission");
        auto* b_opt = fp->add_option("--contrast", fp_contrast_flag, "Precomputed contrast Tmin/Tmax");
        file_opt->excludes(b_opt);
        fp->add_option("--index", fp_index, "Refractive index")->required();
        fp->add_option("--length-mm", fp_length_mm, "Cavity length (mm)")->required();
        bind(fp, "loss fp", [&] {
            FpMeasurement m;
            m.refractive_index = fp_index;
            m.length_cm = units::mm_to_cm(fp_length_mm);
            if (fp_contrast_flag) {
                m.contrast = fp_contrast_flag;
            } else {
                qfcsim::detail::require(!fp_file.empty(), "give a spectrum file or --contrast");
                const auto t = ctx.load("data", fp_file, {"frequency_ghz", "transmission"});
                for (const auto& row : t.rows) m.spectrum.push_back({row[0], row[1]});
            }
            const auto res = fp_loss(m);
            CommandResult r;
            r.summary = {{"alpha_per_cm", res.alpha_per_cm}, {"b", res.b}};
            if (res.contrast) {
                r.summary["t_max"] = res.contrast->t_max;
                r.summary["t_min"] = res.contrast->t_min;
                r.summary["extrema_found"] = res.contrast->extrema_found;
            }
            return r;
        });
    }

    // detune --------------------------------------------------------------
    std::string dt_profile;
    TuningModel dt_model;
    double dt_lo = 527.20, dt_hi = 527.40;
    int dt_grid = 201;
    {
        auto* cmd = app.add_subcommand("detune", "Pump wavelength that minimizes SPDC noise");
        common(cmd);
        cmd->add_option("--profile", dt_profile, "Noise profile CSV (temperature_c,counts_hz)")
            ->required();
        cmd->add_option("--lambda-ref-nm", dt_model.lambda_ref_nm, "Reference pump wavelength (nm)");
        cmd->add_option("--t-dfg-ref-c", dt_model.t_dfg_ref_c, "DFG temperature at reference (C)");
        cmd->add_option("--slope-dfg", dt_model.slope_dfg_c_per_pm, "DFG tuning slope (C/pm)");
        cmd->add_option("--t-spdc-ref-c", dt_model.t_spdc_ref_c, "SPDC temperature at reference (C)");
        cmd->add_option("--slope-spdc", dt_model.slope_spdc_c_per_pm, "SPDC tuning slope (C/pm)");
        cmd->add_option("--lambda-min-nm", dt_lo, "Scan start (nm)");
        cmd->add_option("--lambda-max-nm", dt_hi, "Scan end (nm)");
        cmd->add_option("--grid", dt_grid, "Scan points");
        bind(cmd, "detune", [&] {
            const auto t = ctx.load("profile", dt_profile, {"temperature_c", "counts_hz"});
            std::vector<NoiseSample> samples;
            for (const auto& row : t.rows) samples.push_back({row[0], row[1]});
            const NoiseProfile profile(std::move(samples));
            const auto choice = suggest_pump_detuning(dt_model, profile, {dt_lo, dt_hi}, dt_grid);
            const auto op = predict_operating_points(dt_model, choice.lambda_opt_nm);
            const double ref_noise = profile.covers(dt_model.t_dfg_ref_c)
                                         ? profile.at(dt_model.t_dfg_ref_c)
                                         : std::nan("");
            CommandResult r;
            r.summary = {{"lambda_opt_nm", choice.lambda_opt_nm},
                         {"predicted_noise_hz", choice.predicted_noise_hz},
                         {"t_dfg_c", op.t_dfg_c},
                         {"worst_lambda_nm", choice.worst_lambda_nm},
                         {"worst_noise_hz", choice.worst_noise_hz},
                         {"reference_noise_hz", ref_noise}};
            OutputTable out_t{"scan", {"lambda_nm", "t_dfg_c", "t_probe_c", "noise_hz"}, {}};
            for (int i = 0; i < dt_grid; ++i) {
                const double lambda = dt_lo + (dt_hi - dt_lo) * i / (dt_grid - 1);
                const double tdfg = predict_operating_points(dt_model, lambda).t_dfg_c;
                const double probe = tdfg - dt_model.spdc_shift_c(lambda);
                out_t.rows.push_back({lambda, tdfg, probe, profile.at(probe)});
            }
            r.tables.push_back(std::move(out_t));
            return r;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        ctx.seed = detail::resolve_seed(seed_flag);
        CommandResult result = handler();

        // digest over the options of the invoked (sub)subcommand
        std::map<std::string, std::string> settings;
        const CLI::App* leaf = &app;
        while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
        for (const auto* opt : leaf->get_options()) {
            const std::string name = opt->get_name();
            if (digest_excluded.count(name) || name == "--seed") continue;
            // file paths are replaced by the bytes read from them
            if (file_options.count(name) && opt->count() && opt->results().front() != "none")
                continue;
            std::string value;
            if (opt->count()) {
                for (const auto& v : opt->results()) value += v + ";";
            } else {
                value = "<default>";
            }
            settings[name] = value;
        }
        settings["seed"] = std::to_string(ctx.seed);

        RunManifest manifest{tool_version, command_name,
                             config_digest(command_name, settings, ctx.input_files), ctx.seed,
                             utc_timestamp()};
        json manifest_json = manifest;

        json tables = json::array();
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::string prefix = command_name;
            std::replace(prefix.begin(), prefix.end(), ' ', '_');
            for (const auto& t : result.tables) {
                detail::write_table(out_dir, prefix, t, manifest_json);
                tables.push_back(prefix + "_" + t.name + ".csv");
            }
        }
        json doc = {{"manifest", manifest_json}, {"summary", result.summary}, {"tables", tables}};
        out << doc.dump(2) << "\n";
        return exit_ok;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }
}

}  // namespace qfcsim::cli
