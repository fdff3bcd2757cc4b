#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tpl/analysis.hpp"
#include "tpl/calibration.hpp"
#include "tpl/cavity.hpp"
#include "tpl/error.hpp"
#include "tpl/pathways.hpp"
#include "tpl/scenario.hpp"

namespace fs = std::filesystem;
using namespace tpl;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// every file goes through here, from the main thread only
void write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw InvalidInput("cannot write '" + (dir / name).string() + "'");
    out << text;
}

std::string pairs_csv(const std::vector<std::pair<std::string, double>>& rows) {
    std::string s = "quantity,value\n";
    for (const auto& [k, v] : rows) s += k + "," + fmt(v) + "\n";
    return s;
}

std::string manifest(const std::string& command, const IntegratorOptions& opts,
                      const std::string& body) {
    std::ostringstream os;
    os << "# tplsim run manifest\n";
    os << "command = " << command << "\n";
    os << "seed = " << opts.seed << "\n";
    os << "rtol = " << fmt(opts.rtol) << "\n";
    os << "atol = " << fmt(opts.atol) << "\n\n";
    os << body;
    return os.str();
}

struct Common {
    std::string out = ".";
    int jobs = 0;
    std::uint64_t seed = 1;
    double tol = 1e-8;

    IntegratorOptions options() const {
        IntegratorOptions o;
        o.seed = seed;
        o.rtol = tol;
        o.atol = tol * 1e-2;
        return o;
    }
};

std::string metrics_rows_csv(const RunMetrics& m) {
    std::string s =
        "polarizer_deg,oscillating,dominant_period_us,peak_to_floor,modulation_depth,"
        "spectral_flatness,drop_dropped,drop_time_us,lyapunov_per_us,lyapunov_valid\n";
    for (const auto& r : m.rows) {
        s += fmt(r.polarizer_deg) + "," + (r.period.oscillating ? "1" : "0") + "," +
             fmt(r.period.period_us) + "," + fmt(r.period.peak_to_floor) + "," +
             fmt(r.modulation_depth) + "," + fmt(r.spectral_flatness) + "," +
             (r.drop.dropped ? "1" : "0") + "," + fmt(r.drop.time_us) + "," +
             (r.lyapunov ? fmt(r.lyapunov->exponent_per_us) : "") + "," +
             (r.lyapunov ? (r.lyapunov->valid ? "1" : "0") : "") + "\n";
    }
    return s;
}

void print_metrics(const RunMetrics& m) {
    std::printf("final n_tot        %.6g\n", m.final_n_tot);
    std::printf("final inversion    %.6g\n", m.final_inversion);
    std::printf("mean n_tot         %.6g (window from %.3g us)\n", m.mean_n_tot, m.window_start_us);
    for (const auto& r : m.rows) {
        std::printf("polarizer %5.1f deg: ", r.polarizer_deg);
        if (r.period.oscillating) std::printf("period %.5g us, ", r.period.period_us);
        else std::printf("no dominant period, ");
        std::printf("depth %.4g, flatness %.4g, ", r.modulation_depth, r.spectral_flatness);
        if (r.drop.dropped) std::printf("ac drop %.4g us", r.drop.time_us);
        else std::printf("ac not dropped");
        if (r.lyapunov)
            std::printf(", lyapunov %.4g /us%s", r.lyapunov->exponent_per_us,
                        r.lyapunov->valid ? "" : " (no scaling range)");
        std::printf("\n");
    }
}

std::string polarization_csv(const TimeSeries& ts) {
    std::string s = "t_us,s0,s1,s2,s3,ellipticity,major_axis_rad\n";
    for (const auto& p : polarization_track(ts))
        s += fmt(p.t_us) + "," + fmt(p.s.s0) + "," + fmt(p.s.s1) + "," + fmt(p.s.s2) + "," +
             fmt(p.s.s3) + "," + fmt(p.ellipticity) + "," + fmt(p.major_axis_angle) + "\n";
    return s;
}

std::string spectrum_csv(const Scenario& sc, const TimeSeries& ts) {
    const auto win = select_window(ts, sc.analysis_start_us(), sc.t_end_us);
    std::string s = "polarizer_deg,frequency_hz,power_density\n";
    if (win.samples.size() < 4) return s;
    for (double deg : sc.outputs.polarizer_deg) {
        const auto sp = periodogram(polarizer_projection(win, deg * constants::pi / 180.0));
        for (std::size_t k = 0; k < sp.frequency_hz.size(); ++k)
            s += fmt(deg) + "," + fmt(sp.frequency_hz[k]) + "," + fmt(sp.power_density[k]) + "\n";
    }
    return s;
}

int cmd_cavity(const Common& c, double length_cm, double radius_cm, int p, double t, double a,
               double wl_nm) {
    CavityGeometry g{length_cm * 1e-2, radius_cm * 1e-2, p, wl_nm * 1e-9};
    CavityLoss l{t, a};
    g.validate();
    l.validate();
    const auto s = summarize(g, l);
    const auto [short_l, long_l] = subconfocal_lengths(g.mirror_radius_m, p);
    std::vector<std::pair<std::string, double>> rows{
        {"finesse", s.finesse},
        {"fsr_hz", s.fsr_hz},
        {"mode_linewidth_hz", s.mode_linewidth_hz},
        {"kappa_per_s", s.kappa_per_s},
        {"cluster_spacing_hz", s.cluster_spacing_hz},
        {"subconfocal_short_m", short_l},
        {"subconfocal_long_m", long_l},
        {"power_per_photon_w", photon_number_to_output_power(1.0, g, l)},
    };
    for (const auto& [k, v] : rows) std::printf("%-22s %.10g\n", k.c_str(), v);
    write_file(c.out, "cavity.csv", pairs_csv(rows));
    return 0;
}

int cmd_simulate(const Common& c, const std::string& path, bool write_series) {
    const auto sc = load_scenario(path);
    const auto opts = c.options();
    const auto res = run_scenario(sc, opts);
    std::ostringstream series;
    if (write_series) {
        res.series.write_csv(series);
        write_file(c.out, "timeseries.csv", series.str());
        write_file(c.out, "polarization.csv", polarization_csv(res.series));
    }
    write_file(c.out, "metrics.csv", pairs_csv(metric_table(res.metrics)));
    write_file(c.out, "analysis.csv", metrics_rows_csv(res.metrics));
    if (sc.outputs.spectrum) write_file(c.out, "spectrum.csv", spectrum_csv(sc, res.series));
    std::ostringstream extra;
    extra << "# integrator: " << res.stats.accepted << " accepted, " << res.stats.rejected
          << " rejected, " << res.stats.segments << " segments\n\n";
    write_file(c.out, "manifest.txt", manifest("simulate " + path, opts, extra.str() + serialize(sc)));
    print_metrics(res.metrics);
    return 0;
}

int cmd_scan(const Common& c, const std::string& path) {
    const auto spec = parse_scan(read_file(path), fs::path(path).parent_path().string());
    const auto opts = c.options();
    const int jobs =
        c.jobs > 0 ? c.jobs : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    const auto rows = run_scan(spec, jobs, opts);
    write_file(c.out, "scan.csv", scan_csv(spec, rows));
    std::string body = "parameter = " + spec.parameter + "\nvalues =";
    for (std::size_t i = 0; i < spec.values.size(); ++i) body += (i ? ", " : " ") + spec.values[i];
    body += "\n\n# template\n" + serialize(scenario_from_doc(spec.base));
    write_file(c.out, "manifest.txt", manifest("scan " + path, opts, body));
    int failed = 0;
    for (const auto& r : rows) {
        if (r.ok)
            std::printf("%s = %-10s n_tot %-12.6g %s depth %.3g flatness %.3g %s\n",
                        spec.parameter.c_str(), r.value.c_str(), r.final_n_tot,
                        r.period.oscillating ? ("period " + fmt(r.period.period_us) + " us").c_str()
                                             : "no period",
                        r.modulation_depth, r.spectral_flatness,
                        r.drop.dropped ? "dropped" : "not dropped");
        else {
            ++failed;
            std::printf("%s = %-10s FAILED: %s\n", spec.parameter.c_str(), r.value.c_str(),
                        r.error.c_str());
        }
    }
    return failed == 0 ? 0 : 3;
}

int cmd_analyze(const Common& c, const std::string& path, const std::string& scn, double from,
                double to, std::vector<double> pol) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    const auto ts = TimeSeries::read_csv(in);
    if (ts.samples.empty()) throw InvalidInput("time series is empty");
    Scenario sc;
    if (!scn.empty()) {
        sc = load_scenario(scn);
    } else {
        sc.geometry = paper_geometry();
        sc.loss = paper_loss_with_pinholes();
        sc.outputs.settle_us = 0.0;
    }
    sc.t_end_us = to > 0.0 ? to : ts.samples.back().t_us;
    if (from >= 0.0) {
        sc.schedule.events.clear();
        sc.outputs.settle_us = from;
    }
    if (!pol.empty()) sc.outputs.polarizer_deg = pol;
    const auto m = analyze_series(sc, ts);
    write_file(c.out, "metrics.csv", pairs_csv(metric_table(m)));
    write_file(c.out, "analysis.csv", metrics_rows_csv(m));
    write_file(c.out, "polarization.csv", polarization_csv(ts));
    write_file(c.out, "manifest.txt",
               manifest("analyze " + path, c.options(),
                        "window_start_us = " + fmt(m.window_start_us) +
                            "\nwindow_end_us = " + fmt(sc.t_end_us) + "\n"));
    print_metrics(m);
    return 0;
}

int cmd_calibrate(const Common& c, double n_on, double n_un, double pump, double gamma,
                  double atoms, double threshold) {
    ModelParams base = paper_model();
    base.pump = pump;
    base.inversion_decay = gamma;
    base.atom_number = atoms;
    const auto m = calibrate(base, {n_on, n_un});
    const auto ss = single_mode_steady_states(m);
    const auto th = threshold_analysis(m, ss.d_on);
    std::vector<std::pair<std::string, double>> rows{
        {"gain_per_us", m.gain},
        {"sat_photons", m.sat_photons},
        {"n_on", ss.n_on},
        {"n_unstable", ss.n_unstable},
        {"d_on", ss.d_on},
        {"d_unstable", ss.d_unstable},
        {"d_min_at_d_on", th.d_min},
    };
    std::string block = serialize_model(m);
    if (threshold > 0.0) {
        TriggerPulse pulse;
        pulse.t_start_us = 5.0;
        const double eff = calibrate_coupling_efficiency(m, pulse, threshold);
        rows.push_back({"coupling_efficiency", eff});
        block += "\n# pulse coupling_efficiency = " + fmt(eff) + "\n";
    }
    std::printf("%s", block.c_str());
    write_file(c.out, "calibration.csv", pairs_csv(rows));
    write_file(c.out, "model.scn", block);
    write_file(c.out, "manifest.txt", manifest("calibrate", c.options(), block));
    return 0;
}

int cmd_entangle(const Common& c, const std::string& scn, double field, double a, double b) {
    ModelParams m = scn.empty() ? paper_model() : load_scenario(scn).model;
    if (field >= 0.0) m.zeeman.field_gauss = field;
    const double t2_s = m.coherence_time_us * 1e-6;
    const auto amps = emission_amplitudes(m.pathways, m.zeeman, t2_s);
    std::string table = "pathway,weight,zeeman_slope,detuning_hz,re_amplitude,im_amplitude\n";
    for (const auto& p : m.pathways) {
        const auto amp = amps[static_cast<std::size_t>(p.id)];
        table += std::string(to_string(p.id)) + "," + fmt(p.weight) + "," +
                 std::to_string(p.zeeman_slope) + "," + fmt(pathway_detuning(p, m.zeeman)) + "," +
                 fmt(amp.real()) + "," + fmt(amp.imag()) + "\n";
    }
    std::vector<std::pair<std::string, double>> rows;
    if (a >= 0.0 && b >= 0.0) {
        PairState s{complex{a, 0.0}, complex{b, 0.0}};
        rows.push_back({"amp_zz", a});
        rows.push_back({"amp_xx", b});
        rows.push_back({"concurrence", concurrence(s)});
    } else {
        const auto rep = build_pair_state(amps);
        rows.push_back({"abs_amp_zz", std::abs(rep.state.amp_zz)});
        rows.push_back({"abs_amp_xx", std::abs(rep.state.amp_xx)});
        rows.push_back({"concurrence", concurrence(rep.state)});
        rows.push_back({"cross_fraction", rep.cross_fraction});
    }
    std::printf("%s", table.c_str());
    for (const auto& [k, v] : rows) std::printf("%-16s %.12g\n", k.c_str(), v);
    write_file(c.out, "pathways.csv", table);
    write_file(c.out, "entangle.csv", pairs_csv(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-photon laser simulator"};
    app.require_subcommand(1);
    Common c;
    app.add_option("--out", c.out, "output directory");
    app.add_option("--jobs", c.jobs, "parallel scan points (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", c.seed, "seed for the random injection noise");
    app.add_option("--tol", c.tol, "relative integration tolerance")->check(CLI::PositiveNumber);

    auto* cav = app.add_subcommand("cavity", "resonator numbers");
    double length_cm = 1.464, radius_cm = 5.0, trans = 2e-4, absorb = 4e-6, wl_nm = 770.0;
    int order = 4;
    cav->add_option("--length-cm", length_cm);
    cav->add_option("--radius-cm", radius_cm);
    cav->add_option("--order", order);
    cav->add_option("--transmissivity", trans);
    cav->add_option("--absorption", absorb);
    cav->add_option("--wavelength-nm", wl_nm);

    auto* sim = app.add_subcommand("simulate", "run a scenario");
    std::string scn_path;
    bool no_series = false;
    sim->add_option("scenario", scn_path)->required();
    sim->add_flag("--no-series", no_series, "skip the time series files");

    auto* scan = app.add_subcommand("scan", "run a parameter scan");
    std::string scan_path;
    scan->add_option("scanspec", scan_path)->required();

    auto* an = app.add_subcommand("analyze", "analyse a time series csv");
    std::string csv_path, an_scn;
    double from = -1.0, to = -1.0;
    std::vector<double> pol;
    an->add_option("csv", csv_path)->required();
    an->add_option("--scenario", an_scn, "scenario that produced the series");
    an->add_option("--from-us", from, "window start");
    an->add_option("--to-us", to, "window end");
    an->add_option("--polarizer-deg", pol)->delimiter(',');

    auto* cal = app.add_subcommand("calibrate", "fit gain and saturation to the fixed points");
    double n_on = 2.2e6, n_un = 2.75e5, pump = 20.0, gamma = 5.0, atoms = 7e6, threshold = 0.0;
    cal->add_option("--n-on", n_on);
    cal->add_option("--n-unstable", n_un);
    cal->add_option("--pump", pump);
    cal->add_option("--gamma", gamma);
    cal->add_option("--atoms", atoms);
    cal->add_option("--trigger-threshold", threshold, "also fit the pulse coupling efficiency");

    auto* ent = app.add_subcommand("entangle", "pathway amplitudes and pair state");
    std::string ent_scn;
    double field = -1.0, amp_a = -1.0, amp_b = -1.0;
    ent->add_option("--scenario", ent_scn);
    ent->add_option("--field-G", field);
    ent->add_option("--amplitudes", amp_a, "zz amplitude (with --xx)");
    ent->add_option("--xx", amp_b, "xx amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*cav) return cmd_cavity(c, length_cm, radius_cm, order, trans, absorb, wl_nm);
        if (*sim) return cmd_simulate(c, scn_path, !no_series);
        if (*scan) return cmd_scan(c, scan_path);
        if (*an) return cmd_analyze(c, csv_path, an_scn, from, to, pol);
        if (*cal) return cmd_calibrate(c, n_on, n_un, pump, gamma, atoms, threshold);
        if (*ent) return cmd_entangle(c, ent_scn, field, amp_a, amp_b);
    } catch (const CalibrationInfeasible& e) {
        std::fprintf(stderr, "calibration infeasible: %s (feasible interval [%g, %g])\n", e.what(),
                     e.feasible_lo(), e.feasible_hi());
        return 4;
    } catch (const IntegrationFailure& e) {
        std::fprintf(stderr, "integration failed: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
