#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "tpl/analysis.hpp"
#include "tpl/calibration.hpp"
#include "tpl/cavity.hpp"
#include "tpl/pathways.hpp"
#include "tpl/scenario.hpp"

using namespace tpl;

namespace {

std::string scn(const std::string& name) { return std::string(TPL_SCENARIO_DIR) + "/" + name; }

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

int failures = 0;

template <class F>
void criterion(int id, const char* title, F&& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + "exception: " + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s) | %s\n", o.pass ? "PASS" : "FAIL", id, title, secs,
                o.detail.c_str());
    std::fflush(stdout);
}

RunResult run_with_ninj(double n_inj) {
    auto doc = ConfigDoc::parse([] {
        std::ifstream in(scn("paper_fig3.scn"));
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", n_inj);
    doc.set_path("event.1.n_inj", buf);
    return run_scenario(scenario_from_doc(doc));
}

template <class F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
    criterion(1, "cavity golden values", [](Outcome& o) {
        const double f = finesse({2e-4, 4e-6});
        o.check(f >= 15250.0 && f <= 15550.0, fmt("finesse %.1f", f));
        const double fsr = free_spectral_range(1.464e-2);
        o.check(within(fsr, 10.24e9, 1e-3), fmt("FSR %.5g Hz", fsr));
        const CavityLoss l15140{2e-4, constants::pi / 15140.0 - 2e-4};
        const double lw = mode_linewidth(paper_geometry(), l15140);
        o.check(within(lw, 680e3, 0.01), fmt("linewidth %.1f Hz", lw));
        const double sc = subconfocal_lengths(0.05, 4).first;
        o.check(within(sc, 1.464e-2, 1e-4), fmt("subconfocal short %.6g m", sc));
        const double cs = cluster_spacing(paper_geometry());
        o.check(within(cs, 2.56e9, 1e-3), fmt("cluster spacing %.5g Hz", cs));
    });

    criterion(2, "threshold structure", [](Outcome& o) {
        const auto m = paper_model();
        const auto off = off_state(m);
        const double n_star = separatrix_initial_photons(m, off);
        const double n_un = threshold_analysis(m, off.inversion).n_unstable;
        o.check(within(n_un, n_star, 0.1), fmt("n* %.6g", n_star) + fmt(" vs n_unstable %.6g", n_un));
        o.check(n_star > 2.2e5 && n_star < 3.3e5, "n* in (2.2e5, 3.3e5)");
    });

    criterion(3, "trigger reproduction", [](Outcome& o) {
        const auto low = run_with_ninj(1.1e5);
        o.check(low.metrics.final_n_tot < 1.0, fmt("1.1e5 -> %.3g", low.metrics.final_n_tot));
        const auto mid = run_with_ninj(2.2e5);
        o.check(mid.metrics.final_n_tot < 1.0, fmt("2.2e5 -> %.3g", mid.metrics.final_n_tot));
        double plateau_end = 6.2;
        for (const auto& s : mid.series.samples)
            if (s.t_us >= 6.2) {
                if (s.n_tot() > 1e3) plateau_end = s.t_us;
                else break;
            }
        o.check(plateau_end - 6.2 >= 2.0, fmt("plateau above 1e3 for %.2f us", plateau_end - 6.2));
        const auto high = run_with_ninj(3.3e5);
        const auto& smp = high.series.samples;
        // last time the trace was outside the +-5% band
        double settled = smp.front().t_us;
        for (const auto& s : smp)
            if (!within(s.n_tot(), 2.2e6, 0.05)) settled = s.t_us;
        const double hold = smp.back().t_us - settled;
        o.check(within(high.metrics.final_n_tot, 2.2e6, 0.05), fmt("3.3e5 -> %.4g", high.metrics.final_n_tot));
        o.check(hold >= 50.0, fmt("held within 5%% for %.1f us", hold));
    });

    criterion(4, "off-state stability", [](Outcome& o) {
        auto sc = load_scenario(scn("paper_cavity.scn"));
        sc.t_end_us = 10000.0;
        sc.sample_period_us = 1.0;
        const auto res = run_scenario(sc);
        bool dark = true;
        for (const auto& s : res.series.samples)
            if (s.a_z != complex{0, 0} || s.a_x != complex{0, 0}) dark = false;
        o.check(dark, "fields exactly zero for 1e4 us");
    });

    double flat_a = 0.0;
    bool dropped_a = true;
    criterion(5, "polarization oscillation regime", [&](Outcome& o) {
        const auto sc = load_scenario(scn("paper_fig4a.scn"));
        const auto res = run_scenario(sc);
        const auto& row = res.metrics.rows.at(0);
        flat_a = row.spectral_flatness;
        dropped_a = row.drop.dropped;
        o.check(row.period.oscillating && within(row.period.period_us, 0.11, 0.1),
                fmt("period %.4g us", row.period.period_us));
        o.check(std::abs(row.modulation_depth - 0.5) <= 0.1, fmt("depth %.3f", row.modulation_depth));
        // period against detuning over a 4x field range
        const auto spec = parse_scan(
            "scenario = paper_fig4a.scn\nparameter = model.field_G\nrange = 0.375, 1.5, 4\n",
            TPL_SCENARIO_DIR);
        const auto rows = run_scan(spec, 4);
        double ref = 0.0, worst = 0.0;
        bool all = true;
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
            if (!it->ok || !it->period.oscillating) {
                all = false;
                continue;
            }
            const double tb = it->period.period_us * std::stod(it->value);
            if (ref == 0.0) ref = tb;
            worst = std::max(worst, std::abs(tb / ref - 1.0));
        }
        o.check(all && worst <= 0.1, fmt("period*B spread %.3f over 0.375-1.5 G", worst));
    });

    criterion(6, "chaotic-regime contrast", [&](Outcome& o) {
        const auto res = run_scenario(load_scenario(scn("paper_fig4b.scn")));
        const auto& row = res.metrics.rows.at(0);
        o.check(flat_a > 0.0 && row.spectral_flatness >= 5.0 * flat_a,
                fmt("flatness %.3g", row.spectral_flatness) + fmt(" vs fig4a %.3g", flat_a));
        o.check(row.drop.dropped && row.drop.time_us <= 0.1, fmt("drop time %.3f us", row.drop.time_us));
        o.check(!dropped_a, "fig4a not dropped");
        o.check(true, fmt("fig4b final n_tot %.3g", res.metrics.final_n_tot));
    });

    criterion(7, "structural invariants", [](Outcome& o) {
        auto m = paper_model();
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g;
        auto random_state = [&] {
            return LaserState{{700.0 * g(rng), 700.0 * g(rng)}, {700.0 * g(rng), 700.0 * g(rng)},
                              0.5 + 0.1 * g(rng)};
        };
        double t;
        t = timed([&] {
            const auto d = rhs(off_state(m), m, 0.0);
            o.check(d.d_a_z == complex{0, 0} && d.d_a_x == complex{0, 0}, "off state fixed");
        });
        o.check(t < 1.0, "timing");
        t = timed([&] {
            auto q = m;
            q.zeeman.field_gauss = 1.7;
            q.pathways[PathwayId::ZX].weight = 4.0;
            bool ok = true;
            for (int i = 0; i < 100; ++i) {
                auto s = random_state();
                s.a_x = 0.0;
                ok = ok && rhs(s, q, 0.0, {complex{3, 1}, 0.0}).d_a_x == complex{0, 0};
            }
            auto sc = load_scenario(scn("paper_fig3.scn"));
            const auto res = run_scenario(sc);
            for (const auto& smp : res.series.samples) ok = ok && smp.a_x == complex{0, 0};
            o.check(ok, "a_x=0 invariant");
        });
        o.check(t < 1.0, "timing");
        t = timed([&] {
            auto q = m;
            q.pathways[PathwayId::ZX].weight = 2.5;
            q.pathways[PathwayId::XZ].weight = 2.5;
            bool ok = q.pathways.swap_symmetric();
            for (int i = 0; i < 100; ++i) {
                const auto s = random_state();
                const auto d = rhs(s, q, 0.0);
                const auto e = rhs({s.a_x, s.a_z, s.inversion}, q, 0.0);
                ok = ok && std::abs(e.d_a_z - d.d_a_x) <= 1e-12 * (1 + std::abs(d.d_a_x)) &&
                     std::abs(e.d_a_x - d.d_a_z) <= 1e-12 * (1 + std::abs(d.d_a_z));
            }
            o.check(ok, "z<->x swap at B=0");
        });
        o.check(t < 1.0, "timing");
        t = timed([&] {
            auto q = m;
            q.zeeman.field_gauss = 0.9;
            bool ok = true;
            for (int i = 0; i < 100; ++i) {
                const auto s = random_state();
                const complex r = std::polar(1.0, g(rng));
                const auto d = rhs(s, q, 0.0);
                const auto e = rhs({s.a_z * r, s.a_x * r, s.inversion}, q, 0.0);
                ok = ok && std::abs(e.d_a_z - d.d_a_z * r) <= 1e-12 * (1 + std::abs(d.d_a_z)) &&
                     std::abs(e.d_a_x - d.d_a_x * r) <= 1e-12 * (1 + std::abs(d.d_a_x)) &&
                     std::abs(e.d_inversion - d.d_inversion) <= 1e-12 * (1 + std::abs(d.d_inversion));
            }
            o.check(ok, "global phase");
        });
        o.check(t < 1.0, "timing");
        t = timed([&] {
            bool ok = true;
            for (int i = 0; i < 1000; ++i) {
                const auto s = stokes({g(rng), g(rng)}, {g(rng), g(rng)});
                const double rhs2 = s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3;
                ok = ok && std::abs(s.s0 * s.s0 - rhs2) <= 1e-12 * s.s0 * s.s0;
            }
            o.check(ok, "Stokes purity");
        });
        o.check(t < 1.0, "timing");
        t = timed([&] {
            const double ns = m.sat_photons, d = 0.8;
            const double r = two_photon_gain_rate(ns / 100.0, d, m);
            const double quad = 2.0 * single_mode_gain(m) * d * std::pow(ns / 100.0, 2);
            o.check(within(r, quad, 0.01), fmt("quadratic at n_s/100 off by %.2e", r / quad - 1.0));
        });
        o.check(t < 1.0, "timing");
    });

    criterion(8, "entanglement report", [](Outcome& o) {
        const double h = 1.0 / std::sqrt(2.0);
        const auto eq = build_pair_state({complex{0.4, 0}, {0, 0}, {0, 0}, {0.4, 0}}).state;
        o.check(concurrence(eq) == 1.0, "equal amplitudes -> 1");
        o.check(concurrence({complex{h, 0}, {h, 0}}) == 1.0, "1/sqrt2 pair -> 1");
        o.check(concurrence({complex{1, 0}, {0, 0}}) == 0.0, "product -> 0");
        const double c = concurrence({complex{0.8, 0}, {0.6, 0}});
        o.check(std::abs(c - 0.96) <= 1e-12, fmt("(0.8, 0.6) -> %.15f", c));
    });

    criterion(9, "numerics", [](Outcome& o) {
        auto m = paper_model();
        m.pump = 0.0;
        const double t = 5.0 / m.kappa;
        const auto decay = integrate({{1000.0, 0.0}, {0, 0}, 0.0}, m, {}, t, t / 10.0);
        const double want = 1e6 * std::exp(-m.kappa * decay.samples.back().t_us);
        const double err = std::abs(decay.samples.back().n_tot() / want - 1.0);
        o.check(err < 1e-6, fmt("decay error %.2e", err));

        const auto sc = load_scenario(scn("paper_fig3.scn"));
        IntegratorOptions base, half;
        half.rtol = base.rtol / 2;
        half.atol = base.atol / 2;
        const auto a = run_scenario(sc, base).series;
        const auto b = run_scenario(sc, half).series;
        double worst = 0.0;
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            const double na = a.samples[i].n_tot(), nb = b.samples[i].n_tot();
            worst = std::max(worst, std::abs(na - nb) / std::max(std::abs(nb), 1.0));
        }
        o.check(a.samples.size() == b.samples.size() && worst < 1e-4,
                fmt("tolerance halving change %.2e", worst));

        const auto f4 = load_scenario(scn("paper_fig4a.scn"));
        std::ostringstream r1, r2;
        run_scenario(f4).series.write_csv(r1);
        run_scenario(f4).series.write_csv(r2);
        o.check(r1.str() == r2.str(), "byte-identical rerun");
    });

    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
