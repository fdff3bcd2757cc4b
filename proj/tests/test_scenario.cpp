#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "tpl/error.hpp"
#include "tpl/scenario.hpp"

using namespace tpl;
using doctest::Approx;

namespace {

std::string scn(const std::string& name) { return std::string(TPL_SCENARIO_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("minimal scenario takes the documented defaults") {
    const auto s = parse_scenario("[run]\nt_end_us = 10\n");
    CHECK(s.t_end_us == 10.0);
    CHECK(s.sample_period_us == 0.01);
    CHECK(s.model == paper_model());
    CHECK(s.geometry == paper_geometry());
    CHECK(s.loss == paper_loss_with_pinholes());
    CHECK(s.initial == off_state(paper_model()));
    CHECK(s.schedule.events.empty());
    CHECK(s.outputs == OutputSpec{});
}

TEST_CASE("parse errors") {
    CHECK(error_of("[model]\nkappa_per_us = -1\n[run]\nt_end_us = 1\n").find("kappa must be positive") !=
          std::string::npos);
    CHECK(error_of("[model]\nkappa_per_us = -1\n[run]\nt_end_us = 1\n").find("line 1") !=
          std::string::npos);
    const auto unknown = error_of("[run]\nt_end_us = 1\nt_end = 2\n");
    CHECK(unknown.find("line 3") != std::string::npos);
    CHECK(unknown.find("t_end_us") != std::string::npos);
    CHECK(error_of("[model]\npump_per_us = 2\n").find("t_end_us is required") != std::string::npos);
    CHECK(error_of("[run]\nt_end_us = ten\n").find("expects a number") != std::string::npos);
    CHECK(error_of("[runs]\n").find("unknown section") != std::string::npos);
    CHECK(error_of("[run]\nt_end_us = 1\n[run]\n").find("duplicate") != std::string::npos);
    CHECK(error_of("[run]\nt_end_us = 1\n[[event]]\ntype = pulse\nt_start_us = 1\n").find("n_inj") !=
          std::string::npos);
    CHECK(error_of("[run]\nt_end_us = 1\n[[event]]\ntype = field_step\nt_us = 1\nfield_G = 1\nn_inj = 2\n")
              .find("does not apply") != std::string::npos);
    CHECK(error_of("[run]\nt_end_us = 1\n[[event]]\ntype = field_step\nt_us = 2\nfield_G = 1\n"
                   "[[event]]\ntype = field_step\nt_us = 1\nfield_G = 1\n")
              .find("time order") != std::string::npos);
    CHECK_THROWS_AS(parse_scenario("[calibrate]\nn_on = 1e5\nn_unstable = 2e5\n[run]\nt_end_us = 1\n"),
                    CalibrationInfeasible);
    CHECK(error_of("[model]\ngain_per_us = 1e-5\n[calibrate]\nn_on = 2e6\n[run]\nt_end_us = 1\n")
              .find("conflicts") != std::string::npos);
}

TEST_CASE("shipped fig3 scenario matches its calibration") {
    const auto s = load_scenario(scn("paper_fig3.scn"));
    CHECK(s.model.gain == Approx(paper_model().gain).epsilon(1e-12));
    CHECK(s.model.sat_photons == Approx(paper_model().sat_photons).epsilon(1e-12));
    CHECK(s.model.kappa == Approx(paper_model().kappa).epsilon(1e-14));
    REQUIRE(s.schedule.events.size() == 1);
    const auto pulse = std::get<TriggerPulse>(s.schedule.events[0]);
    CHECK(pulse.injected_photons == 3.3e5);
    CHECK(pulse.duration_us == 1.2);
    TriggerPulse probe = pulse;
    CHECK(calibrate_coupling_efficiency(s.model, probe, 2.22e5) ==
          Approx(pulse.coupling_efficiency).epsilon(1e-5));
}

TEST_CASE("serialize round trip") {
    for (const char* f : {"paper_cavity.scn", "paper_fig3.scn", "paper_fig4a.scn", "paper_fig4b.scn"}) {
        const auto s = load_scenario(scn(f));
        CHECK(parse_scenario(serialize(s)) == s);
    }
    auto s = parse_scenario("[run]\nt_end_us = 3\n");
    s.schedule.events.push_back(PumpBlock{0.5, 1.0});
    TriggerPulse p;
    p.t_start_us = 1.0;
    p.injected_photons = 1e4;
    p.polarization = {complex{0.6, 0.0}, complex{0.0, 0.8}};
    p.carrier_detuning_hz = 1.5e6;
    s.schedule.events.push_back(p);
    s.schedule.events.push_back(FieldStep{2.0, 0.3});
    s.model.seed_mode = SeedMode::constant;
    s.model.clamp_inversion = true;
    s.outputs.polarizer_deg = {0.0, 22.5, 90.0};
    s.initial.a_x = {1.0 / 3.0, 0.1};
    CHECK(parse_scenario(serialize(s)) == s);
}

TEST_CASE("dotted parameter paths") {
    auto doc = ConfigDoc::parse(slurp(scn("paper_fig3.scn")));
    doc.set_path("event.1.n_inj", "1.1e5");
    doc.set_path("model.field_G", "0.5");
    const auto s = scenario_from_doc(doc);
    CHECK(std::get<TriggerPulse>(s.schedule.events[0]).injected_photons == 1.1e5);
    CHECK(s.model.zeeman.field_gauss == 0.5);
    CHECK_THROWS_AS(doc.set_path("event.2.n_inj", "1"), InvalidInput);
    CHECK_THROWS_AS(doc.set_path("model.fieldG", "1"), InvalidInput);
    CHECK_THROWS_AS(doc.set_path("nothing.x", "1"), InvalidInput);
}

TEST_CASE("analysis window starts after the last pulse") {
    const auto s = load_scenario(scn("paper_fig3.scn"));
    CHECK(s.analysis_start_us() == Approx(5.0 + 1.2 + 5.0));
}

TEST_CASE("scan rows") {
    const auto spec = parse_scan("scenario = paper_fig3.scn\nparameter = event.1.n_inj\n"
                                 "values = 1.1e5, 2.2e5, 3.3e5\n",
                                 TPL_SCENARIO_DIR);
    const auto rows = run_scan(spec, 3);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].ok);
    CHECK(rows[0].final_n_tot < 1.0);
    CHECK(rows[1].final_n_tot < 1.0);
    CHECK(rows[2].final_n_tot == Approx(2.2e6).epsilon(0.05));
    CHECK(rows[1].value == "2.2e5");

    // single point equals a direct run
    const auto direct = run_scenario(load_scenario(scn("paper_fig3.scn")));
    const auto one = run_scan(parse_scan("scenario = paper_fig3.scn\nparameter = event.1.n_inj\n"
                                         "values = 3.3e5\n",
                                         TPL_SCENARIO_DIR));
    CHECK(one[0].final_n_tot == direct.metrics.final_n_tot);

    // worker count does not change rows
    const auto serial = run_scan(spec, 1);
    CHECK(scan_csv(spec, serial) == scan_csv(spec, rows));

    // failures stay in their row
    const auto bad = parse_scan("scenario = paper_fig3.scn\nparameter = event.1.n_inj\n"
                                "values = 1e3, -5\n",
                                TPL_SCENARIO_DIR);
    const auto br = run_scan(bad, 2);
    CHECK(br[0].ok);
    CHECK_FALSE(br[1].ok);
    CHECK(br[1].error.find("non-negative") != std::string::npos);
}

TEST_CASE("scan spec errors") {
    CHECK_THROWS_AS(parse_scan("parameter = model.field_G\nvalues = 1\n", TPL_SCENARIO_DIR), ParseError);
    CHECK_THROWS_AS(parse_scan("scenario = paper_fig3.scn\nparameter = model.field_G\n", TPL_SCENARIO_DIR),
                    ParseError);
    CHECK_THROWS_AS(parse_scan("scenario = paper_fig3.scn\nparameter = model.nope\nvalues = 1\n",
                               TPL_SCENARIO_DIR),
                    InvalidInput);
    const auto r = parse_scan("scenario = paper_fig3.scn\nparameter = model.field_G\nrange = 0, 1, 5\n",
                              TPL_SCENARIO_DIR);
    REQUIRE(r.values.size() == 5);
    CHECK(r.values[2] == "0.5");
}

TEST_CASE("golden scenarios match their expected metrics") {
    for (const char* name : {"paper_cavity", "paper_fig3", "paper_fig4a", "paper_fig4b"}) {
        CAPTURE(name);
        const auto res = run_scenario(load_scenario(scn(std::string(name) + ".scn")));
        std::map<std::string, double> got;
        for (const auto& [k, v] : metric_table(res.metrics)) got[k] = v;

        std::istringstream in(slurp(scn(std::string(name) + ".expected.csv")));
        std::string line;
        std::getline(in, line);
        int rows = 0;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string key, v, r, a;
            std::getline(ls, key, ',');
            std::getline(ls, v, ',');
            std::getline(ls, r, ',');
            std::getline(ls, a, ',');
            CAPTURE(key);
            REQUIRE(got.count(key) == 1);
            const double want = std::stod(v);
            const double tol = std::max(std::stod(r) * std::abs(want), std::stod(a));
            CHECK(std::abs(got[key] - want) <= tol);
            ++rows;
        }
        CHECK(rows == static_cast<int>(got.size()));
    }
}
