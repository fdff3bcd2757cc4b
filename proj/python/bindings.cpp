#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <map>
#include <sstream>

#include "tpl/calibration.hpp"
#include "tpl/cavity.hpp"
#include "tpl/error.hpp"
#include "tpl/pathways.hpp"
#include "tpl/scenario.hpp"

namespace py = pybind11;
using namespace tpl;

namespace {

py::dict series_dict(const TimeSeries& ts) {
    const auto n = static_cast<py::ssize_t>(ts.samples.size());
    py::array_t<double> t(n), d(n);
    py::array_t<std::complex<double>> az(n), ax(n);
    auto tt = t.mutable_unchecked<1>();
    auto dd = d.mutable_unchecked<1>();
    auto zz = az.mutable_unchecked<1>();
    auto xx = ax.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& s = ts.samples[i];
        tt(i) = s.t_us;
        zz(i) = s.a_z;
        xx(i) = s.a_x;
        dd(i) = s.inversion;
    }
    py::dict out;
    out["t_us"] = t;
    out["a_z"] = az;
    out["a_x"] = ax;
    out["inversion"] = d;
    return out;
}

py::dict metrics_dict(const RunMetrics& m) {
    py::dict out;
    for (const auto& [k, v] : metric_table(m)) out[py::str(k)] = v;
    return out;
}

Scenario scenario_with(const std::string& path, const std::map<std::string, std::string>& overrides) {
    if (overrides.empty()) return load_scenario(path);
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto doc = ConfigDoc::parse(ss.str());
    for (const auto& [k, v] : overrides) doc.set_path(k, v);
    return scenario_from_doc(doc);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "two-photon laser simulator";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<CalibrationInfeasible>(m, "CalibrationInfeasible", PyExc_RuntimeError);
    py::register_exception<IntegrationFailure>(m, "IntegrationFailure", PyExc_RuntimeError);

    m.def("finesse", [](double t, double a) { return finesse({t, a}); }, py::arg("transmissivity"),
          py::arg("absorption"));
    m.def("free_spectral_range", py::overload_cast<double>(&free_spectral_range), py::arg("length_m"));
    m.def("subconfocal_lengths", &subconfocal_lengths, py::arg("mirror_radius_m"), py::arg("order"));
    m.def(
        "cavity_summary",
        [](double length_m, double radius_m, int order, double t, double a) {
            const auto s = summarize({length_m, radius_m, order}, {t, a});
            py::dict out;
            out["finesse"] = s.finesse;
            out["fsr_hz"] = s.fsr_hz;
            out["mode_linewidth_hz"] = s.mode_linewidth_hz;
            out["kappa_per_s"] = s.kappa_per_s;
            out["cluster_spacing_hz"] = s.cluster_spacing_hz;
            return out;
        },
        py::arg("length_m") = 1.464e-2, py::arg("mirror_radius_m") = 0.05, py::arg("order") = 4,
        py::arg("transmissivity") = 2e-4, py::arg("absorption") = 4e-6);

    m.def(
        "concurrence",
        [](complex zz, complex xx) {
            const double norm = std::sqrt(std::norm(zz) + std::norm(xx));
            if (norm == 0.0) throw InvalidInput("both amplitudes vanish");
            return concurrence({zz / norm, xx / norm});
        },
        py::arg("amp_zz"), py::arg("amp_xx"));

    m.def(
        "threshold",
        [](double clamped_inversion) {
            const auto r = threshold_analysis(paper_model(), clamped_inversion);
            py::dict out;
            out["d_min"] = r.d_min;
            out["has_on_state"] = r.has_on_state;
            out["n_unstable"] = r.n_unstable;
            out["n_on"] = r.n_on;
            return out;
        },
        py::arg("clamped_inversion"));

    m.def(
        "calibrate",
        [](double n_on, double n_unstable, double pump, double gamma) {
            auto base = paper_model();
            base.pump = pump;
            base.inversion_decay = gamma;
            const auto p = calibrate(base, {n_on, n_unstable});
            py::dict out;
            out["gain_per_us"] = p.gain;
            out["sat_photons"] = p.sat_photons;
            out["model"] = serialize_model(p);
            return out;
        },
        py::arg("n_on") = 2.2e6, py::arg("n_unstable") = 2.75e5, py::arg("pump") = 20.0,
        py::arg("gamma") = 5.0);

    m.def(
        "simulate",
        [](const std::string& path, const std::map<std::string, std::string>& overrides, double rtol,
           std::uint64_t seed) {
            const auto sc = scenario_with(path, overrides);
            IntegratorOptions opts;
            opts.rtol = rtol;
            opts.atol = rtol * 1e-2;
            opts.seed = seed;
            RunResult r;
            {
                py::gil_scoped_release nogil;
                r = run_scenario(sc, opts);
            }
            py::dict out;
            out["series"] = series_dict(r.series);
            out["metrics"] = metrics_dict(r.metrics);
            return out;
        },
        py::arg("scenario"), py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("rtol") = 1e-8, py::arg("seed") = 1);
}
