#include "tpl/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "tpl/error.hpp"

namespace tpl {

// ---------------------------------------------------------------------------
// raw document

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k{
        {"model",
         {"kappa_per_us", "gain_per_us", "sat_photons", "pump_per_us", "gamma_per_us",
          "atom_number", "t2_us", "cross_coupling", "seed_rate_per_us", "seed_mode",
          "seed_interval_us", "clamp_inversion", "field_G", "base_shift_MHz_per_G"}},
        {"cavity",
         {"length_cm", "mirror_radius_cm", "degeneracy_order", "wavelength_nm", "transmissivity",
          "absorption"}},
        {"pathways", {"ZZ", "ZX", "XZ", "XX"}},
        {"calibrate", {"n_on", "n_unstable", "trigger_threshold"}},
        {"run",
         {"name", "t_end_us", "sample_period_us", "initial_az", "initial_ax",
          "initial_inversion"}},
        {"output", {"polarizer_deg", "settle_us", "spectrum", "lyapunov"}},
        {"event",
         {"type", "t_start_us", "duration_us", "n_inj", "polarization", "carrier_detuning_MHz",
          "coupling_efficiency", "t_end_us", "t_us", "field_G"}},
    };
    return k;
}

std::string key_list(const std::set<std::string>& keys) {
    std::string s;
    for (const auto& k : keys) s += (s.empty() ? "" : ", ") + k;
    return s;
}

}  // namespace

const ConfigEntry* ConfigSection::find(const std::string& key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

void ConfigSection::set(const std::string& key, const std::string& value) {
    for (auto& e : entries)
        if (e.key == key) {
            e.value = value;
            return;
        }
    entries.push_back({key, value, 0});
}

ConfigDoc ConfigDoc::parse(const std::string& text) {
    ConfigDoc doc;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            const bool array = line.rfind("[[", 0) == 0;
            const std::string close = array ? "]]" : "]";
            if (line.size() < 2 * close.size() + 1 ||
                line.compare(line.size() - close.size(), close.size(), close) != 0)
                throw ParseError(lineno, "malformed section header '" + line + "'");
            const std::string name =
                trim(line.substr(close.size(), line.size() - 2 * close.size()));
            if (!known_keys().count(name))
                throw ParseError(lineno, "unknown section [" + name + "]");
            if (array != (name == "event"))
                throw ParseError(lineno, name == "event" ? "events are written [[event]]"
                                                         : "only [[event]] may repeat");
            if (!array)
                for (const auto& s : doc.sections)
                    if (s.name == name) throw ParseError(lineno, "duplicate section [" + name + "]");
            doc.sections.push_back({name, lineno, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
        if (doc.sections.empty()) throw ParseError(lineno, "key outside of any section");
        auto& sec = doc.sections.back();
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& keys = known_keys().at(sec.name);
        if (!keys.count(key))
            throw ParseError(lineno, "unknown key '" + key + "' in [" + sec.name +
                                         "] (expected one of: " + key_list(keys) + ")");
        if (sec.find(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
        if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
        sec.entries.push_back({key, value, lineno});
    }
    return doc;
}

void ConfigDoc::set_path(const std::string& path, const std::string& value) {
    const auto parts = split(path, '.');
    ConfigSection* target = nullptr;
    std::string key;
    if (parts.size() == 3 && parts[0] == "event") {
        int idx = 0;
        const auto res = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), idx);
        if (res.ec != std::errc() || idx < 1) throw InvalidInput("bad event index in '" + path + "'");
        int seen = 0;
        for (auto& s : sections)
            if (s.name == "event" && ++seen == idx) target = &s;
        key = parts[2];
    } else if (parts.size() == 2) {
        for (auto& s : sections)
            if (s.name == parts[0]) target = &s;
        if (!target && known_keys().count(parts[0]) && parts[0] != "event") {
            sections.push_back({parts[0], 0, {}});
            target = &sections.back();
        }
        key = parts[1];
    }
    if (!target) throw InvalidInput("parameter path '" + path + "' does not name a section");
    if (!known_keys().at(target->name).count(key))
        throw InvalidInput("parameter path '" + path + "' names an unknown key");
    target->set(key, value);
}

// ---------------------------------------------------------------------------
// typed values

namespace {

double to_double(const ConfigEntry& e) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    if (*b == '+') ++b;
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw ParseError(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
    return v;
}

int to_int(const ConfigEntry& e) {
    int v = 0;
    const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size())
        throw ParseError(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
    return v;
}

bool to_bool(const ConfigEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ParseError(e.line, "'" + e.key + "' expects true or false");
}

double number_word(const std::string& w, const ConfigEntry& e) {
    ConfigEntry tmp{e.key, w, e.line};
    return to_double(tmp);
}

complex to_complex(const ConfigEntry& e) {
    const auto w = split_ws(e.value);
    if (w.size() != 2) throw ParseError(e.line, "'" + e.key + "' expects 're im'");
    return {number_word(w[0], e), number_word(w[1], e)};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Value v with v * scale == x exactly, so unit-suffixed keys read back
// to the same SI number.
std::string fmt_scaled(double x, double scale) {
    const double guess = x / scale;
    double v = guess;
    for (int step = 0; step <= 8; ++step) {
        if (v * scale == x) return fmt(v);
        v = std::nextafter(v, step % 2 == 0 ? HUGE_VAL : -HUGE_VAL);
    }
    double lo = guess, hi = guess;
    for (int step = 0; step < 8; ++step) {
        lo = std::nextafter(lo, -HUGE_VAL);
        hi = std::nextafter(hi, HUGE_VAL);
        if (lo * scale == x) return fmt(lo);
        if (hi * scale == x) return fmt(hi);
    }
    return fmt(guess);
}

std::string fmt_complex(complex c) { return fmt(c.real()) + " " + fmt(c.imag()); }

// Runs f with section-level context so validation errors carry a line.
template <class F>
void at_line(int line, F&& f) {
    try {
        f();
    } catch (const ParseError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ParseError(line, e.what());
    }
}

}  // namespace

ModelParams paper_model() {
    ModelParams base;
    base.kappa = decay_rate(paper_geometry(), paper_loss_with_pinholes()) * 1e-6;
    base.pump = 20.0;
    base.inversion_decay = 5.0;
    base.atom_number = 7e6;
    return calibrate(base, CalibrationTargets{});
}

double Scenario::analysis_start_us() const {
    double last = 0.0;
    for (const auto& e : schedule.events)
        if (const auto* p = std::get_if<TriggerPulse>(&e)) last = std::max(last, p->t_end_us());
    return last + outputs.settle_us;
}

Scenario scenario_from_doc(const ConfigDoc& doc) {
    Scenario sc;
    sc.geometry = paper_geometry();
    sc.loss = paper_loss_with_pinholes();
    sc.model = paper_model();

    auto section = [&](const std::string& name) -> const ConfigSection* {
        for (const auto& s : doc.sections)
            if (s.name == name) return &s;
        return nullptr;
    };

    if (const auto* cav = section("cavity")) {
        for (const auto& e : cav->entries) {
            if (e.key == "length_cm") sc.geometry.length_m = to_double(e) * 1e-2;
            else if (e.key == "mirror_radius_cm") sc.geometry.mirror_radius_m = to_double(e) * 1e-2;
            else if (e.key == "degeneracy_order") sc.geometry.degeneracy_order = to_int(e);
            else if (e.key == "wavelength_nm") sc.geometry.wavelength_m = to_double(e) * 1e-9;
            else if (e.key == "transmissivity") sc.loss.transmissivity = to_double(e);
            else if (e.key == "absorption") sc.loss.absorption = to_double(e);
        }
        at_line(cav->line, [&] {
            sc.geometry.validate();
            sc.loss.validate();
        });
    }
    sc.model.kappa = decay_rate(sc.geometry, sc.loss) * 1e-6;

    const auto* model = section("model");
    const auto* cal = section("calibrate");
    const int model_line = model ? model->line : 0;
    if (model) {
        auto& m = sc.model;
        for (const auto& e : model->entries) {
            if (e.key == "kappa_per_us") m.kappa = to_double(e);
            else if (e.key == "gain_per_us") m.gain = to_double(e);
            else if (e.key == "sat_photons") m.sat_photons = to_double(e);
            else if (e.key == "pump_per_us") m.pump = to_double(e);
            else if (e.key == "gamma_per_us") m.inversion_decay = to_double(e);
            else if (e.key == "atom_number") m.atom_number = to_double(e);
            else if (e.key == "t2_us") m.coherence_time_us = to_double(e);
            else if (e.key == "cross_coupling") m.cross_coupling = to_double(e);
            else if (e.key == "seed_rate_per_us") m.seed_rate = to_double(e);
            else if (e.key == "seed_interval_us") m.seed_interval_us = to_double(e);
            else if (e.key == "clamp_inversion") m.clamp_inversion = to_bool(e);
            else if (e.key == "field_G") m.zeeman.field_gauss = to_double(e);
            else if (e.key == "base_shift_MHz_per_G")
                m.zeeman.base_shift_hz_per_gauss = to_double(e) * 1e6;
            else if (e.key == "seed_mode") {
                if (e.value == "random") m.seed_mode = SeedMode::random;
                else if (e.value == "constant") m.seed_mode = SeedMode::constant;
                else throw ParseError(e.line, "seed_mode must be random or constant");
            }
            if (cal && (e.key == "gain_per_us" || e.key == "sat_photons"))
                throw ParseError(e.line, "'" + e.key + "' conflicts with the [calibrate] section");
        }
    }
    if (const auto* pw = section("pathways")) {
        for (const auto& e : pw->entries) {
            const auto w = split_ws(e.value);
            if (w.size() != 2) throw ParseError(e.line, "pathway row expects 'weight slope'");
            auto& spec = sc.model.pathways[pathway_from_string(e.key)];
            spec.weight = number_word(w[0], e);
            ConfigEntry slope{e.key, w[1], e.line};
            spec.zeeman_slope = to_int(slope);
        }
    }
    at_line(model_line, [&] { sc.model.validate(); });

    if (cal) {
        CalibrationTargets t;
        for (const auto& e : cal->entries) {
            if (e.key == "n_on") t.n_on = to_double(e);
            else if (e.key == "n_unstable") t.n_unstable = to_double(e);
        }
        sc.model = calibrate(sc.model, t);
    }

    // run
    sc.initial = off_state(sc.model);
    bool have_t_end = false;
    if (const auto* run = section("run")) {
        for (const auto& e : run->entries) {
            if (e.key == "name") sc.name = e.value;
            else if (e.key == "t_end_us") {
                sc.t_end_us = to_double(e);
                have_t_end = true;
            } else if (e.key == "sample_period_us") sc.sample_period_us = to_double(e);
            else if (e.key == "initial_az") sc.initial.a_z = to_complex(e);
            else if (e.key == "initial_ax") sc.initial.a_x = to_complex(e);
            else if (e.key == "initial_inversion") sc.initial.inversion = to_double(e);
        }
        if (have_t_end && !(sc.t_end_us > 0.0))
            throw ParseError(run->find("t_end_us")->line, "t_end_us must be positive");
        if (!(sc.sample_period_us > 0.0))
            throw ParseError(run->line, "sample_period_us must be positive");
        if (!(sc.initial.inversion >= 0.0 && sc.initial.inversion <= 1.0))
            throw ParseError(run->line, "initial_inversion must lie in [0, 1]");
    }
    if (!have_t_end) throw ParseError(0, "[run] t_end_us is required");

    if (const auto* out = section("output")) {
        for (const auto& e : out->entries) {
            if (e.key == "polarizer_deg") {
                sc.outputs.polarizer_deg.clear();
                for (const auto& w : split(e.value, ','))
                    sc.outputs.polarizer_deg.push_back(number_word(w, e));
            } else if (e.key == "settle_us") {
                sc.outputs.settle_us = to_double(e);
                if (!(sc.outputs.settle_us >= 0.0))
                    throw ParseError(e.line, "settle_us must be non-negative");
            } else if (e.key == "spectrum") sc.outputs.spectrum = to_bool(e);
            else if (e.key == "lyapunov") sc.outputs.lyapunov = to_bool(e);
        }
    }

    // events
    for (const auto& s : doc.sections) {
        if (s.name != "event") continue;
        const auto* type = s.find("type");
        if (!type) throw ParseError(s.line, "event needs a type");
        auto allow = [&](std::set<std::string> keys) {
            keys.insert("type");
            for (const auto& e : s.entries)
                if (!keys.count(e.key))
                    throw ParseError(e.line, "'" + e.key + "' does not apply to a " + type->value +
                                                 " event");
        };
        auto need = [&](const std::string& key) -> const ConfigEntry& {
            const auto* e = s.find(key);
            if (!e) throw ParseError(s.line, type->value + " event needs '" + key + "'");
            return *e;
        };
        if (type->value == "pulse") {
            allow({"t_start_us", "duration_us", "n_inj", "polarization", "carrier_detuning_MHz",
                   "coupling_efficiency"});
            TriggerPulse p;
            p.t_start_us = to_double(need("t_start_us"));
            if (const auto* e = s.find("duration_us")) p.duration_us = to_double(*e);
            p.injected_photons = to_double(need("n_inj"));
            if (const auto* e = s.find("polarization")) {
                if (e->value == "z") p.polarization = {1.0, 0.0};
                else if (e->value == "x") p.polarization = {0.0, 1.0};
                else {
                    const auto w = split_ws(e->value);
                    if (w.size() != 4)
                        throw ParseError(e->line, "polarization is z, x or 're_z im_z re_x im_x'");
                    p.polarization = {complex{number_word(w[0], *e), number_word(w[1], *e)},
                                      complex{number_word(w[2], *e), number_word(w[3], *e)}};
                }
            }
            if (const auto* e = s.find("carrier_detuning_MHz"))
                p.carrier_detuning_hz = to_double(*e) * 1e6;
            if (const auto* e = s.find("coupling_efficiency")) p.coupling_efficiency = to_double(*e);
            at_line(s.line, [&] { p.validate(); });
            sc.schedule.events.push_back(p);
        } else if (type->value == "pump_block") {
            allow({"t_start_us", "t_end_us"});
            sc.schedule.events.push_back(
                PumpBlock{to_double(need("t_start_us")), to_double(need("t_end_us"))});
        } else if (type->value == "field_step") {
            allow({"t_us", "field_G"});
            sc.schedule.events.push_back(FieldStep{to_double(need("t_us")), to_double(need("field_G"))});
        } else {
            throw ParseError(type->line, "event type must be pulse, pump_block or field_step");
        }
        at_line(s.line, [&] { sc.schedule.validate(); });
    }

    if (cal) {
        if (const auto* e = cal->find("trigger_threshold")) {
            const double target = to_double(*e);
            const TriggerPulse* tmpl = nullptr;
            for (const auto& ev : sc.schedule.events)
                if (const auto* p = std::get_if<TriggerPulse>(&ev)) tmpl = p;
            if (!tmpl) throw ParseError(e->line, "trigger_threshold needs a pulse event");
            const double eff = calibrate_coupling_efficiency(sc.model, *tmpl, target);
            for (auto& ev : sc.schedule.events)
                if (auto* p = std::get_if<TriggerPulse>(&ev)) p->coupling_efficiency = eff;
        }
    }
    return sc;
}

Scenario parse_scenario(const std::string& text) { return scenario_from_doc(ConfigDoc::parse(text)); }

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_model(const ModelParams& m) {
    std::ostringstream os;
    os << "[model]\n";
    os << "kappa_per_us = " << fmt(m.kappa) << "\n";
    os << "gain_per_us = " << fmt(m.gain) << "\n";
    os << "sat_photons = " << fmt(m.sat_photons) << "\n";
    os << "pump_per_us = " << fmt(m.pump) << "\n";
    os << "gamma_per_us = " << fmt(m.inversion_decay) << "\n";
    os << "atom_number = " << fmt(m.atom_number) << "\n";
    os << "t2_us = " << fmt(m.coherence_time_us) << "\n";
    if (m.cross_coupling) os << "cross_coupling = " << fmt(*m.cross_coupling) << "\n";
    os << "seed_rate_per_us = " << fmt(m.seed_rate) << "\n";
    os << "seed_mode = " << (m.seed_mode == SeedMode::random ? "random" : "constant") << "\n";
    os << "seed_interval_us = " << fmt(m.seed_interval_us) << "\n";
    os << "clamp_inversion = " << (m.clamp_inversion ? "true" : "false") << "\n";
    os << "field_G = " << fmt(m.zeeman.field_gauss) << "\n";
    os << "base_shift_MHz_per_G = " << fmt_scaled(m.zeeman.base_shift_hz_per_gauss, 1e6) << "\n";
    os << "\n[pathways]\n";
    for (const auto& p : m.pathways)
        os << to_string(p.id) << " = " << fmt(p.weight) << " " << p.zeeman_slope << "\n";
    return os.str();
}

std::string serialize(const Scenario& s) {
    std::ostringstream os;
    os << "[cavity]\n";
    os << "length_cm = " << fmt_scaled(s.geometry.length_m, 1e-2) << "\n";
    os << "mirror_radius_cm = " << fmt_scaled(s.geometry.mirror_radius_m, 1e-2) << "\n";
    os << "degeneracy_order = " << s.geometry.degeneracy_order << "\n";
    os << "wavelength_nm = " << fmt_scaled(s.geometry.wavelength_m, 1e-9) << "\n";
    os << "transmissivity = " << fmt(s.loss.transmissivity) << "\n";
    os << "absorption = " << fmt(s.loss.absorption) << "\n\n";
    os << serialize_model(s.model) << "\n";
    os << "[run]\n";
    if (!s.name.empty()) os << "name = " << s.name << "\n";
    os << "t_end_us = " << fmt(s.t_end_us) << "\n";
    os << "sample_period_us = " << fmt(s.sample_period_us) << "\n";
    os << "initial_az = " << fmt_complex(s.initial.a_z) << "\n";
    os << "initial_ax = " << fmt_complex(s.initial.a_x) << "\n";
    os << "initial_inversion = " << fmt(s.initial.inversion) << "\n\n";
    os << "[output]\npolarizer_deg = ";
    for (std::size_t i = 0; i < s.outputs.polarizer_deg.size(); ++i)
        os << (i ? ", " : "") << fmt(s.outputs.polarizer_deg[i]);
    os << "\nsettle_us = " << fmt(s.outputs.settle_us) << "\n";
    os << "spectrum = " << (s.outputs.spectrum ? "true" : "false") << "\n";
    os << "lyapunov = " << (s.outputs.lyapunov ? "true" : "false") << "\n";
    for (const auto& e : s.schedule.events) {
        os << "\n[[event]]\n";
        if (const auto* p = std::get_if<TriggerPulse>(&e)) {
            os << "type = pulse\n";
            os << "t_start_us = " << fmt(p->t_start_us) << "\n";
            os << "duration_us = " << fmt(p->duration_us) << "\n";
            os << "n_inj = " << fmt(p->injected_photons) << "\n";
            os << "polarization = " << fmt_complex(p->polarization[0]) << " "
               << fmt_complex(p->polarization[1]) << "\n";
            os << "carrier_detuning_MHz = " << fmt_scaled(p->carrier_detuning_hz, 1e6) << "\n";
            os << "coupling_efficiency = " << fmt(p->coupling_efficiency) << "\n";
        } else if (const auto* b = std::get_if<PumpBlock>(&e)) {
            os << "type = pump_block\n";
            os << "t_start_us = " << fmt(b->t_start_us) << "\n";
            os << "t_end_us = " << fmt(b->t_end_us) << "\n";
        } else if (const auto* f = std::get_if<FieldStep>(&e)) {
            os << "type = field_step\n";
            os << "t_us = " << fmt(f->t_us) << "\n";
            os << "field_G = " << fmt(f->field_gauss) << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// running

RunMetrics analyze_series(const Scenario& s, const TimeSeries& ts) {
    RunMetrics m;
    if (ts.samples.empty()) return m;
    m.final_n_tot = ts.samples.back().n_tot();
    m.final_inversion = ts.samples.back().inversion;
    m.output_power_w = photon_number_to_output_power(m.final_n_tot, s.geometry, s.loss);
    m.window_start_us = s.analysis_start_us();
    const auto win = select_window(ts, m.window_start_us, s.t_end_us);
    if (win.samples.size() < 32) return m;

    const auto tot = total_photons(win);
    double sum = 0.0, sq = 0.0, ell = 0.0;
    for (double v : tot.values) sum += v;
    m.mean_n_tot = sum / static_cast<double>(tot.values.size());
    for (double v : tot.values) sq += (v - m.mean_n_tot) * (v - m.mean_n_tot);
    m.rel_std_n_tot = m.mean_n_tot > 0.0
                          ? std::sqrt(sq / static_cast<double>(tot.values.size())) / m.mean_n_tot
                          : 0.0;
    for (const auto& x : win.samples) ell += std::abs(polarization_sample(x).ellipticity);
    m.mean_abs_ellipticity = ell / static_cast<double>(win.samples.size());

    for (double deg : s.outputs.polarizer_deg) {
        AnalysisRow row;
        row.polarizer_deg = deg;
        const auto sig = polarizer_projection(win, deg * constants::pi / 180.0);
        row.period = dominant_period(sig);
        row.modulation_depth = modulation_depth(sig.values);
        row.spectral_flatness = periodogram(sig).spectral_flatness;
        row.drop = autocorrelation_drop_time(sig);
        if (s.outputs.lyapunov) row.lyapunov = largest_lyapunov(sig);
        m.rows.push_back(row);
    }
    return m;
}

RunResult run_scenario(const Scenario& s, const IntegratorOptions& opts) {
    RunResult r;
    r.series = integrate(s.initial, s.model, s.schedule, s.t_end_us, s.sample_period_us, opts,
                         &r.stats);
    r.metrics = analyze_series(s, r.series);
    return r;
}

std::vector<std::pair<std::string, double>> metric_table(const RunMetrics& m) {
    std::vector<std::pair<std::string, double>> t{
        {"final_n_tot", m.final_n_tot},
        {"final_inversion", m.final_inversion},
        {"output_power_w", m.output_power_w},
        {"window_start_us", m.window_start_us},
        {"mean_n_tot", m.mean_n_tot},
        {"rel_std_n_tot", m.rel_std_n_tot},
        {"mean_abs_ellipticity", m.mean_abs_ellipticity},
    };
    for (const auto& r : m.rows) {
        char p[32];
        std::snprintf(p, sizeof p, "pol%g_", r.polarizer_deg);
        const std::string pre = p;
        t.push_back({pre + "oscillating", r.period.oscillating ? 1.0 : 0.0});
        t.push_back({pre + "period_us", r.period.period_us});
        t.push_back({pre + "peak_to_floor", r.period.peak_to_floor});
        t.push_back({pre + "modulation_depth", r.modulation_depth});
        t.push_back({pre + "spectral_flatness", r.spectral_flatness});
        t.push_back({pre + "drop_dropped", r.drop.dropped ? 1.0 : 0.0});
        t.push_back({pre + "drop_time_us", r.drop.time_us});
        if (r.lyapunov) {
            t.push_back({pre + "lyapunov_per_us", r.lyapunov->exponent_per_us});
            t.push_back({pre + "lyapunov_valid", r.lyapunov->valid ? 1.0 : 0.0});
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// scans

ScanSpec parse_scan(const std::string& text, const std::string& base_dir) {
    ScanSpec spec;
    std::istringstream is(text);
    std::string raw, scenario;
    int lineno = 0;
    bool have_range = false;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key == "scenario") scenario = value;
        else if (key == "parameter") spec.parameter = value;
        else if (key == "values") spec.values = split(value, ',');
        else if (key == "range") {
            const auto w = split(value, ',');
            if (w.size() != 3) throw ParseError(lineno, "range = start, stop, count");
            ConfigEntry e{key, "", lineno};
            const double a = number_word(w[0], e), b = number_word(w[1], e);
            e.value = w[2];
            const int n = to_int(e);
            if (n < 1) throw ParseError(lineno, "range count must be >= 1");
            for (int i = 0; i < n; ++i)
                spec.values.push_back(fmt(n == 1 ? a : a + (b - a) * i / (n - 1)));
            have_range = true;
        } else {
            throw ParseError(lineno, "unknown scan key '" + key + "'");
        }
    }
    if (have_range && spec.values.empty()) throw ParseError(lineno, "empty range");
    if (scenario.empty()) throw ParseError(lineno, "scan needs 'scenario'");
    if (spec.parameter.empty()) throw ParseError(lineno, "scan needs 'parameter'");
    if (spec.values.empty()) throw ParseError(lineno, "scan needs at least one value");
    std::filesystem::path p(scenario);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw InvalidInput("cannot open scenario '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    spec.base = ConfigDoc::parse(ss.str());
    // path must be settable on the template
    ConfigDoc probe = spec.base;
    probe.set_path(spec.parameter, spec.values.front());
    return spec;
}

std::vector<ScanRow> run_scan(const ScanSpec& spec, int jobs, const IntegratorOptions& opts) {
    std::vector<ScanRow> rows(spec.values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            ScanRow& row = rows[i];
            row.value = spec.values[i];
            try {
                ConfigDoc doc = spec.base;
                doc.set_path(spec.parameter, spec.values[i]);
                const auto sc = scenario_from_doc(doc);
                const auto res = run_scenario(sc, opts);
                row.final_n_tot = res.metrics.final_n_tot;
                if (!res.metrics.rows.empty()) {
                    const auto& a = res.metrics.rows.front();
                    row.period = a.period;
                    row.modulation_depth = a.modulation_depth;
                    row.spectral_flatness = a.spectral_flatness;
                    row.drop = a.drop;
                }
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

std::string scan_csv(const ScanSpec& spec, const std::vector<ScanRow>& rows) {
    std::ostringstream os;
    os << spec.parameter
       << ",ok,final_n_tot,oscillating,dominant_period_us,modulation_depth,spectral_flatness,"
          "drop_dropped,drop_time_us,error\n";
    for (const auto& r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << r.value << "," << (r.ok ? 1 : 0) << "," << fmt(r.final_n_tot) << ","
           << (r.period.oscillating ? 1 : 0) << "," << fmt(r.period.period_us) << ","
           << fmt(r.modulation_depth) << "," << fmt(r.spectral_flatness) << ","
           << (r.drop.dropped ? 1 : 0) << "," << fmt(r.drop.time_us) << "," << err << "\n";
    }
    return os.str();
}

}  // namespace tpl
