#include "tpl/calibration.hpp"

#include <cmath>
#include <limits>

#include "tpl/error.hpp"

namespace tpl {

ModelParams calibrate(const ModelParams& base, const CalibrationTargets& t) {
    if (!(std::isfinite(t.n_on) && t.n_on > 0.0 && std::isfinite(t.n_unstable) &&
          t.n_unstable > 0.0))
        throw InvalidInput("calibration targets must be positive");
    if (t.n_unstable > t.n_on)
        throw CalibrationInfeasible("unstable root must not exceed the on-state photon number",
                                    0.0, t.n_on);
    if (!(base.kappa > 0.0 && base.inversion_decay > 0.0 && base.pump > 0.0 &&
          base.atom_number > 0.0))
        throw InvalidInput("calibration needs positive kappa, pump, inversion_decay, atom_number");

    // Fixed points solve a n^2 - b n + c = 0 with
    //   a = kappa/2 ((P+g)/ns^2 + Ge/N),  b = Ge P,  c = kappa/2 (P+g),
    // so product = c/a and sum = b/a fix Ge and ns in closed form.
    const double prod = t.n_on * t.n_unstable;
    const double sum = t.n_on + t.n_unstable;
    const double pg = base.pump + base.inversion_decay;
    const double ge = base.kappa * pg * sum / (2.0 * base.pump * prod);
    const double backaction = base.clamp_inversion ? 0.0 : 1.0 / base.atom_number;
    const double min_pump = 0.5 * base.kappa * sum * backaction;
    if (!(base.pump > min_pump))
        throw CalibrationInfeasible("pump too weak for these targets with inversion backaction",
                                    min_pump, std::numeric_limits<double>::infinity());
    const double inv_ns2 = (1.0 / prod) * (1.0 - min_pump / base.pump);

    ModelParams out = base;
    out.sat_photons = 1.0 / std::sqrt(inv_ns2);
    out.gain = 1.0;
    const double unit = single_mode_gain(out);
    if (!(unit > 0.0)) throw InvalidInput("ZZ pathway carries no gain");
    out.gain = ge / unit;
    return out;
}

CalibrationTargets targets_of(const ModelParams& p) {
    const auto s = single_mode_steady_states(p);
    if (!s.has_on_state) throw InvalidInput("parameters have no on state");
    return {s.n_on, s.n_unstable};
}

LaserState off_state(const ModelParams& p) {
    return {{0.0, 0.0}, {0.0, 0.0}, p.unsaturated_inversion()};
}

double trigger_final_photons(const ModelParams& p, const TriggerPulse& pulse,
                             const TriggerProbe& probe) {
    EventSchedule sched;
    sched.events.push_back(pulse);
    const double t_end = pulse.t_end_us() + probe.settle_us;
    const auto ts = integrate(off_state(p), p, sched, t_end, probe.sample_period_us);
    return ts.samples.back().n_tot();
}

namespace {

template <class Latches>
double bisect_threshold(Latches&& latches, double guess, double rel_tol) {
    double lo = guess, hi = guess;
    int guard = 0;
    while (latches(lo)) {
        lo *= 0.5;
        if (++guard > 60) throw InvalidInput("no lower bracket for threshold");
    }
    while (!latches(hi)) {
        hi *= 2.0;
        if (++guard > 60) throw InvalidInput("no upper bracket for threshold");
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (latches(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double injected_threshold(const ModelParams& p, TriggerPulse pulse, const TriggerProbe& probe,
                          double rel_tol) {
    const auto s = single_mode_steady_states(p);
    if (!s.has_on_state) throw InvalidInput("parameters have no on state");
    const double split = std::sqrt(s.n_on * s.n_unstable);
    auto latches = [&](double n_inj) {
        pulse.injected_photons = n_inj;
        return trigger_final_photons(p, pulse, probe) > split;
    };
    return bisect_threshold(latches, s.n_unstable, rel_tol);
}

double calibrate_coupling_efficiency(const ModelParams& p, TriggerPulse pulse,
                                     double target_threshold, const TriggerProbe& probe,
                                     double rel_tol) {
    if (!(target_threshold > 0.0)) throw InvalidInput("threshold target must be positive");
    pulse.coupling_efficiency = 1.0;
    return injected_threshold(p, pulse, probe, rel_tol) / target_threshold;
}

double separatrix_initial_photons(const ModelParams& p, const LaserState& start, double settle_us,
                                  double rel_tol) {
    const auto s = p.clamp_inversion ? threshold_analysis(p, start.inversion)
                                     : ThresholdReport{};
    double guess = s.has_on_state ? s.n_unstable : single_mode_steady_states(p).n_unstable;
    if (!(guess > 0.0)) throw InvalidInput("parameters have no on state");
    const double split = p.clamp_inversion ? std::sqrt(s.n_on * s.n_unstable)
                                           : std::sqrt(targets_of(p).n_on * guess);
    auto latches = [&](double n0) {
        LaserState st = start;
        st.a_z = std::sqrt(n0);
        st.a_x = 0.0;
        const auto ts = integrate(st, p, {}, settle_us, settle_us / 100.0);
        return ts.samples.back().n_tot() > split;
    };
    return bisect_threshold(latches, guess, rel_tol);
}

}  // namespace tpl
