#include "tpl/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "tpl/cavity.hpp"
#include "tpl/error.hpp"

namespace tpl {

void TriggerPulse::validate() const {
    if (!(std::isfinite(t_start_us) && t_start_us >= 0.0))
        throw InvalidInput("pulse start must be non-negative");
    if (!(std::isfinite(duration_us) && duration_us > 0.0))
        throw InvalidInput("pulse duration must be positive");
    if (!(std::isfinite(injected_photons) && injected_photons >= 0.0))
        throw InvalidInput("injected photon number must be non-negative");
    const double norm = std::norm(polarization[0]) + std::norm(polarization[1]);
    if (!(std::abs(norm - 1.0) < 1e-9)) throw InvalidInput("pulse polarization must have unit norm");
    if (!std::isfinite(carrier_detuning_hz)) throw InvalidInput("carrier detuning must be finite");
    if (!(std::isfinite(coupling_efficiency) && coupling_efficiency > 0.0))
        throw InvalidInput("coupling efficiency must be positive");
}

double event_time(const Event& e) {
    return std::visit(
        [](const auto& ev) -> double {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, TriggerPulse>) return ev.t_start_us;
            else if constexpr (std::is_same_v<T, PumpBlock>) return ev.t_start_us;
            else return ev.t_us;
        },
        e);
}

void EventSchedule::validate() const {
    double last = 0.0;
    for (const auto& e : events) {
        const double t = event_time(e);
        if (!(std::isfinite(t) && t >= 0.0)) throw InvalidInput("event time must be non-negative");
        if (t < last) throw InvalidInput("events must be in time order");
        last = t;
        if (const auto* p = std::get_if<TriggerPulse>(&e)) p->validate();
        if (const auto* b = std::get_if<PumpBlock>(&e)) {
            if (!(std::isfinite(b->t_end_us) && b->t_end_us >= b->t_start_us))
                throw InvalidInput("pump block must have end >= start");
        }
        if (const auto* f = std::get_if<FieldStep>(&e)) {
            if (!std::isfinite(f->field_gauss)) throw InvalidInput("field step must be finite");
        }
    }
}

double pulse_drive_amplitude(double n, double tau_us, double kappa) {
    if (!(n >= 0.0)) throw InvalidInput("photon number must be non-negative");
    if (!(tau_us > 0.0 && kappa > 0.0)) throw InvalidInput("pulse duration and kappa must be positive");
    return 0.5 * kappa * std::sqrt(n) / (1.0 - std::exp(-0.5 * kappa * tau_us));
}

namespace {

constexpr double two_pi = 2.0 * constants::pi;

double pulse_eta(const TriggerPulse& p, double kappa) {
    return pulse_drive_amplitude(p.coupling_efficiency * p.injected_photons, p.duration_us, kappa);
}

}  // namespace

std::array<complex, 2> inject_pulse_drive(const TriggerPulse& p, double t_us,
                                          const ModelParams& params) {
    if (t_us < p.t_start_us || t_us >= p.t_end_us()) return {};
    const double eta = pulse_eta(p, params.kappa);
    const double phase = -two_pi * p.carrier_detuning_hz * 1e-6 * (t_us - p.t_start_us);
    const complex rot = std::polar(eta, phase);
    return {rot * p.polarization[0], rot * p.polarization[1]};
}

// ---------------------------------------------------------------------------
// seed generator

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double to_unit(std::uint64_t x) {
    // (0, 1]
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

complex seed_variate(std::uint64_t seed, std::uint64_t interval, int mode) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ interval);
    key = splitmix64(key ^ static_cast<std::uint64_t>(mode + 1));
    const double u1 = to_unit(key);
    const double u2 = to_unit(splitmix64(key));
    return std::polar(std::sqrt(-std::log(u1)), two_pi * u2);
}

// ---------------------------------------------------------------------------
// time series I/O

void TimeSeries::write_csv(std::ostream& os) const {
    os << "t_us,re_az,im_az,re_ax,im_ax,n_z,n_x,D\n";
    char buf[512];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t_us,
                      s.a_z.real(), s.a_z.imag(), s.a_x.real(), s.a_x.imag(), s.n_z(), s.n_x(),
                      s.inversion);
        os << buf;
    }
}

TimeSeries TimeSeries::read_csv(std::istream& is) {
    TimeSeries ts;
    std::string line;
    int lineno = 0;
    if (!std::getline(is, line)) throw ParseError(1, "empty time series");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_us,re_az,im_az,re_ax,im_ax,n_z,n_x,D")
        throw ParseError(1, "unexpected header '" + line + "'");
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 8> v{};
        std::size_t pos = 0;
        for (int i = 0; i < 8; ++i) {
            const auto comma = line.find(',', pos);
            const std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos);
            try {
                std::size_t used = 0;
                v[i] = std::stod(field, &used);
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw ParseError(lineno, "bad number '" + field + "'");
            }
            if ((i < 7) != (comma != std::string::npos))
                throw ParseError(lineno, "expected 8 columns");
            pos = comma + 1;
        }
        ts.samples.push_back({v[0], {v[1], v[2]}, {v[3], v[4]}, v[7]});
    }
    if (ts.samples.size() >= 2) {
        ts.sample_period_us = ts.samples[1].t_us - ts.samples[0].t_us;
        for (std::size_t i = 1; i < ts.samples.size(); ++i)
            if (!(ts.samples[i].t_us > ts.samples[i - 1].t_us))
                throw ParseError(static_cast<int>(i) + 2, "time must be strictly increasing");
    }
    return ts;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

using Vec = std::array<double, 5>;

Vec pack(const LaserState& s) {
    return {s.a_z.real(), s.a_z.imag(), s.a_x.real(), s.a_x.imag(), s.inversion};
}

LaserState unpack(const Vec& v) { return {{v[0], v[1]}, {v[2], v[3]}, v[4]}; }

struct RotatingDrive {
    std::array<complex, 2> amp;
    double omega;  // rad/us
    double t_ref;
};

// Everything held constant across one segment between breakpoints.
struct SegmentEnv {
    const LaserModel* model = nullptr;
    bool pump_on = true;
    std::array<complex, 2> constant{};
    std::vector<RotatingDrive> rotating;

    Vec f(double t, const Vec& y) const {
        std::array<complex, 2> drive = constant;
        for (const auto& r : rotating) {
            const complex rot = std::polar(1.0, -r.omega * (t - r.t_ref));
            drive[0] += rot * r.amp[0];
            drive[1] += rot * r.amp[1];
        }
        const Derivative d = model->derivative(unpack(y), drive[0], drive[1], pump_on);
        return {d.d_a_z.real(), d.d_a_z.imag(), d.d_a_x.real(), d.d_a_x.imag(), d.d_inversion};
    }
};

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

class Stepper {
public:
    Stepper(const IntegratorOptions& o, IntegrationStats& st) : opt_(o), st_(st) {}

    // Integrates y from t0 to t1 under env, calling emit(t, y) for every
    // grid time in (t0, t1]. h is the step-size hint, updated on return.
    template <class Emit>
    void run(const SegmentEnv& env, double t0, double t1, Vec& y, double& h, Emit&& emit) {
        double t = t0;
        Vec k1 = env.f(t, y);
        if (!all_finite(k1)) throw IntegrationFailure(t, "non-finite derivative");
        if (!(h > 0.0)) h = initial_step(env, t, y, k1, t1 - t0);
        long steps = 0;
        const double facmax = 5.0, facmin = 0.2, safety = 0.9;
        while (t < t1) {
            if (++steps > opt_.max_steps) throw IntegrationFailure(t, "step limit exceeded");
            bool last = false;
            double hs = h;
            if (t + hs >= t1 || t + 1.01 * hs >= t1) {
                hs = t1 - t;
                last = true;
            }
            if (hs < 1e-13 * std::max(1.0, std::abs(t)))
                throw IntegrationFailure(t, "step size underflow");

            Vec tmp, k2, k3, k4, k5, k6, k7, y1;
            for (int i = 0; i < 5; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
            k2 = env.f(t + c2 * hs, tmp);
            for (int i = 0; i < 5; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
            k3 = env.f(t + c3 * hs, tmp);
            for (int i = 0; i < 5; ++i)
                tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = env.f(t + c4 * hs, tmp);
            for (int i = 0; i < 5; ++i)
                tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = env.f(t + c5 * hs, tmp);
            for (int i = 0; i < 5; ++i)
                tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                      a65 * k5[i]);
            k6 = env.f(t + hs, tmp);
            const double tn = last ? t1 : t + hs;
            for (int i = 0; i < 5; ++i)
                y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                     a76 * k6[i]);
            k7 = env.f(tn, y1);

            if (!all_finite(y1) || !all_finite(k7)) {
                ++st_.rejected;
                h = 0.1 * hs;
                continue;
            }

            double err = 0.0;
            for (int i = 0; i < 5; ++i) {
                const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
                const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
                err += (e / sk) * (e / sk);
            }
            err = std::sqrt(err / 5.0);

            if (err > 1.0) {
                ++st_.rejected;
                h = hs * std::max(facmin, safety * std::pow(err, -0.2));
                continue;
            }
            ++st_.accepted;

            // dense output coefficients
            std::array<Vec, 5> rc;
            for (int i = 0; i < 5; ++i) {
                const double dy = y1[i] - y[i];
                const double bspl = hs * k1[i] - dy;
                rc[0][i] = y[i];
                rc[1][i] = dy;
                rc[2][i] = bspl;
                rc[3][i] = dy - hs * k7[i] - bspl;
                rc[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                 d6 * k6[i] + d7 * k7[i]);
            }
            auto dense = [&](double tq) {
                if (tq == tn) return y1;
                const double th = (tq - t) / hs, th1 = 1.0 - th;
                Vec out;
                for (int i = 0; i < 5; ++i)
                    out[i] = rc[0][i] +
                             th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
                return out;
            };
            emit(t, tn, dense);

            const double fac = err == 0.0 ? facmax
                                          : std::min(facmax, std::max(facmin, safety * std::pow(err, -0.2)));
            if (!last) h = hs * fac;
            else h = std::max(h, hs);  // keep the hint from shrinking on short tails
            t = tn;
            y = y1;
            k1 = k7;
        }
    }

private:
    double initial_step(const SegmentEnv& env, double t, const Vec& y, const Vec& f0,
                        double span) const {
        double d0 = 0, d1n = 0;
        for (int i = 0; i < 5; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
            d0 += (y[i] / sk) * (y[i] / sk);
            d1n += (f0[i] / sk) * (f0[i] / sk);
        }
        d0 = std::sqrt(d0 / 5.0);
        d1n = std::sqrt(d1n / 5.0);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, span);
        Vec y1;
        for (int i = 0; i < 5; ++i) y1[i] = y[i] + h0 * f0[i];
        const Vec f1 = env.f(t + h0, y1);
        double d2 = 0;
        for (int i = 0; i < 5; ++i) {
            const double sk = opt_.atol + opt_.rtol * std::abs(y[i]);
            d2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
        }
        d2 = std::sqrt(d2 / 5.0) / h0;
        const double m = std::max(d1n, d2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
        return std::min({100.0 * h0, h1, span});
    }

    const IntegratorOptions& opt_;
    IntegrationStats& st_;
};

}  // namespace

TimeSeries integrate(const LaserState& initial, const ModelParams& params,
                     const EventSchedule& schedule, double t_end_us, double sample_period_us,
                     const IntegratorOptions& opts, IntegrationStats* stats) {
    if (!(std::isfinite(t_end_us) && t_end_us > 0.0)) throw InvalidInput("t_end must be positive");
    if (!(std::isfinite(sample_period_us) && sample_period_us > 0.0))
        throw InvalidInput("sample period must be positive");
    if (!(opts.rtol > 0.0 && opts.atol > 0.0)) throw InvalidInput("tolerances must be positive");
    params.validate();
    schedule.validate();
    if (!(initial.inversion >= 0.0 && initial.inversion <= 1.0))
        throw InvalidInput("initial inversion must lie in [0, 1]");

    IntegrationStats local;
    IntegrationStats& st = stats ? *stats : local;

    // breakpoints
    std::vector<double> bp{0.0, t_end_us};
    std::vector<const TriggerPulse*> pulses;
    std::vector<const PumpBlock*> blocks;
    std::vector<const FieldStep*> steps;
    for (const auto& e : schedule.events) {
        if (const auto* p = std::get_if<TriggerPulse>(&e)) {
            pulses.push_back(p);
            bp.push_back(p->t_start_us);
            bp.push_back(p->t_end_us());
        } else if (const auto* b = std::get_if<PumpBlock>(&e)) {
            blocks.push_back(b);
            bp.push_back(b->t_start_us);
            bp.push_back(b->t_end_us);
        } else if (const auto* f = std::get_if<FieldStep>(&e)) {
            steps.push_back(f);
            bp.push_back(f->t_us);
        }
    }
    const bool random_seed = params.seed_rate > 0.0 && params.seed_mode == SeedMode::random;
    if (random_seed) {
        const auto n = static_cast<long>(std::floor(t_end_us / params.seed_interval_us));
        for (long k = 1; k <= n; ++k) bp.push_back(static_cast<double>(k) * params.seed_interval_us);
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    while (!bp.empty() && bp.back() > t_end_us) bp.pop_back();

    std::map<double, LaserModel> models;
    auto model_for = [&](double field) -> const LaserModel& {
        auto it = models.find(field);
        if (it == models.end()) {
            ModelParams p = params;
            p.zeeman.field_gauss = field;
            it = models.emplace(field, LaserModel(p)).first;
        }
        return it->second;
    };

    const double seed_eta_random =
        random_seed ? std::sqrt(params.seed_rate / params.seed_interval_us) : 0.0;
    const double seed_eta_const =
        (params.seed_rate > 0.0 && !random_seed) ? 0.5 * std::sqrt(params.seed_rate * params.kappa)
                                                 : 0.0;

    const auto n_samples = static_cast<std::size_t>(std::floor(t_end_us / sample_period_us + 1e-9)) + 1;
    TimeSeries ts;
    ts.sample_period_us = sample_period_us;
    ts.samples.reserve(n_samples);
    ts.samples.push_back({0.0, initial.a_z, initial.a_x, initial.inversion});
    std::size_t next = 1;

    Vec y = pack(initial);
    double h = 0.0;
    Stepper stepper(opts, st);

    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
        const double t0 = bp[s], t1 = bp[s + 1];
        if (!(t1 > t0)) continue;
        const double mid = 0.5 * (t0 + t1);
        ++st.segments;

        SegmentEnv env;
        double field = params.zeeman.field_gauss;
        for (const auto* f : steps)
            if (f->t_us <= mid) field = f->field_gauss;
        env.model = &model_for(field);
        env.pump_on = std::none_of(blocks.begin(), blocks.end(), [&](const PumpBlock* b) {
            return b->t_start_us <= mid && mid < b->t_end_us;
        });
        for (const auto* p : pulses) {
            if (!(p->t_start_us <= mid && mid < p->t_end_us())) continue;
            const double eta = pulse_eta(*p, params.kappa);
            const double omega = two_pi * p->carrier_detuning_hz * 1e-6;
            const std::array<complex, 2> amp{eta * p->polarization[0], eta * p->polarization[1]};
            if (omega == 0.0) {
                env.constant[0] += amp[0];
                env.constant[1] += amp[1];
            } else {
                env.rotating.push_back({amp, omega, p->t_start_us});
            }
        }
        if (random_seed) {
            const auto k = static_cast<std::uint64_t>(std::floor(mid / params.seed_interval_us));
            env.constant[0] += seed_eta_random * seed_variate(opts.seed, k, 0);
            env.constant[1] += seed_eta_random * seed_variate(opts.seed, k, 1);
        } else if (seed_eta_const > 0.0) {
            env.constant[0] += seed_eta_const;
            env.constant[1] += seed_eta_const;
        }

        h = std::min(h, t1 - t0);
        stepper.run(env, t0, t1, y, h, [&](double ta, double tb, const auto& dense) {
            while (next < n_samples) {
                const double tk = static_cast<double>(next) * sample_period_us;
                const double tq = next + 1 == n_samples && tk > tb && tb == t_end_us ? tb : tk;
                if (!(tq > ta && tq <= tb)) break;
                const Vec v = dense(tq);
                ts.samples.push_back({tk, {v[0], v[1]}, {v[2], v[3]}, v[4]});
                ++next;
            }
        });
    }
    return ts;
}

}  // namespace tpl
