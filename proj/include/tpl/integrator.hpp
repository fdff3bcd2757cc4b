#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "tpl/dynamics.hpp"

namespace tpl {

struct TriggerPulse {
    double t_start_us = 0.0;
    double duration_us = 1.2;
    double injected_photons = 0.0;
    std::array<complex, 2> polarization{complex{1.0, 0.0}, complex{0.0, 0.0}};
    double carrier_detuning_hz = 0.0;
    /// Fraction of n_inj entering the drive amplitude; 1 is the bare
    /// empty-cavity bookkeeping.
    double coupling_efficiency = 1.0;

    void validate() const;
    double t_end_us() const { return t_start_us + duration_us; }
    bool operator==(const TriggerPulse&) const = default;
};

struct PumpBlock {
    double t_start_us = 0.0;
    double t_end_us = 0.0;
    bool operator==(const PumpBlock&) const = default;
};

struct FieldStep {
    double t_us = 0.0;
    double field_gauss = 0.0;
    bool operator==(const FieldStep&) const = default;
};

using Event = std::variant<TriggerPulse, PumpBlock, FieldStep>;

double event_time(const Event& e);

struct EventSchedule {
    std::vector<Event> events;

    /// Throws InvalidInput if events are out of order or malformed.
    void validate() const;
    bool operator==(const EventSchedule&) const = default;
};

/// Drive amplitude (sqrt(photons)/us) that brings an empty cavity to
/// n photons after time tau: n = (2 eta/kappa)^2 (1 - exp(-kappa tau/2))^2.
double pulse_drive_amplitude(double n, double tau_us, double kappa);

/// Per-mode drive of one pulse at time t; zero outside [t_start, t_end).
std::array<complex, 2> inject_pulse_drive(const TriggerPulse& p, double t_us,
                                          const ModelParams& params);

struct Sample {
    double t_us;
    complex a_z;
    complex a_x;
    double inversion;

    double n_z() const { return std::norm(a_z); }
    double n_x() const { return std::norm(a_x); }
    double n_tot() const { return n_z() + n_x(); }
};

struct TimeSeries {
    double sample_period_us = 0.0;
    std::vector<Sample> samples;

    void write_csv(std::ostream& os) const;
    static TimeSeries read_csv(std::istream& is);
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    std::uint64_t seed = 1;
    /// Cap on accepted + rejected steps per segment.
    long max_steps = 50'000'000;
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
    long segments = 0;
};

/// Adaptive Dormand-Prince 5(4) integration, restarted at every event
/// boundary (and every seed interval when a random seed is active).
/// Samples at t = k * sample_period for k = 0 .. floor(t_end / period).
TimeSeries integrate(const LaserState& initial, const ModelParams& params,
                     const EventSchedule& schedule, double t_end_us,
                     double sample_period_us, const IntegratorOptions& opts = {},
                     IntegrationStats* stats = nullptr);

/// Complex Gaussian pair with E|xi|^2 = 1 for seed interval k and mode m,
/// from a counter-based generator.
complex seed_variate(std::uint64_t seed, std::uint64_t interval, int mode);

}  // namespace tpl
