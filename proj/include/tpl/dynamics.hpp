#pragma once

#include <array>
#include <optional>

#include "tpl/pathways.hpp"

namespace tpl {

// Internal units throughout this header: time in microseconds, rates in
// 1/us, field amplitudes in sqrt(photons).

struct LaserState {
    complex a_z{0.0, 0.0};
    complex a_x{0.0, 0.0};
    double inversion = 0.0;

    double n_z() const { return std::norm(a_z); }
    double n_x() const { return std::norm(a_x); }
    double n_tot() const { return n_z() + n_x(); }
    bool operator==(const LaserState&) const = default;
};

struct Derivative {
    complex d_a_z{0.0, 0.0};
    complex d_a_x{0.0, 0.0};
    double d_inversion = 0.0;
};

enum class SeedMode { constant, random };

struct ModelParams {
    double kappa = 0.0;            // photon-number decay rate
    double gain = 0.0;             // G, per unit inversion, 1/(us photon)
    double sat_photons = 0.0;      // n_s
    double pump = 0.0;             // P
    double inversion_decay = 0.0;  // gamma
    double atom_number = 7e6;      // N_eff in the inversion backaction term
    PathwayTable pathways;
    ZeemanEnvironment zeeman;
    double coherence_time_us = 1.0 / (3.141592653589793 * 6.0);
    /// G_c / G. Unset means sqrt(c_ZX c_XZ).
    std::optional<double> cross_coupling;
    /// Reserved; must be zero.
    double cavity_detuning = 0.0;
    double seed_rate = 0.0;        // photons per us into each mode
    SeedMode seed_mode = SeedMode::random;
    double seed_interval_us = 0.01;
    /// Hold D fixed at its initial value.
    bool clamp_inversion = false;

    /// Throws InvalidInput naming the violated constraint.
    void validate() const;
    double cross_coupling_ratio() const;
    /// P / (P + gamma)
    double unsaturated_inversion() const { return pump / (pump + inversion_decay); }
    bool operator==(const ModelParams&) const = default;
};

/// Gain coefficients G c_p^2 L_p (and the coherent pair) with lineshapes
/// evaluated for the current field. Rebuild whenever the field changes.
struct GainCoefficients {
    complex zz, zx, xz, xx;  // self and cross saturation
    complex cz, cx;          // coherent a_x^2 a_z* and a_z^2 a_x* terms
};

GainCoefficients assemble_gain(const ModelParams& p);

class LaserModel {
public:
    explicit LaserModel(const ModelParams& p);
    LaserModel(const ModelParams& p, const GainCoefficients& g);

    /// Field and inversion rates for the given drive. pump_on = false
    /// removes the P(1 - D) term.
    Derivative derivative(const LaserState& s, complex drive_z, complex drive_x,
                          bool pump_on = true) const;

    const ModelParams& params() const { return p_; }
    const GainCoefficients& coefficients() const { return g_; }

private:
    ModelParams p_;
    GainCoefficients g_;
    double inv_ns2_;
};

/// Equations of motion. `injection` is the external drive (pulse plus
/// seed) per mode; t is unused by the autonomous model but kept for the
/// drive-aware callers.
Derivative rhs(const LaserState& s, const ModelParams& p, double t_us,
               std::array<complex, 2> injection = {});

/// Effective single-mode (z only) gain coefficient G c_ZZ^2 Re L_ZZ.
double single_mode_gain(const ModelParams& p);

struct ThresholdReport {
    double d_min = 0.0;
    bool has_on_state = false;
    double n_unstable = 0.0;
    double n_on = 0.0;
};

/// Roots of kappa/2 = G D n / (1 + (n/n_s)^2) at fixed D.
ThresholdReport threshold_analysis(const ModelParams& p, double clamped_inversion);

/// 2 G D n^2 / (1 + (n/n_s)^2), photons per us.
double two_photon_gain_rate(double n, double inversion, const ModelParams& p);

struct SteadyStates {
    bool has_on_state = false;
    double n_unstable = 0.0, d_unstable = 0.0;
    double n_on = 0.0, d_on = 0.0;
};

/// Single-mode fixed points with the inversion free to respond.
SteadyStates single_mode_steady_states(const ModelParams& p);

/// Small x-polarized perturbation of the z-polarized on state: the two
/// eigenvalues of the linear (a_x, a_x*) system, in 1/us.
std::array<complex, 2> polarization_eigenvalues(const ModelParams& p, double n_on,
                                                double inversion);

}  // namespace tpl
