#pragma once

#include "tpl/dynamics.hpp"
#include "tpl/integrator.hpp"

namespace tpl {

struct CalibrationTargets {
    double n_on = 2.2e6;
    double n_unstable = 2.75e5;
};

/// Sets gain and sat_photons of `base` so that the single-mode model with
/// free inversion has its stable and unstable fixed points at the targets.
/// kappa, pump, inversion_decay, atom_number and the ZZ pathway are taken
/// from `base`. Throws CalibrationInfeasible.
ModelParams calibrate(const ModelParams& base, const CalibrationTargets& targets);

/// Fixed points of calibrated params, as targets (inverse of calibrate).
CalibrationTargets targets_of(const ModelParams& p);

/// Off state with the inversion at its unsaturated value.
LaserState off_state(const ModelParams& p);

struct TriggerProbe {
    double settle_us = 30.0;   // simulated time after the pulse ends
    double sample_period_us = 0.05;
};

/// Photon number at the end of a single-pulse run from the off state.
double trigger_final_photons(const ModelParams& p, const TriggerPulse& pulse,
                             const TriggerProbe& probe = {});

/// Smallest injected photon number (bisection, relative width rel_tol)
/// that latches the laser on, for the given pulse shape.
double injected_threshold(const ModelParams& p, TriggerPulse pulse,
                          const TriggerProbe& probe = {}, double rel_tol = 1e-6);

/// Coupling efficiency that places the injected-photon threshold at
/// target_threshold. The drive depends on efficiency * n_inj only.
double calibrate_coupling_efficiency(const ModelParams& p, TriggerPulse pulse,
                                     double target_threshold, const TriggerProbe& probe = {},
                                     double rel_tol = 1e-6);

/// Separatrix in initial photon number for a z-polarized start with the
/// inversion clamped or free, found by bisection.
double separatrix_initial_photons(const ModelParams& p, const LaserState& start_template,
                                  double settle_us = 30.0, double rel_tol = 1e-6);

}  // namespace tpl
