#pragma once

#include <utility>

namespace tpl {

namespace constants {
inline constexpr double c = 299'792'458.0;          // m/s, exact
inline constexpr double h = 6.626'070'15e-34;       // J s, exact
inline constexpr double pi = 3.141592653589793238462643383279502884;

// Apparatus values with no dynamical role, kept for reference output.
inline constexpr double atomic_density_per_cm3 = 2e11;
inline constexpr double atomic_beam_diameter_m = 2.5e-3;
inline constexpr double doppler_width_hz = 30e6;
inline constexpr double raman_pump_intensity_w_per_cm2 = 25.0;
inline constexpr double pinhole_diameter_m = 400e-6;
inline constexpr double max_atoms_in_mode = 7e6;
inline constexpr double homogeneous_linewidth_hz = 6e6;
}  // namespace constants

/// Mirror separation, curvature and transverse degeneracy order of a
/// two-mirror standing-wave resonator.
struct CavityGeometry {
    double length_m = 0.0;
    double mirror_radius_m = 0.0;
    int degeneracy_order = 2;
    double wavelength_m = 770e-9;

    /// Throws InvalidInput unless 0 < L < 2R and p >= 2.
    void validate() const;
    bool operator==(const CavityGeometry&) const = default;
};

/// Per-mirror transmission and absorption/scatter loss.
struct CavityLoss {
    double transmissivity = 0.0;
    double absorption = 0.0;

    /// Throws InvalidInput unless 0 < T < 1, 0 <= A < 1, T + A < 1.
    void validate() const;
    bool operator==(const CavityLoss&) const = default;
};

struct CavitySummary {
    double finesse = 0.0;
    double fsr_hz = 0.0;
    double mode_linewidth_hz = 0.0;
    double kappa_per_s = 0.0;        // photon-number decay rate, 2*pi*linewidth
    double cluster_spacing_hz = 0.0;
};

double finesse(const CavityLoss& loss);
double free_spectral_range(const CavityGeometry& geom);
double free_spectral_range(double length_m);
double mode_linewidth(const CavityGeometry& geom, const CavityLoss& loss);
double decay_rate(const CavityGeometry& geom, const CavityLoss& loss);

/// Both lengths satisfying L = R[1 -/+ cos(pi/p)], short branch first.
std::pair<double, double> subconfocal_lengths(double mirror_radius_m, int p);

/// FSR / p. Accepts p = 1 (no transverse grouping).
double cluster_spacing(const CavityGeometry& geom);

/// Power leaving through the transmissive channels of both mirrors for an
/// intracavity photon number n: n * (hc/lambda) * kappa * T/(T+A).
/// The single-mirror output is half of this.
double photon_number_to_output_power(double n, const CavityGeometry& geom,
                                     const CavityLoss& loss);

CavitySummary summarize(const CavityGeometry& geom, const CavityLoss& loss);

/// Resonator used in the experiment: R = 5 cm, L = 1.464 cm, p = 4, 770 nm.
CavityGeometry paper_geometry();
/// Mirrors with T = 2e-4 and the loss inferred with pinholes in place
/// (finesse 15,140).
CavityLoss paper_loss_with_pinholes();
/// Mirrors with T = 2e-4, A = 4e-6 (ring-down finesse, no pinholes).
CavityLoss paper_loss_bare();

}  // namespace tpl
