#include "tpl/cavity.hpp"

#include <cmath>

#include "tpl/error.hpp"

namespace tpl {

void CavityGeometry::validate() const {
    if (!(mirror_radius_m > 0.0)) throw InvalidInput("mirror radius must be positive");
    if (!(length_m > 0.0 && length_m < 2.0 * mirror_radius_m))
        throw InvalidInput("cavity length must satisfy 0 < L < 2R");
    if (degeneracy_order < 2) throw InvalidInput("degeneracy order p must be >= 2");
    if (!(wavelength_m > 0.0)) throw InvalidInput("wavelength must be positive");
}

void CavityLoss::validate() const {
    if (!(transmissivity > 0.0 && transmissivity < 1.0))
        throw InvalidInput("transmissivity must satisfy 0 < T < 1");
    if (!(absorption >= 0.0 && absorption < 1.0))
        throw InvalidInput("absorption must satisfy 0 <= A < 1");
    if (!(transmissivity + absorption < 1.0)) throw InvalidInput("T + A must be < 1");
}

double finesse(const CavityLoss& loss) {
    const double total = loss.transmissivity + loss.absorption;
    if (!(total > 0.0)) throw InvalidInput("finesse undefined for zero mirror loss");
    return constants::pi / total;
}

double free_spectral_range(double length_m) {
    if (!(length_m > 0.0)) throw InvalidInput("cavity length must be positive");
    return constants::c / (2.0 * length_m);
}

double free_spectral_range(const CavityGeometry& geom) {
    return free_spectral_range(geom.length_m);
}

double mode_linewidth(const CavityGeometry& geom, const CavityLoss& loss) {
    return free_spectral_range(geom) / finesse(loss);
}

double decay_rate(const CavityGeometry& geom, const CavityLoss& loss) {
    return 2.0 * constants::pi * mode_linewidth(geom, loss);
}

std::pair<double, double> subconfocal_lengths(double mirror_radius_m, int p) {
    if (!(mirror_radius_m > 0.0)) throw InvalidInput("mirror radius must be positive");
    if (p < 2) throw InvalidInput("degeneracy order p must be >= 2");
    const double c = std::cos(constants::pi / p);
    return {mirror_radius_m * (1.0 - c), mirror_radius_m * (1.0 + c)};
}

double cluster_spacing(const CavityGeometry& geom) {
    if (geom.degeneracy_order < 1) throw InvalidInput("degeneracy order must be >= 1");
    return free_spectral_range(geom) / geom.degeneracy_order;
}

double photon_number_to_output_power(double n, const CavityGeometry& geom,
                                     const CavityLoss& loss) {
    if (!(n >= 0.0)) throw InvalidInput("photon number must be non-negative");
    const double photon_energy = constants::h * constants::c / geom.wavelength_m;
    const double branching = loss.transmissivity / (loss.transmissivity + loss.absorption);
    return n * photon_energy * decay_rate(geom, loss) * branching;
}

CavitySummary summarize(const CavityGeometry& geom, const CavityLoss& loss) {
    CavitySummary s;
    s.finesse = finesse(loss);
    s.fsr_hz = free_spectral_range(geom);
    s.mode_linewidth_hz = s.fsr_hz / s.finesse;
    s.kappa_per_s = 2.0 * constants::pi * s.mode_linewidth_hz;
    s.cluster_spacing_hz = cluster_spacing(geom);
    return s;
}

CavityGeometry paper_geometry() {
    return CavityGeometry{1.464e-2, 5e-2, 4, 770e-9};
}

CavityLoss paper_loss_with_pinholes() {
    // T + A = pi / 15140
    return CavityLoss{2e-4, constants::pi / 15140.0 - 2e-4};
}

CavityLoss paper_loss_bare() {
    return CavityLoss{2e-4, 4e-6};
}

}  // namespace tpl
