#include "tpl/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tpl/error.hpp"

namespace tpl {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidInput(what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ModelParams::validate() const {
    require(finite_positive(kappa), "kappa must be positive");
    require(finite_positive(gain), "gain must be positive");
    require(finite_positive(sat_photons), "sat_photons must be positive");
    require(std::isfinite(pump) && pump >= 0.0, "pump must be non-negative");
    require(finite_positive(inversion_decay), "inversion_decay must be positive");
    require(finite_positive(atom_number), "atom_number must be positive");
    require(finite_positive(coherence_time_us), "coherence time must be positive");
    require(!cross_coupling || (std::isfinite(*cross_coupling) && *cross_coupling >= 0.0),
            "cross_coupling must be non-negative");
    require(cavity_detuning == 0.0, "cavity_detuning is reserved and must be 0");
    require(std::isfinite(seed_rate) && seed_rate >= 0.0, "seed_rate must be non-negative");
    require(finite_positive(seed_interval_us), "seed_interval must be positive");
    pathways.validate();
    zeeman.validate();
}

double ModelParams::cross_coupling_ratio() const {
    if (cross_coupling) return *cross_coupling;
    return std::sqrt(pathways[PathwayId::ZX].weight * pathways[PathwayId::XZ].weight);
}

GainCoefficients assemble_gain(const ModelParams& p) {
    const double t2 = p.coherence_time_us * 1e-6;
    auto self = [&](PathwayId id) {
        const auto& s = p.pathways[id];
        return p.gain * s.weight * s.weight * pathway_lineshape(s, p.zeeman, t2);
    };
    GainCoefficients g;
    g.zz = self(PathwayId::ZZ);
    g.zx = self(PathwayId::ZX);
    g.xz = self(PathwayId::XZ);
    g.xx = self(PathwayId::XX);
    const double gc = p.gain * p.cross_coupling_ratio();
    g.cz = gc * pathway_lineshape(p.pathways[PathwayId::ZX], p.zeeman, t2);
    g.cx = gc * pathway_lineshape(p.pathways[PathwayId::XZ], p.zeeman, t2);
    return g;
}

LaserModel::LaserModel(const ModelParams& p) : LaserModel(p, assemble_gain(p)) {}

LaserModel::LaserModel(const ModelParams& p, const GainCoefficients& g)
    : p_(p), g_(g), inv_ns2_(1.0 / (p.sat_photons * p.sat_photons)) {}

Derivative LaserModel::derivative(const LaserState& s, complex drive_z, complex drive_x,
                                  bool pump_on) const {
    const complex az = s.a_z, ax = s.a_x;
    const double nz = std::norm(az), nx = std::norm(ax);
    const double n = nz + nx;
    const double sat = 1.0 / (1.0 + n * n * inv_ns2_);
    const double g = s.inversion * sat;

    const complex tz = g_.zz * nz * az + g_.zx * nx * az + g_.cz * (ax * ax) * std::conj(az);
    const complex tx = g_.xx * nx * ax + g_.xz * nz * ax + g_.cx * (az * az) * std::conj(ax);

    Derivative d;
    d.d_a_z = -0.5 * p_.kappa * az + g * tz + drive_z;
    d.d_a_x = -0.5 * p_.kappa * ax + g * tx + drive_x;
    if (!p_.clamp_inversion) {
        // photons added per us by the gain terms, two per atomic transition
        const double emitted = 2.0 * g * (std::real(std::conj(az) * tz) +
                                          std::real(std::conj(ax) * tx));
        const double pumped = pump_on ? p_.pump * (1.0 - s.inversion) : 0.0;
        d.d_inversion = pumped - p_.inversion_decay * s.inversion -
                        emitted / (2.0 * p_.atom_number);
    }
    return d;
}

Derivative rhs(const LaserState& s, const ModelParams& p, double /*t_us*/,
               std::array<complex, 2> injection) {
    return LaserModel(p).derivative(s, injection[0], injection[1]);
}

double single_mode_gain(const ModelParams& p) {
    const auto& s = p.pathways[PathwayId::ZZ];
    const complex l = pathway_lineshape(s, p.zeeman, p.coherence_time_us * 1e-6);
    return p.gain * s.weight * s.weight * l.real();
}

ThresholdReport threshold_analysis(const ModelParams& p, double clamped_inversion) {
    if (!(clamped_inversion > 0.0 && clamped_inversion <= 1.0))
        throw InvalidInput("clamped inversion must lie in (0, 1]");
    const double ge = single_mode_gain(p);
    if (!(ge > 0.0)) throw InvalidInput("single-mode gain must be positive");
    const double ns = p.sat_photons;
    ThresholdReport r;
    r.d_min = p.kappa / (ge * ns);
    // (kappa/2/ns^2) n^2 - G D n + kappa/2 = 0; roots multiply to ns^2
    const double b = ge * clamped_inversion;
    const double c = 0.5 * p.kappa;
    const double disc = b * b - p.kappa * p.kappa / (ns * ns);
    if (std::abs(disc) <= 1e-12 * b * b) {
        r.has_on_state = true;
        r.n_on = r.n_unstable = ns;
        return r;
    }
    if (disc < 0.0) return r;
    r.has_on_state = true;
    r.n_on = (b + std::sqrt(disc)) * ns * ns / (2.0 * c);
    r.n_unstable = ns * ns / r.n_on;
    return r;
}

double two_photon_gain_rate(double n, double inversion, const ModelParams& p) {
    if (!(n >= 0.0)) throw InvalidInput("photon number must be non-negative");
    const double s = n / p.sat_photons;
    return 2.0 * single_mode_gain(p) * inversion * n * n / (1.0 + s * s);
}

SteadyStates single_mode_steady_states(const ModelParams& p) {
    const double ge = single_mode_gain(p);
    const double ns2 = p.sat_photons * p.sat_photons;
    const double pg = p.pump + p.inversion_decay;
    const double backaction = p.clamp_inversion ? 0.0 : ge / p.atom_number;
    // a n^2 - b n + c = 0
    const double a = 0.5 * p.kappa * (pg / ns2 + backaction);
    const double b = ge * p.pump;
    const double c = 0.5 * p.kappa * pg;
    SteadyStates r;
    double disc = b * b - 4.0 * a * c;
    if (std::abs(disc) <= 1e-12 * b * b) disc = 0.0;
    if (disc < 0.0) return r;
    r.has_on_state = true;
    r.n_on = (b + std::sqrt(disc)) / (2.0 * a);
    r.n_unstable = c / (a * r.n_on);
    auto inversion_at = [&](double n) {
        const double s = n * n / ns2;
        return 0.5 * p.kappa * (1.0 + s) / (ge * n);
    };
    r.d_on = inversion_at(r.n_on);
    r.d_unstable = inversion_at(r.n_unstable);
    return r;
}

std::array<complex, 2> polarization_eigenvalues(const ModelParams& p, double n_on,
                                                double inversion) {
    const auto g = assemble_gain(p);
    const double s = n_on / p.sat_photons;
    const double w = inversion / (1.0 + s * s) * n_on;
    const complex alpha = -0.5 * p.kappa + w * g.xz;
    const complex beta = w * g.cx;
    const complex root = std::sqrt(complex(std::norm(beta) - alpha.imag() * alpha.imag(), 0.0));
    return {alpha.real() + root, alpha.real() - root};
}

}  // namespace tpl
