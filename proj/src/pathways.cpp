#include "tpl/pathways.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "tpl/cavity.hpp"
#include "tpl/error.hpp"

namespace tpl {

std::string_view to_string(PathwayId id) {
    switch (id) {
        case PathwayId::ZZ: return "ZZ";
        case PathwayId::ZX: return "ZX";
        case PathwayId::XZ: return "XZ";
        case PathwayId::XX: return "XX";
    }
    return "?";
}

PathwayId pathway_from_string(std::string_view s) {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (auto id : all_pathways)
        if (to_string(id) == up) return id;
    throw InvalidInput("unknown pathway id '" + std::string(s) + "'");
}

std::array<Pol, 2> pair_polarizations(PathwayId id) {
    switch (id) {
        case PathwayId::ZZ: return {Pol::z, Pol::z};
        case PathwayId::ZX: return {Pol::z, Pol::x};
        case PathwayId::XZ: return {Pol::x, Pol::z};
        case PathwayId::XX: return {Pol::x, Pol::x};
    }
    return {Pol::z, Pol::z};
}

PathwayTable::PathwayTable() {
    // Pairs of equal polarization return to M_g = 0 and are first-order
    // field independent; mixed pairs end on M_g = -1 / +1.
    specs_[0] = {PathwayId::ZZ, 1.0, 0, "|g1,0>"};
    specs_[1] = {PathwayId::ZX, 1.0, 1, "|g1,-1>"};
    specs_[2] = {PathwayId::XZ, 1.0, -1, "|g1,+1>"};
    specs_[3] = {PathwayId::XX, 1.0, 0, "|g1,0>"};
}

void PathwayTable::validate() const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& p = specs_[i];
        if (static_cast<std::size_t>(p.id) != i)
            throw InvalidInput("pathway table slot " + std::to_string(i) + " holds " +
                               std::string(to_string(p.id)));
        if (!(std::isfinite(p.weight) && p.weight >= 0.0))
            throw InvalidInput("pathway " + std::string(to_string(p.id)) +
                               " weight must be finite and non-negative");
    }
}

bool PathwayTable::swap_symmetric() const {
    return (*this)[PathwayId::ZZ].weight == (*this)[PathwayId::XX].weight &&
           (*this)[PathwayId::ZX].weight == (*this)[PathwayId::XZ].weight;
}

void ZeemanEnvironment::validate() const {
    if (!std::isfinite(field_gauss)) throw InvalidInput("magnetic field must be finite");
    if (!(base_shift_hz_per_gauss > 0.0))
        throw InvalidInput("base Zeeman shift rate must be positive");
}

double pathway_detuning(const PathwaySpec& p, const ZeemanEnvironment& env) {
    return p.zeeman_slope * env.base_shift_hz_per_gauss * env.field_gauss;
}

complex lorentzian(double detuning_hz, double coherence_time_s) {
    if (!(coherence_time_s > 0.0)) throw InvalidInput("coherence time must be positive");
    const double y = 2.0 * constants::pi * detuning_hz * coherence_time_s;
    // 1/(1+iy) = (1-iy)/(1+y^2)
    const double den = 1.0 + y * y;
    return {1.0 / den, -y / den};
}

complex pathway_lineshape(const PathwaySpec& p, const ZeemanEnvironment& env,
                          double coherence_time_s) {
    return lorentzian(pathway_detuning(p, env), coherence_time_s);
}

double coherence_time_from_linewidth(double fwhm_hz) {
    if (!(fwhm_hz > 0.0)) throw InvalidInput("linewidth must be positive");
    return 1.0 / (constants::pi * fwhm_hz);
}

PairStateReport build_pair_state(const std::array<complex, 4>& a) {
    const complex zz = a[static_cast<std::size_t>(PathwayId::ZZ)];
    const complex xx = a[static_cast<std::size_t>(PathwayId::XX)];
    const complex zx = a[static_cast<std::size_t>(PathwayId::ZX)];
    const complex xz = a[static_cast<std::size_t>(PathwayId::XZ)];
    const double norm2 = std::norm(zz) + std::norm(xx);
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
        throw InvalidInput("pair state needs a nonzero zz or xx amplitude");
    const double norm = std::sqrt(norm2);
    PairStateReport r;
    r.state.amp_zz = zz / norm;
    r.state.amp_xx = xx / norm;
    r.rel_zx = zx / norm;
    r.rel_xz = xz / norm;
    const double cross = std::norm(zx) + std::norm(xz);
    r.cross_fraction = cross / (cross + norm2);
    return r;
}

std::array<complex, 4> emission_amplitudes(const PathwayTable& table,
                                           const ZeemanEnvironment& env,
                                           double coherence_time_s) {
    std::array<complex, 4> out{};
    for (const auto& p : table)
        out[static_cast<std::size_t>(p.id)] =
            p.weight * pathway_lineshape(p, env, coherence_time_s);
    return out;
}

double concurrence(const PairState& s) {
    // 2|a||b| for a normalized state; dividing by the norm keeps equal
    // amplitudes at exactly 1 despite rounding in the normalization.
    const double a = std::abs(s.amp_zz);
    const double b = std::abs(s.amp_xx);
    const double n2 = a * a + b * b;
    if (!(n2 > 0.0)) throw InvalidInput("pair state has zero norm");
    return std::min(1.0, 2.0 * a * b / n2);
}

}  // namespace tpl
