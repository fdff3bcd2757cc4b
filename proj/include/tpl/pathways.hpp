#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>

namespace tpl {

using complex = std::complex<double>;

/// Cavity polarization of one emitted photon.
enum class Pol { z, x };

/// The four hyper-Raman routes |g22> -> |g1 M_g>, named by the polarization
/// pair of the two photons they add to the cavity (first, second).
enum class PathwayId { ZZ = 0, ZX = 1, XZ = 2, XX = 3 };

inline constexpr std::array<PathwayId, 4> all_pathways{PathwayId::ZZ, PathwayId::ZX,
                                                       PathwayId::XZ, PathwayId::XX};

std::string_view to_string(PathwayId id);
/// Parses "ZZ", "ZX", "XZ", "XX" (case-insensitive). Throws InvalidInput.
PathwayId pathway_from_string(std::string_view s);
std::array<Pol, 2> pair_polarizations(PathwayId id);

struct PathwaySpec {
    PathwayId id = PathwayId::ZZ;
    double weight = 1.0;           // coupling weight c_p >= 0
    int zeeman_slope = 0;          // multiples of the base Zeeman shift
    std::string final_state_label; // documentation only

    std::array<Pol, 2> polarizations() const { return pair_polarizations(id); }
    bool operator==(const PathwaySpec&) const = default;
};

/// One entry per PathwayId, indexed by static_cast<size_t>(id).
class PathwayTable {
public:
    /// Equal unit weights; ZZ and XX at slope 0, ZX at +1, XZ at -1.
    PathwayTable();

    const PathwaySpec& operator[](PathwayId id) const {
        return specs_[static_cast<std::size_t>(id)];
    }
    PathwaySpec& operator[](PathwayId id) { return specs_[static_cast<std::size_t>(id)]; }

    auto begin() const { return specs_.begin(); }
    auto end() const { return specs_.end(); }

    /// Throws InvalidInput if a weight is negative or not finite, or an id
    /// is stored in the wrong slot.
    void validate() const;

    /// True when swapping z <-> x maps the table onto itself at B = 0
    /// (ZZ/XX and ZX/XZ weights pairwise equal).
    bool swap_symmetric() const;

    bool operator==(const PathwayTable&) const = default;

private:
    std::array<PathwaySpec, 4> specs_;
};

struct ZeemanEnvironment {
    double field_gauss = 0.0;
    double base_shift_hz_per_gauss = 0.7e6;

    void validate() const;
    bool operator==(const ZeemanEnvironment&) const = default;
};

/// Two-photon detuning of a pathway in Hz: slope * base rate * B.
double pathway_detuning(const PathwaySpec& p, const ZeemanEnvironment& env);

/// Complex Lorentzian response 1 / (1 + i 2 pi delta T2).
complex lorentzian(double detuning_hz, double coherence_time_s);
complex pathway_lineshape(const PathwaySpec& p, const ZeemanEnvironment& env,
                          double coherence_time_s);

/// Coherence time matching a homogeneous FWHM linewidth: T2 = 1/(pi dnu).
double coherence_time_from_linewidth(double fwhm_hz);

/// alpha1 alpha2 |zz> + beta1 beta2 |xx>, normalized.
struct PairState {
    complex amp_zz{1.0, 0.0};
    complex amp_xx{0.0, 0.0};
};

struct PairStateReport {
    PairState state;
    /// Emission amplitudes of the cross pairs, relative to the norm of the
    /// zz/xx amplitudes. Not part of the state.
    complex rel_zx{0.0, 0.0};
    complex rel_xz{0.0, 0.0};
    /// |zx|^2 + |xz|^2 over the total emission probability.
    double cross_fraction = 0.0;
};

/// Builds the pair state from the four pathway emission amplitudes (indexed
/// by PathwayId). Throws InvalidInput when both zz and xx amplitudes vanish.
PairStateReport build_pair_state(const std::array<complex, 4>& amplitudes);

/// Emission amplitudes c_p * L_p for a table in a given field.
std::array<complex, 4> emission_amplitudes(const PathwayTable& table,
                                           const ZeemanEnvironment& env,
                                           double coherence_time_s);

/// Pure-state concurrence 2 |amp_zz| |amp_xx|.
double concurrence(const PairState& s);

}  // namespace tpl
