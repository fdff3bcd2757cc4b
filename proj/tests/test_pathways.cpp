#include <cmath>

#include "doctest.h"
#include "tpl/cavity.hpp"
#include "tpl/error.hpp"
#include "tpl/pathways.hpp"

using namespace tpl;
using doctest::Approx;

TEST_CASE("default pathway table") {
    PathwayTable t;
    CHECK_NOTHROW(t.validate());
    CHECK(t[PathwayId::ZZ].zeeman_slope == 0);
    CHECK(t[PathwayId::XX].zeeman_slope == 0);
    CHECK(t[PathwayId::ZX].zeeman_slope == 1);
    CHECK(t[PathwayId::XZ].zeeman_slope == -1);
    CHECK(t.swap_symmetric());
    t[PathwayId::ZX].weight = 2.0;
    CHECK_FALSE(t.swap_symmetric());
    t[PathwayId::XZ].weight = -1.0;
    CHECK_THROWS_AS(t.validate(), InvalidInput);
}

TEST_CASE("pathway names") {
    for (auto id : all_pathways) CHECK(pathway_from_string(to_string(id)) == id);
    CHECK(pathway_from_string("zx") == PathwayId::ZX);
    CHECK_THROWS_AS(pathway_from_string("ZY"), InvalidInput);
    const auto pol = pair_polarizations(PathwayId::ZX);
    CHECK(pol[0] == Pol::z);
    CHECK(pol[1] == Pol::x);
}

TEST_CASE("pathway detuning") {
    PathwaySpec p{PathwayId::ZX, 1.0, 2, ""};
    CHECK(pathway_detuning(p, {0.0, 0.7e6}) == 0.0);
    CHECK(pathway_detuning(p, {2.0, 0.7e6}) == Approx(2.8e6).epsilon(1e-15));
    PathwaySpec s{PathwayId::ZZ, 1.0, 0, ""};
    CHECK(pathway_detuning(s, {3.7, 0.7e6}) == 0.0);
}

TEST_CASE("lineshape") {
    const complex at0 = lorentzian(0.0, 1e-7);
    CHECK(at0.real() == 1.0);
    CHECK(at0.imag() == 0.0);
    const double t2 = 1e-7;
    const complex half = lorentzian(1.0 / (2.0 * constants::pi * t2), t2);
    CHECK(half.real() == Approx(0.5).epsilon(1e-14));
    CHECK(half.imag() == Approx(-0.5).epsilon(1e-14));
    CHECK(std::abs(half) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

    const double t2_6 = coherence_time_from_linewidth(6e6);
    CHECK(t2_6 == Approx(1.0 / (constants::pi * 6e6)));
    PathwaySpec p{PathwayId::ZX, 1.0, 2, ""};
    const complex l = pathway_lineshape(p, {2.0, 0.7e6}, t2_6);
    // frozen: 1/(1 + i 0.9333...)
    CHECK(l.real() == Approx(0.534441805225653207).epsilon(1e-13));
    CHECK(l.imag() == Approx(-0.498812351543942993).epsilon(1e-13));
    CHECK_THROWS_AS(lorentzian(1.0, 0.0), InvalidInput);
}

TEST_CASE("pair state") {
    auto rep = build_pair_state({complex{1, 0}, {0, 0}, {0, 0}, {0, 0}});
    CHECK(std::abs(rep.state.amp_zz) == 1.0);
    CHECK(std::abs(rep.state.amp_xx) == 0.0);

    rep = build_pair_state({complex{0.3, 0}, {0, 0}, {0, 0}, {0.3, 0}});
    CHECK(rep.state.amp_zz.real() == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(rep.state.amp_xx.real() == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(concurrence(rep.state) == 1.0);

    rep = build_pair_state({complex{0.8, 0}, {0, 0}, {0, 0}, {0.6, 0}});
    CHECK(rep.state.amp_zz.real() == Approx(0.8).epsilon(1e-15));
    CHECK(rep.state.amp_xx.real() == Approx(0.6).epsilon(1e-15));

    rep = build_pair_state({complex{1, 0}, {1, 0}, {0, 1}, {1, 0}});
    CHECK(rep.cross_fraction == Approx(0.5));
    CHECK_THROWS_AS(build_pair_state({complex{0, 0}, {1, 0}, {1, 0}, {0, 0}}), InvalidInput);
}

TEST_CASE("concurrence") {
    CHECK(concurrence({complex{1, 0}, {0, 0}}) == 0.0);
    const double h = 1.0 / std::sqrt(2.0);
    CHECK(concurrence({complex{h, 0}, {h, 0}}) == 1.0);
    CHECK(std::abs(concurrence({complex{0.8, 0}, {0.6, 0}}) - 0.96) <= 1e-12);
    // phases do not matter
    CHECK(concurrence({complex{0, 0.8}, {-0.6, 0}}) == Approx(0.96).epsilon(1e-14));
}

TEST_CASE("emission amplitudes follow the field") {
    PathwayTable t;
    const double t2 = coherence_time_from_linewidth(6e6);
    const auto at0 = emission_amplitudes(t, {0.0, 0.7e6}, t2);
    for (const auto& a : at0) CHECK(a == complex{1.0, 0.0});
    const auto at2 = emission_amplitudes(t, {2.0, 0.7e6}, t2);
    CHECK(std::abs(at2[1]) < 1.0);
    CHECK(at2[1] == std::conj(at2[2]));
    // symmetric table keeps the zz/xx state maximally entangled at any field
    CHECK(concurrence(build_pair_state(at2).state) == 1.0);
}
