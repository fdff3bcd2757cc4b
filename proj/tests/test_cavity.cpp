#include "doctest.h"
#include "tpl/cavity.hpp"
#include "tpl/error.hpp"

using namespace tpl;
using doctest::Approx;

TEST_CASE("finesse") {
    CHECK(finesse({2e-4, 4e-6}) == Approx(15400.0).epsilon(10.0 / 15400.0));
    CHECK(finesse({1.0, 0.0}) == Approx(constants::pi).epsilon(1e-15));
    // frozen: pi / 2.075e-4
    CHECK(finesse({2e-4, 7.5e-6}) == Approx(15140.2055594688830769).epsilon(1e-14));
    CHECK(finesse({2e-4, 7.5e-6}) == Approx(15140.0).epsilon(1e-4));
    CHECK_THROWS_AS(finesse({0.0, 0.0}), InvalidInput);
}

TEST_CASE("free spectral range") {
    CHECK(free_spectral_range(1.464e-2) == Approx(10.24e9).epsilon(1e-3));
    CHECK(free_spectral_range(constants::c / 2.0) == Approx(1.0).epsilon(1e-15));
    CHECK(free_spectral_range(0.05) == Approx(2997924580.0).epsilon(1e-15));
    CHECK_THROWS_AS(free_spectral_range(0.0), InvalidInput);
}

TEST_CASE("linewidth and decay rate") {
    const auto g = paper_geometry();
    const CavityLoss pin = paper_loss_with_pinholes();
    CHECK(finesse(pin) == Approx(15140.0).epsilon(1e-13));
    CHECK(mode_linewidth(g, pin) == Approx(680e3).epsilon(0.01));
    CHECK(mode_linewidth(g, pin) == Approx(676275.657614541149).epsilon(1e-13));
    CHECK(decay_rate(g, pin) == Approx(4249165.27552689758).epsilon(1e-13));
    // finesse 1: linewidth equals the FSR
    const CavityLoss unit{constants::pi - 0.5, 0.5};
    CHECK(mode_linewidth(g, unit) == Approx(free_spectral_range(g)).epsilon(1e-14));
}

TEST_CASE("subconfocal lengths") {
    const auto [s4, l4] = subconfocal_lengths(0.05, 4);
    CHECK(s4 == Approx(1.464e-2).epsilon(1e-3));
    CHECK(s4 == Approx(1.46446609406726238e-2).epsilon(1e-14));
    CHECK(l4 == Approx(0.1 - s4).epsilon(1e-14));
    const auto [s2, l2] = subconfocal_lengths(0.05, 2);
    CHECK(s2 == Approx(0.05).epsilon(1e-15));
    CHECK(l2 == Approx(0.05).epsilon(1e-15));
    const auto [s3, l3] = subconfocal_lengths(0.05, 3);
    CHECK(s3 == Approx(0.025).epsilon(1e-14));
    CHECK(l3 == Approx(0.075).epsilon(1e-14));
    CHECK_THROWS_AS(subconfocal_lengths(0.05, 1), InvalidInput);
    CHECK_THROWS_AS(subconfocal_lengths(-1.0, 4), InvalidInput);
}

TEST_CASE("cluster spacing") {
    CHECK(cluster_spacing(paper_geometry()) == Approx(2.56e9).epsilon(1e-3));
    CavityGeometry one = paper_geometry();
    one.degeneracy_order = 1;
    CHECK(cluster_spacing(one) == Approx(free_spectral_range(one)).epsilon(1e-15));
    CavityGeometry two{0.02, 0.05, 4, 770e-9};
    CHECK(cluster_spacing(two) == Approx(1873702862.5).epsilon(1e-14));
}

TEST_CASE("output power") {
    const auto g = paper_geometry();
    const auto l = paper_loss_with_pinholes();
    CHECK(photon_number_to_output_power(0.0, g, l) == 0.0);
    CHECK(photon_number_to_output_power(1.0, g, l) == Approx(1.05656356220033037e-12).epsilon(1e-12));
    // the on state gives microwatts; compared with the quoted 0.2 uW only in the notes
    const double p_on = photon_number_to_output_power(2.2e6, g, l);
    CHECK(p_on == Approx(2.32443983684072680e-6).epsilon(1e-12));
    MESSAGE("on-state output (both mirrors) " << p_on * 1e6 << " uW");
    CHECK_THROWS_AS(photon_number_to_output_power(-1.0, g, l), InvalidInput);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS((CavityGeometry{0.2, 0.05, 4, 770e-9}.validate()), InvalidInput);
    CHECK_THROWS_AS((CavityGeometry{0.01, 0.05, 1, 770e-9}.validate()), InvalidInput);
    CHECK_THROWS_AS((CavityLoss{0.0, 0.0}.validate()), InvalidInput);
    CHECK_THROWS_AS((CavityLoss{0.6, 0.5}.validate()), InvalidInput);
    CHECK_NOTHROW(paper_geometry().validate());
    CHECK_NOTHROW(paper_loss_bare().validate());
    const auto s = summarize(paper_geometry(), paper_loss_with_pinholes());
    CHECK(s.kappa_per_s == Approx(decay_rate(paper_geometry(), paper_loss_with_pinholes())));
    CHECK(s.cluster_spacing_hz == Approx(s.fsr_hz / 4.0));
}
