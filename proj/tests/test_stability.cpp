#include <catch2/catch_amalgamated.hpp>

#include "dcgrid/stability.hpp"

#include "dcgrid/equilibrium.hpp"
#include "dcgrid/linearization.hpp"

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

using namespace dcgrid;
using Catch::Approx;
using testsupport::op1_params;

TEST_CASE("diagonal matrices report their diagonal", "[stability][eigen]") {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = -1.0;
    a(1, 1) = -2.0;
    const auto eigs = eigenvalues(a);
    REQUIRE(eigs.size() == 2);
    REQUIRE(eigs[0].real() == Approx(-1.0));
    REQUIRE(eigs[1].real() == Approx(-2.0));
    REQUIRE(eigs[0].imag() == Approx(0.0).margin(1e-14));
}

TEST_CASE("the rotation generator has a purely imaginary pair", "[stability][eigen]") {
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    const auto eigs = eigenvalues(a);
    REQUIRE(eigs[0].real() == Approx(0.0).margin(1e-14));
    REQUIRE(eigs[0].imag() == Approx(1.0));
    REQUIRE(eigs[1].imag() == Approx(-1.0));

    const StabilityReport report = report_from_spectrum(eigs);
    REQUIRE_FALSE(report.ssasc);
    REQUIRE(report.marginal); // sitting on the imaginary axis
}

TEST_CASE("companion matrix recovers the quartic roots of unity",
          "[stability][eigen][regression]") {
    // Companion form of p(x) = x^4 - 1: roots 1, -1, i, -i.
    Mat a = Mat::Zero(4, 4);
    a(0, 3) = 1.0;
    a(1, 0) = 1.0;
    a(2, 1) = 1.0;
    a(3, 2) = 1.0;
    const auto eigs = eigenvalues(a);
    REQUIRE(eigs.size() == 4);

    // Sorted (Re desc, Im desc): 1, +i, -i, -1.
    REQUIRE(std::abs(eigs[0] - std::complex<double>(1.0, 0.0)) < 1e-10);
    REQUIRE(std::abs(eigs[1] - std::complex<double>(0.0, 1.0)) < 1e-10);
    REQUIRE(std::abs(eigs[2] - std::complex<double>(0.0, -1.0)) < 1e-10);
    REQUIRE(std::abs(eigs[3] - std::complex<double>(-1.0, 0.0)) < 1e-10);
}

TEST_CASE("spectra satisfy the trace and conjugate-pair identities",
          "[stability][property]") {
    for (double c : {2e-3, 10e-3, 50e-3}) {
        const MicrogridParams p = op1_params(c, 0.5e-3, 0.4);
        const Mat a = analytic_jacobian(p, solve_equilibrium(p)).entries;
        const auto eigs = eigenvalues(a);
        REQUIRE(eigs.size() == 7);

        double re_sum = 0.0;
        for (const auto& ev : eigs) re_sum += ev.real();
        REQUIRE(re_sum == Approx(a.trace()).epsilon(1e-8));

        for (const auto& ev : eigs) {
            if (ev.imag() == 0.0) continue;
            const auto conj = std::conj(ev);
            const bool paired =
                std::any_of(eigs.begin(), eigs.end(), [&](const std::complex<double>& other) {
                    return std::abs(other - conj) <= 1e-10 * std::max(1.0, std::abs(conj));
                });
            REQUIRE(paired);
        }
    }
}

TEST_CASE("eigenvalues come out sorted by real then imaginary part",
          "[stability][property]") {
    const MicrogridParams p = op1_params();
    const auto eigs = eigenvalues(analytic_jacobian(p, solve_equilibrium(p)).entries);
    for (std::size_t k = 1; k < eigs.size(); ++k) {
        const bool ordered = eigs[k - 1].real() > eigs[k].real() ||
                             (eigs[k - 1].real() == eigs[k].real() &&
                              eigs[k - 1].imag() >= eigs[k].imag());
        REQUIRE(ordered);
    }
}

TEST_CASE("similar matrices share a spectrum", "[stability][property]") {
    const MicrogridParams p = op1_params(20e-3, 1e-3, 0.2);
    const Mat a = analytic_jacobian(p, solve_equilibrium(p)).entries;

    // A fixed, well-conditioned similarity transform.
    Mat t = Mat::Identity(7, 7);
    t(0, 3) = 0.25;
    t(2, 5) = -0.5;
    t(6, 1) = 0.125;
    const Mat b = t * a * t.inverse();

    const auto ea = eigenvalues(a);
    const auto eb = eigenvalues(b);
    for (std::size_t k = 0; k < ea.size(); ++k)
        REQUIRE(std::abs(ea[k] - eb[k]) < 1e-9 * std::max(1.0, std::abs(ea[k])));
}

TEST_CASE("spectral abscissa moves continuously with capacitance", "[stability][property]") {
    const double r_base = assess(op1_params(50e-3, 0.5e-3, 0.4)).r_max;
    const double r_bumped = assess(op1_params(50.5e-3, 0.5e-3, 0.4)).r_max;
    REQUIRE(std::abs(r_bumped - r_base) < 0.05); // 1% in C cannot jump the abscissa
}

TEST_CASE("assessment pipeline reproduces the reference verdicts",
          "[stability][regression]") {
    SECTION("stable triple at the working delay") {
        const StabilityReport report = assess(op1_params(50e-3, 0.5e-3, 0.4));
        REQUIRE(report.ssasc);
        REQUIRE(report.r_max == Approx(-0.29677926710992297).margin(1e-6));
        REQUIRE(report.margin == Approx(-report.r_max));
        REQUIRE_FALSE(report.marginal);
    }
    SECTION("starved bus capacitance destabilizes") {
        const StabilityReport report = assess(op1_params(1e-3, 0.5e-3, 0.4));
        REQUIRE_FALSE(report.ssasc);
        REQUIRE(report.r_max > 0.0);
        REQUIRE(report.margin == 0.0);
    }
    SECTION("infeasible dispatch propagates the equilibrium error") {
        MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.05);
        p.p_load = 13.0;
        REQUIRE_THROWS_AS(assess(p), NoPhysicalRoot);
    }
}

TEST_CASE("verdict is strict: the open left half-plane only", "[stability]") {
    // A matrix with r_max exactly zero must not count as stable.
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 0.0;
    a(1, 1) = -1.0;
    const StabilityReport report = report_from_spectrum(eigenvalues(a));
    REQUIRE_FALSE(report.ssasc);
    REQUIRE(report.r_max == 0.0);
    REQUIRE(report.marginal);
}
