#include <catch2/catch_amalgamated.hpp>

#include "dcgrid/equilibrium.hpp"

#include "support.hpp"

using namespace dcgrid;
using Catch::Approx;
using testsupport::op1_params;
using testsupport::op2_params;

TEST_CASE("heavy dispatch equilibrium matches the reference set point",
          "[equilibrium][regression]") {
    const Equilibrium eq = solve_equilibrium(op1_params());

    // With the bus-side current exactly at the droop set point, the droop
    // holds the bus at v0 for any gain.
    REQUIRE(eq.state.v() == Approx(1.0).margin(1e-12));
    for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(eq.state.i_b(j) == Approx(0.54685408463297835).margin(1e-12));
        REQUIRE(eq.state.alpha(j) == Approx(1.0937081692659567).margin(1e-12));
        REQUIRE(eq.state.alpha_ref(j) == eq.state.alpha(j));
        REQUIRE(eq.i_dc[j] == Approx(0.5).margin(1e-12));
    }
    REQUIRE(eq.residual_norm < 1e-9);
}

TEST_CASE("light dispatch equilibrium is the self-consistent point",
          "[equilibrium][regression]") {
    const Equilibrium eq = solve_equilibrium(op2_params());

    REQUIRE(eq.state.v() == Approx(1.0).margin(1e-12));
    for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(eq.state.i_b(j) == Approx(0.26874693151185841).margin(1e-10));
        REQUIRE(eq.state.alpha(j) == Approx(1.0749877260474334).margin(1e-10));
        REQUIRE(eq.i_dc[j] == Approx(0.25).margin(1e-10));
    }
}

TEST_CASE("balanced injection with zero set point idles the batteries",
          "[equilibrium]") {
    MicrogridParams p = op1_params();
    p.p_load = 1.95; // exactly the fuel cell total
    p.control.i_0 = 0.0;
    const Equilibrium eq = solve_equilibrium(p);

    REQUIRE(eq.state.v() == Approx(1.0).margin(1e-12));
    for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(eq.state.i_b(j) == Approx(0.0).margin(1e-12));
        REQUIRE(eq.state.alpha(j) == Approx(1.0 / 0.924).margin(1e-12));
    }
}

TEST_CASE("zero droop gain pins the bus to the reference voltage", "[equilibrium]") {
    MicrogridParams p = op1_params();
    p.control.d = 0.0;
    p.control.i_0 = 0.0; // irrelevant without droop
    const Equilibrium eq = solve_equilibrium(p);

    // The PI integral action forces v = v0 regardless of loading.
    REQUIRE(eq.state.v() == Approx(1.0).margin(1e-12));
    REQUIRE(eq.i_dc[0] == Approx(0.5).margin(1e-12)); // P_net / (n v)
}

TEST_CASE("equilibrium satisfies the droop law and branch consistency",
          "[equilibrium][property]") {
    // A loading that pushes the bus off v0: i_dc != i0.
    MicrogridParams p = op1_params();
    p.p_load = 3.5;
    p.control.d = 0.2;
    const Equilibrium eq = solve_equilibrium(p);
    const double v = eq.state.v();

    for (std::size_t j = 0; j < 2; ++j) {
        const double i = eq.state.i_b(j);
        const double a = eq.state.alpha(j);
        // Bus-side current is the branch current through the modulation ratio.
        REQUIRE(eq.i_dc[j] == Approx(i / a).margin(1e-12));
        // Branch voltage balance e_B = R_B i + v / alpha.
        REQUIRE(0.924 == Approx(0.0177 * i + v / a).margin(1e-12));
        // Droop law v = v0 - D (i_dc - i0).
        REQUIRE(v == Approx(1.0 - 0.2 * (eq.i_dc[j] - 0.5)).margin(1e-12));
    }
    REQUIRE(v < 1.0); // heavier than the set point, so the bus sags

    // The returned state is a fixed point of the dynamics.
    const StateVector rhs = eval_rhs(p, eq.state);
    REQUIRE(rhs.data.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("equilibrium residual meets the contract on varied dispatches",
          "[equilibrium][property]") {
    for (double d : {0.05, 0.1, 0.2, 0.5}) {
        for (double p_load : {1.0, 2.0, 2.95, 3.4}) {
            MicrogridParams p = op1_params(20e-3, 1e-3, d);
            p.p_load = p_load;
            const Equilibrium eq = solve_equilibrium(p);
            REQUIRE(eq.residual_norm < 1e-9);
        }
    }
}

TEST_CASE("overloaded bus has no physical equilibrium", "[equilibrium][errors]") {
    MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.05);
    p.p_load = 13.0; // beyond what the droop can carry at this gain
    REQUIRE_THROWS_AS(solve_equilibrium(p), NoPhysicalRoot);
}

TEST_CASE("excess branch resistance trips the battery feasibility check",
          "[equilibrium][errors]") {
    MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.1);
    p.ess[0].r_b = 0.3;
    p.ess[1].r_b = 0.3;
    p.control.i_0 = 0.0;
    p.p_load = 3.95; // branch quadratic discriminant goes negative
    REQUIRE_THROWS_AS(solve_equilibrium(p), BatteryOverload);
}

TEST_CASE("heterogeneous branch resistances split the current unevenly",
          "[equilibrium]") {
    MicrogridParams p = op1_params();
    p.ess[0].r_b = 0.0177;
    p.ess[1].r_b = 0.05;
    const Equilibrium eq = solve_equilibrium(p);

    // Same bus-side current is demanded of each branch (identical droop),
    // so the lossier branch needs a larger modulation index.
    REQUIRE(eq.i_dc[0] == Approx(eq.i_dc[1]).margin(1e-12));
    REQUIRE(eq.state.alpha(1) > eq.state.alpha(0));
    REQUIRE(eq.residual_norm < 1e-9);
}
