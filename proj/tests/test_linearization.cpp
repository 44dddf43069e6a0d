#include <catch2/catch_amalgamated.hpp>

#include "dcgrid/linearization.hpp"

#include "dcgrid/equilibrium.hpp"

#include "support.hpp"

#include <random>

using namespace dcgrid;
using Catch::Approx;
using testsupport::op1_params;
using testsupport::op2_params;

namespace {

/// Worst-case relative disagreement between two Jacobians.
double max_rel_err(const Mat& a, const Mat& b) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const double err = std::abs(a(r, c) - b(r, c)) / std::max(1.0, std::abs(a(r, c)));
            worst = std::max(worst, err);
        }
    return worst;
}

} // namespace

TEST_CASE("branch current self-damping entry matches the closed form",
          "[linearization][regression]") {
    const MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.4);
    const JacobianMatrix jac = analytic_jacobian(p, solve_equilibrium(p));

    // -R_B / L_pu with L_pu = 0.5 mH / 0.5625 ohm = 0.8889 ms.
    REQUIRE(jac.entries(0, 0) == Approx(-0.0177 / (0.5e-3 / 0.5625)));
    REQUIRE(jac.entries(0, 0) == Approx(-19.9125));
}

TEST_CASE("analytic and central-difference Jacobians agree at both dispatches",
          "[linearization][oracle]") {
    for (const MicrogridParams& p : {op1_params(), op2_params(20e-3, 1e-3, 0.2)}) {
        const Equilibrium eq = solve_equilibrium(p);
        const JacobianMatrix analytic = analytic_jacobian(p, eq);
        const JacobianMatrix numeric = numeric_jacobian(p, eq.state);
        REQUIRE(max_rel_err(analytic.entries, numeric.entries) < 1e-5);
    }
}

TEST_CASE("finite differences converge at second order", "[linearization][oracle]") {
    const MicrogridParams p = op1_params(20e-3, 1e-3, 0.2);
    const Equilibrium eq = solve_equilibrium(p);
    const Mat exact = analytic_jacobian(p, eq).entries;

    const double err_coarse = max_rel_err(exact, numeric_jacobian(p, eq.state, 2e-4).entries);
    const double err_fine = max_rel_err(exact, numeric_jacobian(p, eq.state, 1e-4).entries);
    const double ratio = err_coarse / err_fine;
    // Central differences: halving h shrinks the truncation error ~4x.
    REQUIRE(ratio > 2.5);
    REQUIRE(ratio < 6.0);
}

TEST_CASE("structural zero blocks hold exactly", "[linearization][structure]") {
    const MicrogridParams p = op1_params();
    const JacobianMatrix jac = analytic_jacobian(p, solve_equilibrium(p));
    const Mat& a = jac.entries;
    const auto n = static_cast<Eigen::Index>(jac.n);
    const auto ai = static_cast<Eigen::Index>(jac.alpha_offset());
    const auto ri = static_cast<Eigen::Index>(jac.alpha_ref_offset());
    const auto vi = static_cast<Eigen::Index>(jac.v_offset());

    // The modulation lag sees only alpha and its reference.
    REQUIRE(a.block(ai, 0, n, n).isZero(0.0));          // d f_alpha / d i
    REQUIRE(a.block(ai, vi, n, 1).isZero(0.0));         // d f_alpha / d v
    // The bus equation never sees the references directly.
    REQUIRE(a.block(vi, ri, 1, n).isZero(0.0));         // d f_v / d alpha_ref

    // Diagonal blocks of the branch and lag rows.
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            if (r == c) continue;
            REQUIRE(a(r, c) == 0.0);           // (i, i) coupling is per branch
            REQUIRE(a(r, n + c) == 0.0);       // (i, alpha)
            REQUIRE(a(r, ri + c) == 0.0);      // (i, alpha_ref): no path at all
            REQUIRE(a(ai + r, ai + c) == 0.0); // (alpha, alpha)
            REQUIRE(a(ai + r, ri + c) == 0.0); // (alpha, alpha_ref)
        }
    for (Eigen::Index j = 0; j < n; ++j) {
        REQUIRE(a(j, ri + j) == 0.0); // the reference reaches i only through alpha
        REQUIRE(a(ai + j, ai + j) == Approx(-1.0 / 0.9e-3));
        REQUIRE(a(ai + j, ri + j) == Approx(+1.0 / 0.9e-3));
    }
}

TEST_CASE("reference rows carry the full bus coupling by default",
          "[linearization][structure]") {
    const MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.4);
    const Equilibrium eq = solve_equilibrium(p);
    const JacobianMatrix jac = analytic_jacobian(p, eq);
    const Mat& a = jac.entries;
    const auto ri = static_cast<Eigen::Index>(jac.alpha_ref_offset());

    // Every reference derivative sees every branch current through the bus
    // equation, so the (alpha_ref, i) block is dense.
    REQUIRE(a(ri + 0, 1) != 0.0);
    REQUIRE(a(ri + 1, 0) != 0.0);

    // The (alpha_ref, alpha_ref) diagonal follows from the droop-scaled
    // current-slope term: k_p * D * i / (tau * alpha^2).
    const double i = eq.state.i_b(0);
    const double alpha = eq.state.alpha(0);
    const double expected = 2.0 * 0.4 * i / (0.9e-3 * alpha * alpha);
    REQUIRE(a(ri + 0, ri + 0) == Approx(expected));
    REQUIRE(a(ri + 0, ri + 1) == 0.0);

    // Central differences confirm the dense coupling is real, not an
    // artifact of the closed form.
    const Mat numeric = numeric_jacobian(p, eq.state).entries;
    REQUIRE(numeric(ri + 0, 1) == Approx(a(ri + 0, 1)).epsilon(1e-4));
    REQUIRE(numeric(ri + 0, ri + 0) == Approx(expected).epsilon(1e-4));
}

TEST_CASE("the simplified block structure zeroes the cross coupling",
          "[linearization][structure]") {
    const MicrogridParams p = op1_params(50e-3, 0.5e-3, 0.4);
    const Equilibrium eq = solve_equilibrium(p);
    const JacobianMatrix jac = analytic_jacobian(p, eq, /*paper_structure=*/true);
    const Mat& a = jac.entries;
    const auto n = static_cast<Eigen::Index>(jac.n);
    const auto ri = static_cast<Eigen::Index>(jac.alpha_ref_offset());

    REQUIRE(a.block(ri, ri, n, n).isZero(0.0)); // whole reference block
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            if (r == c) continue;
            REQUIRE(a(ri + r, c) == 0.0);     // (alpha_ref, i) off-diagonal
            REQUIRE(a(ri + r, n + c) == 0.0); // (alpha_ref, alpha) off-diagonal
        }

    // Rows outside the reference block are untouched by the flag.
    const Mat full = analytic_jacobian(p, eq).entries;
    REQUIRE((a.topRows(2 * n) - full.topRows(2 * n)).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((a.bottomRows(1) - full.bottomRows(1)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("swapping two branches permutes the Jacobian", "[linearization][property]") {
    MicrogridParams p = op1_params(20e-3, 0.5e-3, 0.2);
    p.ess[1].l_b_henry = 2e-3; // make the branches distinguishable
    MicrogridParams swapped = p;
    std::swap(swapped.ess[0], swapped.ess[1]);

    const Mat a = analytic_jacobian(p, solve_equilibrium(p)).entries;
    const Mat b = analytic_jacobian(swapped, solve_equilibrium(swapped)).entries;

    // Permutation that swaps branch 1 and 2 within each block.
    Eigen::PermutationMatrix<7> perm;
    perm.setIdentity();
    perm.applyTranspositionOnTheRight(0, 1);
    perm.applyTranspositionOnTheRight(2, 3);
    perm.applyTranspositionOnTheRight(4, 5);
    const Mat permuted = perm * a * perm.transpose();
    REQUIRE((permuted - b).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("linearization refuses states away from equilibrium",
          "[linearization][errors]") {
    const MicrogridParams p = op1_params();
    Equilibrium off = solve_equilibrium(p);
    off.state.v() *= 1.01;
    off.residual_norm = 1.0; // honest report of the perturbed residual
    REQUIRE_THROWS_AS(analytic_jacobian(p, off), NotAtEquilibrium);
}

TEST_CASE("numeric Jacobian agrees with the closed form away from equilibrium",
          "[linearization][oracle][property]") {
    // The analytic partials are valid at any admissible state; verify on
    // random states by comparing against a fresh equilibrium gate bypass.
    const MicrogridParams p = op1_params();
    std::mt19937 rng(2026);
    std::uniform_real_distribution<double> cur(0.1, 1.0);
    std::uniform_real_distribution<double> mod(0.9, 1.3);
    std::uniform_real_distribution<double> bus(0.8, 1.1);

    for (int trial = 0; trial < 5; ++trial) {
        StateVector x = StateVector::zero(2);
        for (std::size_t j = 0; j < 2; ++j) {
            x.i_b(j) = cur(rng);
            x.alpha(j) = mod(rng);
            x.alpha_ref(j) = mod(rng);
        }
        x.v() = bus(rng);

        const JacobianMatrix numeric = numeric_jacobian(p, x);
        // Columns of the reference states are exactly the lag rows: the only
        // nonzero analytic entries are +-1/tau and the droop-slope term.
        const auto ri = static_cast<Eigen::Index>(numeric.alpha_ref_offset());
        REQUIRE(numeric.entries(2, ri + 0) == Approx(1.0 / 0.9e-3).epsilon(1e-7));
        REQUIRE(numeric.entries(3, ri + 1) == Approx(1.0 / 0.9e-3).epsilon(1e-7));
        const double slope = 2.0 * 0.4 * x.i_b(0) / (0.9e-3 * x.alpha(0) * x.alpha(0));
        REQUIRE(numeric.entries(ri + 0, ri + 0) == Approx(slope).epsilon(1e-5));
    }
}
