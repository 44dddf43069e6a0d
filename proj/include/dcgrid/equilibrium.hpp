#pragma once

/// Steady-state solver: reduces f(x) = 0 on the single-bus topology to two
/// closed-form quadratics (bus voltage, branch current) plus a residual
/// check. A Newton polisher exists as a fallback but the closed form is the
/// production path.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dcgrid/errors.hpp"
#include "dcgrid/model.hpp"

namespace dcgrid {

/// A solved operating point.
struct Equilibrium {
    StateVector state;          ///< x with f(x) ~ 0
    double residual_norm = 0.0; ///< max-abs of eval_rhs at state
    std::vector<double> i_dc;   ///< per-ESS bus-side current i_B/alpha, p.u.
};

namespace detail {

/// Central-difference Jacobian of the rhs at x. Local to the Newton polisher
/// so this header stays independent of the linearization module.
inline Mat fd_jacobian(const PerUnitParams& p, const Vec& x, double h_rel) {
    const Eigen::Index dim = x.size();
    Mat jac(dim, dim);
    Vec xp = x;
    Vec fp(dim);
    Vec fm(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const double h = h_rel * std::max(std::abs(x[k]), 1.0);
        xp[k] = x[k] + h;
        if (!try_eval_rhs(p, xp, fp)) throw SingularState("fd_jacobian: stepped outside the domain");
        xp[k] = x[k] - h;
        if (!try_eval_rhs(p, xp, fm)) throw SingularState("fd_jacobian: stepped outside the domain");
        xp[k] = x[k];
        jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

/// Newton iteration on the full rhs; returns the polished state.
inline Vec newton_polish(const PerUnitParams& p, Vec x, double tol, int max_iter) {
    Vec f(x.size());
    for (int it = 0; it < max_iter; ++it) {
        if (!try_eval_rhs(p, x, f)) throw SingularState("newton_polish: iterate left the domain");
        if (f.lpNorm<Eigen::Infinity>() < tol) return x;
        const Mat jac = fd_jacobian(p, x, 1e-6);
        x -= jac.partialPivLu().solve(f);
    }
    if (!try_eval_rhs(p, x, f) || !(f.lpNorm<Eigen::Infinity>() < tol))
        throw ConvergenceFailure("newton_polish: residual did not reach tolerance");
    return x;
}

} // namespace detail

/// Computes the equilibrium of the grid.
///
/// Procedure: (1) P_net = P_L - sum(P_FC); (2) substitute the droop law
/// i_dc = (v_0 - v)/D + i_0 into the bus balance n*i_dc*v = P_net, giving
/// v^2 - (v_0 + D*i_0)*v + D*P_net/n = 0, and take the root closest to v_0;
/// (3) per branch solve R_B*i^2 - e_B*i + v*i_dc = 0 and take the
/// low-magnitude root (the high root is a nonphysical high-loss branch);
/// (4) alpha = v/(e_B - R_B*i), alpha_ref = alpha; (5) verify the residual.
///
/// D = 0 is handled directly: the PI integral action pins v = v_0 and the
/// bus balance fixes the (symmetric) branch currents. Heterogeneous branches
/// share one bus-side current because the droop law is common to all.
[[nodiscard]] inline Equilibrium solve_equilibrium(const MicrogridParams& params) {
    const PerUnitParams p = to_per_unit(params);
    const ControlParams& c = p.control;
    const double p_net = p.p_load - p.p_fc_total;
    const auto n = static_cast<double>(p.n);

    double v = 0.0;
    if (c.d > 0.0) {
        // v^2 - (v_0 + D i_0) v + D P_net / n = 0
        const double b = c.v_0 + c.d * c.i_0;
        const double disc = b * b - 4.0 * c.d * p_net / n;
        if (disc < 0.0)
            throw NoPhysicalRoot("solve_equilibrium: bus-voltage quadratic has no real root");
        const double root = std::sqrt(disc);
        const double v_hi = 0.5 * (b + root);
        const double v_lo = 0.5 * (b - root);
        v = (std::abs(v_hi - c.v_0) <= std::abs(v_lo - c.v_0)) ? v_hi : v_lo;
        if (!(v > 0.0)) {
            v = std::max(v_hi, v_lo);
            if (!(v > 0.0))
                throw NoPhysicalRoot("solve_equilibrium: no positive bus-voltage root");
        }
    } else {
        // Degenerate droop: integral action forces v = v_0 exactly. The
        // per-branch split is then a manifold; we return its symmetric point.
        v = c.v_0;
    }

    const double i_dc = p_net / (n * v); // bus balance, exact by construction

    StateVector x = StateVector::zero(p.n);
    for (std::size_t j = 0; j < p.n; ++j) {
        const double e = p.e_b[j];
        const double r = p.r_b[j];
        double i = 0.0;
        if (r > 0.0) {
            const double db = e * e - 4.0 * r * v * i_dc;
            if (db < 0.0)
                throw BatteryOverload("solve_equilibrium: branch quadratic has no real root");
            // Low-magnitude root in the cancellation-safe form.
            i = 2.0 * v * i_dc / (e + std::sqrt(db));
        } else {
            i = v * i_dc / e;
        }
        const double denom = e - r * i;
        if (!(denom > 0.0))
            throw BatteryOverload("solve_equilibrium: branch voltage collapsed");
        const double alpha = v / denom;
        x.i_b(j) = i;
        x.alpha(j) = alpha;
        x.alpha_ref(j) = alpha;
    }
    x.v() = v;

    Vec f(x.data.size());
    if (!try_eval_rhs(p, x.data, f))
        throw SingularState("solve_equilibrium: assembled state invalid");
    double residual = f.lpNorm<Eigen::Infinity>();
    if (residual > 1e-12) {
        // Fallback for parameterizations the closed form does not nail.
        x.data = detail::newton_polish(p, x.data, 1e-12, 50);
        try_eval_rhs(p, x.data, f);
        residual = f.lpNorm<Eigen::Infinity>();
    }
    if (!(residual < 1e-9))
        throw ConvergenceFailure("solve_equilibrium: residual above 1e-9 after polish");

    Equilibrium eq;
    eq.state = std::move(x);
    eq.residual_norm = residual;
    eq.i_dc.assign(p.n, 0.0);
    for (std::size_t j = 0; j < p.n; ++j)
        eq.i_dc[j] = eq.state.i_b(j) / eq.state.alpha(j);
    return eq;
}

} // namespace dcgrid
