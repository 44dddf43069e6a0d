#pragma once

/// Generic explicit ODE integration: adaptive Dormand-Prince 5(4) with the
/// FSAL optimization, embedded error control, cubic-Hermite dense output at
/// a fixed cadence, and divergence truncation; plus a fixed-step RK4 used by
/// order-verification tests.
///
/// The right-hand side is any callable `bool rhs(double t, const Vec& x,
/// Vec& dx)`. Returning false marks the state as outside the model's domain
/// (for the grid: alpha or v not positive); the stepper treats that like an
/// unacceptably large error and shrinks the step, so trajectories that run
/// into the domain boundary end as truncated-divergent rather than crashing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dcgrid/model.hpp"

namespace dcgrid {

/// Tolerances and limits for the adaptive integrator.
struct IntegratorControls {
    double rel_tol = 1e-7;   ///< relative tolerance
    double abs_tol = 1e-9;   ///< absolute tolerance
    double max_step = 1e-4;  ///< hard step-size cap, seconds
    double sample_dt = 1e-4; ///< dense-output cadence, seconds
    double blowup_abs = 1e6; ///< max-abs state bound; beyond it the run is divergent
};

/// Sampled solution of one integration run.
struct OdeSolution {
    std::vector<double> times;
    std::vector<Vec> states;
    bool diverged = false;           ///< truncated by blowup or domain violation
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    double max_step_used = 0.0;
};

namespace detail {

/// Cubic Hermite interpolant on [t, t+h] given endpoint values/slopes.
inline Vec hermite(double theta, double h, const Vec& y0, const Vec& f0, const Vec& y1,
                   const Vec& f1) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + theta;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

} // namespace detail

/// Adaptive Dormand-Prince 5(4). Samples are emitted at t0, every
/// sample_dt, and t_end; a divergent run is truncated at its last accepted
/// step and flagged, never thrown.
template <class Rhs>
[[nodiscard]] OdeSolution integrate_dopri5(Rhs&& rhs, const Vec& x0, double t0, double t_end,
                                           const IntegratorControls& ctl = {}) {
    // Butcher tableau (Dormand & Prince 1980), 5th-order propagation weights
    // in the last stage row, embedded 4th-order difference in `ec`.
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    OdeSolution sol;
    const Eigen::Index dim = x0.size();
    Vec y = x0;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    Vec ytmp(dim), y1(dim), err(dim);

    double t = t0;
    sol.times.push_back(t);
    sol.states.push_back(y);
    double next_sample = t0 + ctl.sample_dt;

    if (!rhs(t, y, k1)) {
        sol.diverged = true;
        return sol;
    }

    // Initial step: crude scaled-norm heuristic, clamped by the cap.
    double h = ctl.max_step;
    {
        const double ny = y.lpNorm<Eigen::Infinity>();
        const double nf = k1.lpNorm<Eigen::Infinity>();
        if (nf > 1e-12) h = std::min(h, 0.01 * (1.0 + ny) / nf);
        h = std::min(h, t_end - t0);
        h = std::max(h, 1e-14);
    }

    const double h_floor = 1e-14;
    while (t < t_end) {
        h = std::min(h, t_end - t);
        bool stage_ok =
            rhs(t + c2 * h, ytmp = y + h * (a21 * k1), k2) &&
            rhs(t + c3 * h, ytmp = y + h * (a31 * k1 + a32 * k2), k3) &&
            rhs(t + c4 * h, ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4) &&
            rhs(t + c5 * h, ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5) &&
            rhs(t + h, ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
        double err_norm = 2.0; // forces rejection unless overwritten
        if (stage_ok) {
            y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            stage_ok = rhs(t + h, y1, k7) && y1.allFinite(); // FSAL slope doubles as validity probe
            if (stage_ok) {
                err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                double acc = 0.0;
                for (Eigen::Index i = 0; i < dim; ++i) {
                    const double sc =
                        ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
                    const double q = err[i] / sc;
                    acc += q * q;
                }
                err_norm = std::sqrt(acc / static_cast<double>(dim));
                if (!std::isfinite(err_norm)) err_norm = 2.0;
            }
        }

        if (stage_ok && err_norm <= 1.0) {
            // Dense samples strictly inside (t, t+h], then advance.
            while (next_sample <= t + h + 1e-15 && next_sample < t_end - 1e-15) {
                const double theta = (next_sample - t) / h;
                sol.times.push_back(next_sample);
                sol.states.push_back(detail::hermite(theta, h, y, k1, y1, k7));
                next_sample += ctl.sample_dt;
            }
            t += h;
            y.swap(y1);
            k1.swap(k7); // FSAL
            ++sol.accepted_steps;
            sol.max_step_used = std::max(sol.max_step_used, h);

            if (y.lpNorm<Eigen::Infinity>() > ctl.blowup_abs) {
                sol.times.push_back(t);
                sol.states.push_back(y);
                sol.diverged = true;
                return sol;
            }
            if (t >= t_end) {
                sol.times.push_back(t);
                sol.states.push_back(y);
                return sol;
            }
            const double grow = 0.9 * std::pow(std::max(err_norm, 1e-10), -0.2);
            h = std::min(ctl.max_step, h * std::clamp(grow, 0.2, 5.0));
        } else {
            ++sol.rejected_steps;
            const double shrink =
                stage_ok ? std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.5) : 0.5;
            h *= shrink;
            if (h < h_floor) {
                // Step size collapsed: the trajectory hit the domain
                // boundary (alpha/v -> 0) or a genuine singularity.
                sol.diverged = true;
                return sol;
            }
        }
    }
    return sol;
}

/// Classical fixed-step RK4 sampling every step. Domain violations truncate
/// the run just like the adaptive path.
template <class Rhs>
[[nodiscard]] OdeSolution integrate_rk4(Rhs&& rhs, const Vec& x0, double t0, double t_end,
                                        double h, double blowup_abs = 1e6) {
    OdeSolution sol;
    const Eigen::Index dim = x0.size();
    Vec y = x0;
    Vec k1(dim), k2(dim), k3(dim), k4(dim), ytmp(dim);
    double t = t0;
    sol.times.push_back(t);
    sol.states.push_back(y);
    while (t < t_end - 1e-15) {
        const double step = std::min(h, t_end - t);
        const bool ok = rhs(t, y, k1) &&
                        rhs(t + 0.5 * step, ytmp = y + (0.5 * step) * k1, k2) &&
                        rhs(t + 0.5 * step, ytmp = y + (0.5 * step) * k2, k3) &&
                        rhs(t + step, ytmp = y + step * k3, k4);
        if (!ok) {
            sol.diverged = true;
            return sol;
        }
        y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
        ++sol.accepted_steps;
        sol.max_step_used = std::max(sol.max_step_used, step);
        sol.times.push_back(t);
        sol.states.push_back(y);
        if (!y.allFinite() || y.lpNorm<Eigen::Infinity>() > blowup_abs) {
            sol.diverged = true;
            return sol;
        }
    }
    return sol;
}

} // namespace dcgrid
