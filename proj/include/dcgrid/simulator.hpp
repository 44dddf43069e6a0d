#pragma once

/// Nonlinear time-domain simulation of the grid and trajectory-based
/// stability classification, used to cross-check the eigenvalue verdicts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dcgrid/equilibrium.hpp"
#include "dcgrid/integrate.hpp"
#include "dcgrid/model.hpp"

namespace dcgrid {

/// Time-stamped state samples from one nonlinear run.
struct Trajectory {
    std::vector<double> times;  ///< seconds, strictly increasing
    std::vector<Vec> states;    ///< aligned with times, layout [i|alpha|alpha_ref|v]
    MicrogridParams params;     ///< parameters the run used
    bool diverged = false;      ///< truncated by blowup or alpha/v crossing zero
};

enum class Classification { AsymptoticallyStable, Unstable, Inconclusive };

[[nodiscard]] inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::AsymptoticallyStable: return "AsymptoticallyStable";
        case Classification::Unstable: return "Unstable";
        case Classification::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

/// Verdict of classify(): deterministic thresholds on the trajectory.
struct SimVerdict {
    Classification classification = Classification::Inconclusive;
    double final_deviation = 0.0; ///< max-abs of x(T) - x_bar, p.u.
    double peak_deviation = 0.0;  ///< max over the whole horizon
};

/// Simulation tolerances; the step cap is applied as min(tau/5, max_step)
/// so the converter lag state is always resolved — this deliberately makes
/// tiny-tau runs expensive rather than spuriously smooth.
struct SimSettings {
    double rel_tol = 1e-7;
    double abs_tol = 1e-9;
    double max_step = 1e-4;  ///< seconds, before the tau/5 cap
    double sample_dt = 1e-4; ///< output cadence, seconds
    double blowup_abs = 1e6; ///< p.u., divergence threshold
};

namespace detail {

inline IntegratorControls to_controls(const SimSettings& s, double tau) {
    IntegratorControls ctl;
    ctl.rel_tol = s.rel_tol;
    ctl.abs_tol = s.abs_tol;
    ctl.max_step = std::min(s.max_step, tau / 5.0);
    ctl.sample_dt = s.sample_dt;
    ctl.blowup_abs = s.blowup_abs;
    return ctl;
}

/// Domain-aware rhs adapter for the integrator.
struct GridRhs {
    const PerUnitParams* p;
    bool operator()(double, const Vec& x, Vec& dx) const { return try_eval_rhs(*p, x, dx); }
};

} // namespace detail

/// Integrates the grid ODE from x0 for t_end seconds. A state blowup
/// (|state| > blowup_abs) or alpha/v crossing zero returns a truncated
/// trajectory flagged divergent, not an error.
[[nodiscard]] inline Trajectory simulate(const MicrogridParams& params, const StateVector& x0,
                                         double t_end, const SimSettings& settings = {}) {
    if (!(t_end > 0.0)) throw std::invalid_argument("simulate: t_end must be > 0");
    if (x0.data.size() != static_cast<Eigen::Index>(params.state_dim()))
        throw std::invalid_argument("simulate: state dimension mismatch");
    if (!x0.physical())
        throw SingularState("simulate: initial state must have alpha > 0 and v > 0");

    const PerUnitParams p = to_per_unit(params);
    const detail::GridRhs rhs{&p};
    OdeSolution sol =
        integrate_dopri5(rhs, x0.data, 0.0, t_end, detail::to_controls(settings, p.control.tau));

    Trajectory traj;
    traj.times = std::move(sol.times);
    traj.states = std::move(sol.states);
    traj.params = params;
    traj.diverged = sol.diverged;
    return traj;
}

/// Applies the classification thresholds to an already-computed trajectory:
///   AsymptoticallyStable  final deviation < 1e-3 x initial deviation
///   Unstable              blowup truncation or final > 10 x initial
///   Inconclusive          anything in between
/// `ref` is the equilibrium the deviations are measured against.
[[nodiscard]] inline SimVerdict classify_trajectory(const Trajectory& traj, const Vec& ref,
                                                    double initial_dev) {
    SimVerdict verdict;
    double peak = 0.0;
    for (const Vec& s : traj.states) peak = std::max(peak, (s - ref).lpNorm<Eigen::Infinity>());
    verdict.peak_deviation = peak;
    verdict.final_deviation = (traj.states.back() - ref).lpNorm<Eigen::Infinity>();

    if (traj.diverged || verdict.final_deviation > 10.0 * initial_dev)
        verdict.classification = Classification::Unstable;
    else if (verdict.final_deviation < 1e-3 * initial_dev)
        verdict.classification = Classification::AsymptoticallyStable;
    else
        verdict.classification = Classification::Inconclusive;
    return verdict;
}

/// Perturbs the equilibrium (default: v scaled by 1 + 1e-2, everything else
/// at the equilibrium), simulates to t_end, and classifies with the
/// classify_trajectory thresholds. Propagates equilibrium errors.
[[nodiscard]] inline SimVerdict classify(const MicrogridParams& params,
                                         double perturbation = 1e-2, double t_end = 2.0,
                                         const SimSettings& settings = {}) {
    const Equilibrium eq = solve_equilibrium(params);
    StateVector x0 = eq.state;
    x0.v() *= 1.0 + perturbation;

    const Vec& ref = eq.state.data;
    const double initial_dev = (x0.data - ref).lpNorm<Eigen::Infinity>();
    return classify_trajectory(simulate(params, x0, t_end, settings), ref, initial_dev);
}

/// Load step: starts at the pre-step equilibrium, switches P_L by delta_p at
/// t_step. Both the pre- and post-step equilibria must exist; the post-step
/// check runs before any integration so an infeasible step fails fast with
/// NoPhysicalRoot/BatteryOverload.
[[nodiscard]] inline Trajectory step_load(const MicrogridParams& params, double delta_p,
                                          double t_step, double t_end,
                                          const SimSettings& settings = {}) {
    if (!(t_step > 0.0) || !(t_end > t_step))
        throw std::invalid_argument("step_load: need 0 < t_step < t_end");
    MicrogridParams post = params;
    post.p_load += delta_p;
    const Equilibrium pre_eq = solve_equilibrium(params);
    (void)solve_equilibrium(post); // feasibility gate for the post-step grid

    Trajectory first = simulate(params, pre_eq.state, t_step, settings);
    if (first.diverged) {
        first.params = params;
        return first;
    }
    StateVector mid(first.states.back(), params.n());
    Trajectory second = simulate(post, mid, t_end - t_step, settings);

    Trajectory out;
    out.params = post;
    out.diverged = second.diverged;
    out.times = std::move(first.times);
    out.states = std::move(first.states);
    const double t_off = out.times.back();
    for (std::size_t k = 1; k < second.times.size(); ++k) { // skip duplicate switch sample
        out.times.push_back(t_off + second.times[k]);
        out.states.push_back(std::move(second.states[k]));
    }
    return out;
}

/// CSV export: header t,i_B_1..n,alpha_1..n,alpha_ref_1..n,v at full double
/// precision.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const std::size_t n = traj.params.n();
    os << "t";
    for (std::size_t j = 1; j <= n; ++j) os << ",i_B_" << j;
    for (std::size_t j = 1; j <= n; ++j) os << ",alpha_" << j;
    for (std::size_t j = 1; j <= n; ++j) os << ",alpha_ref_" << j;
    os << ",v\n";
    char buf[32];
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
        os << buf;
        const Vec& s = traj.states[k];
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", s[i]);
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace dcgrid
