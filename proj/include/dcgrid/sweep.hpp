#pragma once

/// Parameter studies over (C, L, D, tau): minimum stabilizing capacitance
/// curves, spectral-abscissa maps, and delay tuning.
///
/// Satisfaction rules per criterion:
///   Ssasc       assess(params).ssasc (all eigenvalues strictly left).
///   Simulation  classify(params) does not come back Unstable, i.e. the
///               trajectory neither blows up nor grows 10x — the
///               divergence-based convention transient simulators use when
///               they call a run stable unless variables visibly diverge.
/// A point whose equilibrium is infeasible counts as not-satisfying.
///
/// Concurrency: grid cells are pure, independent work items distributed
/// over a worker pool; results land in index-keyed slots and are emitted in
/// a fixed lexicographic order, so output never depends on scheduling.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dcgrid/simulator.hpp"
#include "dcgrid/stability.hpp"

namespace dcgrid {

enum class Criterion { Ssasc, Simulation };

[[nodiscard]] inline const char* to_string(Criterion c) {
    return c == Criterion::Ssasc ? "ssasc" : "sim";
}

/// Grid of scan values for the sweep operations.
struct SweepGrid {
    std::vector<double> c_values; ///< farad, strictly increasing
    std::vector<double> l_values; ///< henry, strictly increasing
    std::vector<double> d_values; ///< p.u., strictly increasing
    Criterion criterion = Criterion::Ssasc;

    void validate() const {
        auto check = [](const std::vector<double>& xs, const char* name) {
            if (xs.empty()) throw std::invalid_argument(std::string("SweepGrid: empty ") + name);
            double prev = 0.0;
            for (double x : xs) {
                if (!(x > prev))
                    throw std::invalid_argument(std::string("SweepGrid: ") + name +
                                                " must be positive and strictly increasing");
                prev = x;
            }
        };
        check(c_values, "c_values");
        check(l_values, "l_values");
        check(d_values, "d_values");
    }
};

/// Settings forwarded to classify() when the Simulation criterion is used.
struct SimCriterionSettings {
    double perturbation = 1e-2; ///< relative bump applied to v
    double t_end = 2.0;         ///< classification horizon, seconds
    SimSettings sim;            ///< integrator tolerances
};

/// Result of one minimum-capacitance search, with the bracketing evidence:
/// the criterion holds at c_min and fails one resolution step below (or
/// c_min is the scan's lower edge).
struct MinCapResult {
    double l_henry = 0.0;
    double d = 0.0;
    std::optional<double> c_min;        ///< farad; empty = NotFoundWithinRange
    bool satisfied_at_c_min = false;
    bool unsatisfied_at_prev = false;   ///< at c_min - resolution; true at the lower edge
};

/// One curve family: c_min per (L, D), rows ordered (D, L) lexicographic.
struct MinCapCurve {
    std::vector<MinCapResult> entries;
    double resolution = 0.0; ///< farad, explicit scan metadata
    Criterion criterion = Criterion::Ssasc;
};

/// One cell of the r_max map; `error` is empty on success.
struct RmaxRow {
    int op = 1;
    double d = 0.0;
    double l_henry = 0.0;
    double c_farad = 0.0;
    double r_max = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

/// tune_tau outcome: the chosen delay plus the per-candidate counterexample
/// counts that were evaluated on the way (in candidate order).
struct TauTuning {
    double tau_star = 0.0;
    std::vector<std::pair<double, std::size_t>> trials; ///< (tau, counterexamples)
};

namespace detail {

[[nodiscard]] inline MicrogridParams cell_params(const MicrogridParams& base, double c_farad,
                                                 double l_henry, double d) {
    MicrogridParams p = base;
    p.c_farad = c_farad;
    for (EssParams& e : p.ess) e.l_b_henry = l_henry;
    p.control.d = d;
    return p;
}

/// Criterion evaluation; infeasible operating points are not-satisfying.
[[nodiscard]] inline bool satisfies(const MicrogridParams& params, Criterion criterion,
                                    const SimCriterionSettings& simset, bool paper_structure) {
    try {
        if (criterion == Criterion::Ssasc) return assess(params, paper_structure).ssasc;
        const SimVerdict verdict =
            classify(params, simset.perturbation, simset.t_end, simset.sim);
        return verdict.classification != Classification::Unstable;
    } catch (const NoPhysicalRoot&) {
        return false;
    } catch (const BatteryOverload&) {
        return false;
    } catch (const DegenerateDroop&) {
        return false;
    } catch (const SingularState&) {
        return false;
    }
}

/// Runs f(i) for i in [0, count) on `jobs` workers; the first exception, if
/// any, is rethrown on the caller's thread after the pool drains.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& f) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline void put_g17(std::ostream& os, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
}

} // namespace detail

/// Ascending linear scan for the smallest criterion-satisfying C in
/// [c_range.first, c_range.second] at the given resolution (default: the
/// study's 0.2 mF). Linear rather than bisection because satisfaction need
/// not be monotone in C a priori.
[[nodiscard]] inline MinCapResult min_capacitance(
    const MicrogridParams& base, double l_henry, double d, std::pair<double, double> c_range,
    double resolution = 0.2e-3, Criterion criterion = Criterion::Ssasc,
    const SimCriterionSettings& simset = {}, bool paper_structure = false) {
    if (!(c_range.first > 0.0) || !(c_range.second >= c_range.first))
        throw std::invalid_argument("min_capacitance: need 0 < c_lo <= c_hi");
    if (!(resolution > 0.0)) throw std::invalid_argument("min_capacitance: resolution must be > 0");

    MinCapResult result;
    result.l_henry = l_henry;
    result.d = d;
    bool prev_satisfied = false;
    bool have_prev = false;
    for (std::size_t k = 0;; ++k) {
        const double c = c_range.first + static_cast<double>(k) * resolution;
        if (c > c_range.second * (1.0 + 1e-12)) break;
        const bool ok =
            detail::satisfies(detail::cell_params(base, c, l_henry, d), criterion, simset,
                              paper_structure);
        if (ok) {
            result.c_min = c;
            result.satisfied_at_c_min = true;
            result.unsatisfied_at_prev = !have_prev || !prev_satisfied;
            return result;
        }
        prev_satisfied = ok;
        have_prev = true;
    }
    return result; // NotFoundWithinRange
}

/// Bisection variant. Assumes satisfaction is monotone in C (false below
/// the boundary, true above) — valid on every curve this study produces but
/// not guaranteed by the model, hence opt-in. Returns the same grid point
/// the linear scan would when the assumption holds.
[[nodiscard]] inline MinCapResult min_capacitance_bisect(
    const MicrogridParams& base, double l_henry, double d, std::pair<double, double> c_range,
    double resolution = 0.2e-3, Criterion criterion = Criterion::Ssasc,
    const SimCriterionSettings& simset = {}, bool paper_structure = false) {
    if (!(c_range.first > 0.0) || !(c_range.second >= c_range.first))
        throw std::invalid_argument("min_capacitance_bisect: need 0 < c_lo <= c_hi");
    if (!(resolution > 0.0))
        throw std::invalid_argument("min_capacitance_bisect: resolution must be > 0");

    MinCapResult result;
    result.l_henry = l_henry;
    result.d = d;
    auto ok_at = [&](double c) {
        return detail::satisfies(detail::cell_params(base, c, l_henry, d), criterion, simset,
                                 paper_structure);
    };
    if (ok_at(c_range.first)) {
        result.c_min = c_range.first;
        result.satisfied_at_c_min = true;
        result.unsatisfied_at_prev = true; // lower edge
        return result;
    }
    // Snap the upper probe onto the scan lattice lo + k*resolution.
    const auto steps =
        static_cast<std::size_t>(std::floor((c_range.second - c_range.first) / resolution + 1e-12));
    if (steps == 0 || !ok_at(c_range.first + static_cast<double>(steps) * resolution))
        return result; // NotFoundWithinRange under the monotonicity assumption
    std::size_t lo = 0;        // unsatisfied
    std::size_t hi = steps;    // satisfied
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (ok_at(c_range.first + static_cast<double>(mid) * resolution))
            hi = mid;
        else
            lo = mid;
    }
    result.c_min = c_range.first + static_cast<double>(hi) * resolution;
    result.satisfied_at_c_min = true;
    result.unsatisfied_at_prev = true;
    return result;
}

/// c_min per (L, D) over the cross product of the given lists; cells are
/// evaluated in parallel and emitted in (D, L) lexicographic order.
[[nodiscard]] inline MinCapCurve min_cap_curve(
    const MicrogridParams& base, const std::vector<double>& l_values,
    const std::vector<double>& d_values, std::pair<double, double> c_range,
    double resolution = 0.2e-3, Criterion criterion = Criterion::Ssasc,
    const SimCriterionSettings& simset = {}, unsigned jobs = 0, bool paper_structure = false,
    bool bisection = false) {
    MinCapCurve curve;
    curve.resolution = resolution;
    curve.criterion = criterion;
    curve.entries.resize(l_values.size() * d_values.size());
    detail::parallel_for(curve.entries.size(), jobs, [&](std::size_t idx) {
        const double d = d_values[idx / l_values.size()];
        const double l = l_values[idx % l_values.size()];
        curve.entries[idx] =
            bisection ? min_capacitance_bisect(base, l, d, c_range, resolution, criterion, simset,
                                               paper_structure)
                      : min_capacitance(base, l, d, c_range, resolution, criterion, simset,
                                        paper_structure);
    });
    return curve;
}

/// Dense r_max evaluation over the grid for each labeled operating point.
/// Rows come out in (op, D, L, C) lexicographic order; per-cell failures are
/// recorded in the error column and never abort the sweep.
[[nodiscard]] inline std::vector<RmaxRow> rmax_map(
    const std::vector<std::pair<int, MicrogridParams>>& operating_points, const SweepGrid& grid,
    unsigned jobs = 0, bool paper_structure = false) {
    grid.validate();
    const std::size_t per_op = grid.d_values.size() * grid.l_values.size() * grid.c_values.size();
    std::vector<RmaxRow> rows(operating_points.size() * per_op);
    detail::parallel_for(rows.size(), jobs, [&](std::size_t idx) {
        const std::size_t op_idx = idx / per_op;
        std::size_t rest = idx % per_op;
        const double d = grid.d_values[rest / (grid.l_values.size() * grid.c_values.size())];
        rest %= grid.l_values.size() * grid.c_values.size();
        const double l = grid.l_values[rest / grid.c_values.size()];
        const double c = grid.c_values[rest % grid.c_values.size()];
        RmaxRow& row = rows[idx];
        row.op = operating_points[op_idx].first;
        row.d = d;
        row.l_henry = l;
        row.c_farad = c;
        try {
            row.r_max =
                assess(detail::cell_params(operating_points[op_idx].second, c, l, d),
                       paper_structure)
                    .r_max;
        } catch (const Error& e) {
            row.error = e.what();
        }
    });
    return rows;
}

/// Smallest candidate delay for which sufficiency holds over the whole grid:
/// every ssasc-true cell also classifies AsymptoticallyStable. Candidates
/// must be ascending and within the 1 ms bound. Counterexample counts are
/// complete per evaluated candidate (no early exit inside a candidate) so
/// the trial log is deterministic.
[[nodiscard]] inline TauTuning tune_tau(const MicrogridParams& base, const SweepGrid& grid,
                                        const std::vector<double>& tau_candidates,
                                        const SimCriterionSettings& simset = {},
                                        unsigned jobs = 0, bool paper_structure = false) {
    grid.validate();
    if (tau_candidates.empty())
        throw std::invalid_argument("tune_tau: need at least one candidate");
    double prev = 0.0;
    for (double tau : tau_candidates) {
        if (!(tau > prev)) throw std::invalid_argument("tune_tau: candidates must be ascending");
        if (tau > 1e-3 * (1.0 + 1e-12))
            throw std::invalid_argument("tune_tau: candidates must be <= 1 ms");
        prev = tau;
    }

    const std::size_t cells =
        grid.d_values.size() * grid.l_values.size() * grid.c_values.size();
    TauTuning tuning;
    for (double tau : tau_candidates) {
        std::atomic<std::size_t> counterexamples{0};
        detail::parallel_for(cells, jobs, [&](std::size_t idx) {
            const double d =
                grid.d_values[idx / (grid.l_values.size() * grid.c_values.size())];
            std::size_t rest = idx % (grid.l_values.size() * grid.c_values.size());
            const double l = grid.l_values[rest / grid.c_values.size()];
            const double c = grid.c_values[rest % grid.c_values.size()];
            MicrogridParams p = detail::cell_params(base, c, l, d);
            p.control.tau = tau;
            bool stable_by_eigs = false;
            try {
                stable_by_eigs = assess(p, paper_structure).ssasc;
            } catch (const Error&) {
                return; // infeasible cell: empty premise, no counterexample
            }
            if (!stable_by_eigs) return;
            const SimVerdict verdict =
                classify(p, simset.perturbation, simset.t_end, simset.sim);
            if (verdict.classification != Classification::AsymptoticallyStable)
                counterexamples.fetch_add(1);
        });
        tuning.trials.emplace_back(tau, counterexamples.load());
        if (counterexamples.load() == 0) {
            tuning.tau_star = tau;
            return tuning;
        }
    }
    throw NoFeasibleTau("tune_tau: every candidate produced counterexamples");
}

/// minc.csv: D,L_H,C_min_F,criterion,found
inline void write_minc_csv(std::ostream& os, const MinCapCurve& curve) {
    os << "D,L_H,C_min_F,criterion,found\n";
    for (const MinCapResult& row : curve.entries) {
        detail::put_g17(os, row.d);
        os << ',';
        detail::put_g17(os, row.l_henry);
        os << ',';
        if (row.c_min) detail::put_g17(os, *row.c_min);
        os << ',' << to_string(curve.criterion) << ',' << (row.c_min ? 1 : 0) << '\n';
    }
}

/// rmax.csv: op,D,L_H,C_F,r_max,error
inline void write_rmax_csv(std::ostream& os, const std::vector<RmaxRow>& rows) {
    os << "op,D,L_H,C_F,r_max,error\n";
    for (const RmaxRow& row : rows) {
        os << row.op << ',';
        detail::put_g17(os, row.d);
        os << ',';
        detail::put_g17(os, row.l_henry);
        os << ',';
        detail::put_g17(os, row.c_farad);
        os << ',';
        if (row.error.empty()) detail::put_g17(os, row.r_max);
        else os << "nan";
        os << ',' << row.error << '\n';
    }
}

/// tau.csv: tau_s,counterexamples
inline void write_tau_csv(std::ostream& os, const TauTuning& tuning) {
    os << "tau_s,counterexamples\n";
    for (const auto& [tau, count] : tuning.trials) {
        detail::put_g17(os, tau);
        os << ',' << count << '\n';
    }
}

} // namespace dcgrid
