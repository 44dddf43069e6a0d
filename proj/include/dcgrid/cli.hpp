#pragma once

/// Command-line front end.  run_cli() takes argv-style arguments plus the
/// two output streams so tests can drive the full binary in-process.
///
/// Exit codes are a stable contract for scripts:
///   0  success / stable verdict
///   1  usage, config, or runtime error
///   2  infeasible operating point (no physical equilibrium)
///   3  unstable verdict

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dcgrid/config.hpp"
#include "dcgrid/csv.hpp"
#include "dcgrid/equilibrium.hpp"
#include "dcgrid/errors.hpp"
#include "dcgrid/linearization.hpp"
#include "dcgrid/log.hpp"
#include "dcgrid/model.hpp"
#include "dcgrid/plot.hpp"
#include "dcgrid/simulator.hpp"
#include "dcgrid/stability.hpp"
#include "dcgrid/sweep.hpp"

namespace dcgrid::cli {

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

[[nodiscard]] inline std::ofstream open_out(const std::string& dir, const std::string& name) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    return os;
}

[[nodiscard]] inline SimSettings sim_settings(const RunConfig& cfg) {
    SimSettings s;
    s.rel_tol = cfg.rel_tol;
    s.abs_tol = cfg.abs_tol;
    s.sample_dt = cfg.sample_dt;
    return s;
}

/// Scan lattice c_lo + k*resolution, inclusive of c_hi up to rounding.
[[nodiscard]] inline std::vector<double> c_lattice(const RunConfig& cfg) {
    std::vector<double> cs;
    for (std::size_t k = 0;; ++k) {
        const double c = cfg.sweep_c_lo + static_cast<double>(k) * cfg.sweep_c_resolution;
        if (c > cfg.sweep_c_hi * (1.0 + 1e-12)) break;
        cs.push_back(c);
    }
    return cs;
}

[[nodiscard]] inline std::vector<std::pair<int, MicrogridParams>> operating_points(
    const RunConfig& cfg) {
    std::vector<std::pair<int, MicrogridParams>> ops;
    ops.emplace_back(cfg.op1.label, cfg.params(1));
    if (cfg.op2) ops.emplace_back(cfg.op2->label, cfg.params(2));
    return ops;
}

inline int cmd_equilibrium(const RunConfig& cfg, const std::string& out_dir, std::ostream& out) {
    const MicrogridParams params = cfg.params(1);
    const Equilibrium eq = solve_equilibrium(params);
    out << "equilibrium (operating point " << cfg.op1.label << ")\n";
    out << "  bus voltage v = " << fmt_g17(eq.state.v()) << " p.u.\n";
    for (std::size_t j = 0; j < params.n(); ++j)
        out << "  branch " << j + 1 << ": i_B = " << fmt_g17(eq.state.i_b(j))
            << " p.u., alpha = " << fmt_g17(eq.state.alpha(j))
            << ", i_dc = " << fmt_g17(eq.i_dc[j]) << " p.u.\n";
    out << "  residual max-abs = " << fmt_g17(eq.residual_norm) << " 1/s\n";
    auto os = open_out(out_dir, "equilibrium.csv");
    write_equilibrium_csv(os, eq);
    log::info("wrote equilibrium.csv");
    return 0;
}

inline int cmd_assess(const RunConfig& cfg, const std::string& out_dir, bool paper_structure,
                      std::ostream& out) {
    const StabilityReport report = assess(cfg.params(1), paper_structure);
    out << "eigenvalues (" << report.eigenvalues.size() << "):\n";
    for (const auto& ev : report.eigenvalues)
        out << "  " << fmt_g17(ev.real()) << (ev.imag() < 0 ? " - " : " + ")
            << fmt_g17(std::abs(ev.imag())) << "i\n";
    out << "spectral abscissa r_max = " << fmt_g17(report.r_max) << " 1/s\n";
    if (report.marginal) out << "note: r_max is within 1e-9 of the imaginary axis\n";
    out << "verdict: " << (report.ssasc ? "stable" : "unstable")
        << " (criterion: all eigenvalues strictly in the open left half-plane)\n";
    auto os = open_out(out_dir, "eigs.csv");
    write_eigs_csv(os, report);
    log::info("wrote eigs.csv");
    return report.ssasc ? 0 : 3;
}

inline int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& out) {
    const MicrogridParams params = cfg.params(1);
    const Equilibrium eq = solve_equilibrium(params);
    StateVector x0 = eq.state;
    x0.v() *= 1.0 + cfg.perturb_v_rel;
    const double initial_dev = (x0.data - eq.state.data).lpNorm<Eigen::Infinity>();

    const Trajectory traj = simulate(params, x0, cfg.sim_t_end, sim_settings(cfg));
    const SimVerdict verdict = classify_trajectory(traj, eq.state.data, initial_dev);

    {
        auto os = open_out(out_dir, "trajectory.csv");
        write_trajectory_csv(os, traj);
    }
    out << "simulated " << fmt_g17(cfg.sim_t_end) << " s from a "
        << fmt_g17(cfg.perturb_v_rel) << " relative bus-voltage perturbation\n";
    out << "  samples = " << traj.times.size() << (traj.diverged ? " (diverged)" : "") << '\n';
    out << "  peak deviation  = " << fmt_g17(verdict.peak_deviation) << " p.u.\n";
    out << "  final deviation = " << fmt_g17(verdict.final_deviation) << " p.u.\n";
    out << "verdict: " << to_string(verdict.classification) << '\n';
    log::info("wrote trajectory.csv");
    return verdict.classification == Classification::Unstable ? 3 : 0;
}

inline int cmd_step_load(const RunConfig& cfg, const std::string& out_dir, std::ostream& out) {
    const MicrogridParams params = cfg.params(1);
    const Trajectory traj = step_load(params, cfg.step_delta_p, cfg.step_t_switch,
                                      cfg.step_t_end, sim_settings(cfg));
    {
        auto os = open_out(out_dir, "step_load.csv");
        write_trajectory_csv(os, traj);
    }
    const Equilibrium post_eq = solve_equilibrium(traj.params);
    const StateVector final_state(traj.states.back(), traj.params.n());
    out << "load step " << fmt_g17(cfg.step_delta_p) << " p.u. at t = "
        << fmt_g17(cfg.step_t_switch) << " s\n";
    out << "  final bus voltage     = " << fmt_g17(final_state.v()) << " p.u."
        << (traj.diverged ? " (diverged)" : "") << '\n';
    out << "  post-step equilibrium = " << fmt_g17(post_eq.state.v()) << " p.u.\n";
    log::info("wrote step_load.csv");
    return traj.diverged ? 3 : 0;
}

inline int cmd_sweep_minc(const RunConfig& cfg, const std::string& out_dir, Criterion criterion,
                          unsigned jobs, bool paper_structure, std::ostream& out) {
    SimCriterionSettings simset;
    simset.perturbation = cfg.perturb_v_rel;
    simset.t_end = cfg.sim_t_end;
    simset.sim = sim_settings(cfg);
    const MinCapCurve curve =
        min_cap_curve(cfg.params(1), cfg.sweep_l_values, cfg.sweep_d_values,
                      {cfg.sweep_c_lo, cfg.sweep_c_hi}, cfg.sweep_c_resolution, criterion,
                      simset, jobs, paper_structure, cfg.sweep_bisection);
    {
        auto os = open_out(out_dir, "minc.csv");
        write_minc_csv(os, curve);
    }
    std::size_t found = 0;
    for (const auto& row : curve.entries) found += row.c_min.has_value();
    out << "minimum-capacitance sweep (" << to_string(criterion) << "): " << found << '/'
        << curve.entries.size() << " cells found a stabilizing C within ["
        << fmt_g17(cfg.sweep_c_lo) << ", " << fmt_g17(cfg.sweep_c_hi) << "] F\n";
    for (const auto& row : curve.entries) {
        out << "  D = " << fmt_g17(row.d) << ", L = " << fmt_g17(row.l_henry) << " H: ";
        if (row.c_min) out << "C_min = " << fmt_g17(*row.c_min) << " F\n";
        else out << "not found within range\n";
    }
    log::info("wrote minc.csv");
    return 0;
}

inline int cmd_sweep_rmax(const RunConfig& cfg, const std::string& out_dir, unsigned jobs,
                          bool paper_structure, std::ostream& out) {
    SweepGrid grid;
    grid.c_values = c_lattice(cfg);
    grid.l_values = cfg.sweep_l_values;
    grid.d_values = cfg.sweep_d_values;
    const auto rows = rmax_map(operating_points(cfg), grid, jobs, paper_structure);
    {
        auto os = open_out(out_dir, "rmax.csv");
        write_rmax_csv(os, rows);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t failures = 0;
    for (const auto& row : rows) {
        if (!row.error.empty()) { ++failures; continue; }
        lo = std::min(lo, row.r_max);
        hi = std::max(hi, row.r_max);
    }
    out << "spectral abscissa map: " << rows.size() << " cells";
    if (failures) out << " (" << failures << " infeasible)";
    out << '\n';
    if (lo <= hi)
        out << "  r_max range [" << fmt_g17(lo) << ", " << fmt_g17(hi) << "] 1/s\n";
    log::info("wrote rmax.csv");
    return 0;
}

inline int cmd_tune_tau(const RunConfig& cfg, const std::string& out_dir, unsigned jobs,
                        bool paper_structure, std::ostream& out) {
    SweepGrid grid;
    grid.c_values = cfg.tt_c_values;
    grid.l_values = cfg.tt_l_values;
    grid.d_values = cfg.tt_d_values;
    SimCriterionSettings simset;
    simset.perturbation = cfg.perturb_v_rel;
    simset.t_end = cfg.sim_t_end;
    simset.sim = sim_settings(cfg);
    const TauTuning tuning =
        tune_tau(cfg.params(1), grid, cfg.tau_candidates, simset, jobs, paper_structure);
    {
        auto os = open_out(out_dir, "tau.csv");
        write_tau_csv(os, tuning);
    }
    for (const auto& [tau, count] : tuning.trials)
        out << "  tau = " << fmt_g17(tau) << " s: " << count << " counterexamples\n";
    out << "tau_star = " << fmt_g17(tuning.tau_star)
        << " s (eigenvalue verdict implies simulated decay over the whole grid)\n";
    log::info("wrote tau.csv");
    return 0;
}

inline int cmd_plot(const std::string& in_path, const std::string& out_path, std::ostream& out) {
    std::ifstream is(in_path);
    if (!is) throw Error("cannot open '" + in_path + "'");
    const CsvTable table = read_csv(is);
    std::ofstream os(out_path);
    if (!os) throw Error("cannot write '" + out_path + "'");
    plot_csv(os, table);
    out << "rendered " << table.rows.size() << " rows to " << out_path << '\n';
    return 0;
}

} // namespace detail

/// Parse `args` (without the program name) and run the selected command.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"small-signal stability toolkit for a droop-controlled dc microgrid"};
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    unsigned jobs = 0;
    bool paper_structure = false;
    bool dump_config = false;
    std::string criterion_name = "ssasc";
    std::string plot_in, plot_out;

    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--out", out_dir, "directory for CSV/SVG artifacts")->capture_default_str();
    app.add_option("--jobs", jobs, "sweep worker threads (0 = all hardware threads)")
        ->capture_default_str();
    app.add_flag("--paper-structure", paper_structure,
                 "use the simplified Jacobian block structure (drops the modulation-reference "
                 "cross terms)");
    app.add_flag("--dump-config", dump_config,
                 "print the effective configuration in canonical form and exit");

    auto* eq_cmd = app.add_subcommand("equilibrium", "solve the steady-state operating point");
    auto* assess_cmd = app.add_subcommand("assess", "eigenvalue-based stability assessment");
    auto* sim_cmd =
        app.add_subcommand("simulate", "integrate the perturbed nonlinear model and classify");
    auto* step_cmd = app.add_subcommand("step-load", "transient response to a load step");
    auto* minc_cmd =
        app.add_subcommand("sweep-minc", "minimum stabilizing bus capacitance per (L, D)");
    minc_cmd->add_option("--criterion", criterion_name, "stability criterion")
        ->check(CLI::IsMember({"ssasc", "sim"}))
        ->capture_default_str();
    auto* rmax_cmd =
        app.add_subcommand("sweep-rmax", "spectral abscissa map over the (D, L, C) grid");
    auto* tau_cmd = app.add_subcommand(
        "tune-tau", "smallest converter delay making the eigenvalue verdict sufficient");
    auto* plot_cmd = app.add_subcommand("plot", "render a sweep CSV to SVG");
    plot_cmd->add_option("input", plot_in, "CSV written by sweep-minc or sweep-rmax")->required();
    plot_cmd->add_option("output", plot_out, "SVG path to write")->required();
    app.require_subcommand(0, 1);

    std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (dump_config) {
            if (config_path.empty()) {
                err << "error: --dump-config requires --config\n";
                return 1;
            }
            out << RunConfig::load(config_path).dump();
            return 0;
        }
        if (app.get_subcommands().empty()) {
            err << app.help();
            return 1;
        }
        if (plot_cmd->parsed()) return detail::cmd_plot(plot_in, plot_out, out);

        if (config_path.empty()) {
            err << "error: this command requires --config <path>\n";
            return 1;
        }
        const RunConfig cfg = RunConfig::load(config_path);
        detail::ensure_dir(out_dir);

        if (eq_cmd->parsed()) return detail::cmd_equilibrium(cfg, out_dir, out);
        if (assess_cmd->parsed()) return detail::cmd_assess(cfg, out_dir, paper_structure, out);
        if (sim_cmd->parsed()) return detail::cmd_simulate(cfg, out_dir, out);
        if (step_cmd->parsed()) return detail::cmd_step_load(cfg, out_dir, out);
        if (minc_cmd->parsed()) {
            const Criterion criterion =
                criterion_name == "sim" ? Criterion::Simulation : Criterion::Ssasc;
            return detail::cmd_sweep_minc(cfg, out_dir, criterion, jobs, paper_structure, out);
        }
        if (rmax_cmd->parsed())
            return detail::cmd_sweep_rmax(cfg, out_dir, jobs, paper_structure, out);
        if (tau_cmd->parsed())
            return detail::cmd_tune_tau(cfg, out_dir, jobs, paper_structure, out);
        err << "error: no command selected\n";
        return 1;
    } catch (const NoPhysicalRoot& e) {
        err << "error: infeasible operating point: " << e.what() << '\n';
        return 2;
    } catch (const BatteryOverload& e) {
        err << "error: infeasible operating point: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateDroop& e) {
        err << "error: infeasible operating point: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace dcgrid::cli
