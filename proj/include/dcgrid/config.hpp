#pragma once

/// Run configuration: a strict INI-style file format mapped onto the model
/// parameters plus per-command settings.  Unknown sections or keys are
/// rejected with a file:line diagnostic rather than silently ignored, so a
/// typo cannot masquerade as a default.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcgrid/csv.hpp"
#include "dcgrid/errors.hpp"
#include "dcgrid/model.hpp"

namespace dcgrid {

/// One resolved operating point block.
struct OperatingPointConfig {
    int label = 1;
    double p_load = 0.0;              ///< per unit
    std::vector<double> p_fc;         ///< per unit, one entry per resource
    std::vector<double> e_b;          ///< per unit, broadcast over branches
    double v0 = 1.0;                  ///< per unit
    double i0 = 0.0;                  ///< per unit
};

/// Full run configuration.  Field defaults are the effective values used
/// when the corresponding key (or whole section) is absent.
struct RunConfig {
    // [grid]
    std::size_t n_ess = 0;
    std::vector<double> r_b;          ///< per unit, broadcast over branches
    std::vector<double> l_b_henry;    ///< henry, broadcast over branches
    double c_farad = 0.0;
    double d = 0.0;
    double k_p = 0.0;
    double k_i = 0.0;
    double tau = 0.0;
    double s_base = 1e6;
    double v_nom = 750.0;

    OperatingPointConfig op1;
    std::optional<OperatingPointConfig> op2;

    // [simulation]
    double sim_t_end = 2.0;
    double perturb_v_rel = 1e-2;
    double sample_dt = 1e-4;
    double rel_tol = 1e-7;
    double abs_tol = 1e-9;

    // [step_load]
    double step_delta_p = 0.0;
    double step_t_switch = 1.0;
    double step_t_end = 2.0;

    // [sweep]
    double sweep_c_lo = 1e-4;
    double sweep_c_hi = 1e-2;
    double sweep_c_resolution = 2e-4;
    std::vector<double> sweep_l_values = {5e-4, 1e-3, 2e-3};
    std::vector<double> sweep_d_values = {0.1, 0.2, 0.4};
    bool sweep_bisection = false;

    // [tune_tau]
    std::vector<double> tau_candidates = {1e-4, 3e-4, 9e-4};
    std::vector<double> tt_c_values = {2e-3, 5e-3, 1e-2};
    std::vector<double> tt_l_values = {5e-4, 1e-3};
    std::vector<double> tt_d_values = {0.05, 0.1};

    /// Assemble the physical parameter set for one operating point (1 or 2).
    [[nodiscard]] MicrogridParams params(int which_op = 1) const;

    [[nodiscard]] static RunConfig load(const std::string& path);
    [[nodiscard]] static RunConfig parse(std::istream& is, const std::string& name);

    /// Canonical text form.  parse(dump()) reproduces the same effective
    /// configuration (idempotent modulo key ordering).
    [[nodiscard]] std::string dump() const;
};

namespace detail {

[[nodiscard]] inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

/// Context for error messages: "<file>:<line>".
struct ParsePos {
    const std::string& name;
    int line;
    [[nodiscard]] std::string str() const { return name + ":" + std::to_string(line); }
};

[[nodiscard]] inline double parse_double(const std::string& raw, const ParsePos& pos,
                                         const std::string& key) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw ConfigError(pos.str() + ": value '" + raw + "' for key '" + key +
                          "' is not a number");
    }
    if (used != raw.size())
        throw ConfigError(pos.str() + ": trailing characters in value '" + raw + "' for key '" +
                          key + "'");
    return value;
}

[[nodiscard]] inline std::vector<double> parse_list(const std::string& raw, const ParsePos& pos,
                                                    const std::string& key) {
    std::vector<double> values;
    if (trim(raw) == "none") return values;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError(pos.str() + ": empty element in list for key '" + key + "'");
        values.push_back(parse_double(item, pos, key));
    }
    if (values.empty())
        throw ConfigError(pos.str() + ": empty list for key '" + key + "'");
    return values;
}

[[nodiscard]] inline bool parse_bool(const std::string& raw, const ParsePos& pos,
                                     const std::string& key) {
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw ConfigError(pos.str() + ": value '" + raw + "' for key '" + key +
                      "' is not a boolean (use true/false)");
}

[[nodiscard]] inline std::string join_list(const std::vector<double>& values) {
    if (values.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += fmt_g17(values[i]);
    }
    return out;
}

/// Broadcast a 1-or-n element list to exactly n entries.
[[nodiscard]] inline std::vector<double> broadcast(const std::vector<double>& values,
                                                   std::size_t n, const std::string& key,
                                                   const std::string& name) {
    if (values.size() == n) return values;
    if (values.size() == 1) return std::vector<double>(n, values[0]);
    throw ConfigError(name + ": key '" + key + "' has " + std::to_string(values.size()) +
                      " entries; expected 1 or " + std::to_string(n));
}

} // namespace detail

inline MicrogridParams RunConfig::params(int which_op) const {
    const OperatingPointConfig* op = &op1;
    if (which_op == 2) {
        if (!op2) throw ConfigError("operating point 2 requested but no [operating_point_2] block");
        op = &*op2;
    } else if (which_op != 1) {
        throw ConfigError("unknown operating point index " + std::to_string(which_op));
    }

    const auto r = detail::broadcast(r_b, n_ess, "r_b_pu", "config");
    const auto l = detail::broadcast(l_b_henry, n_ess, "l_b_henry", "config");
    const auto e = detail::broadcast(op->e_b, n_ess, "e_b_pu", "config");

    MicrogridParams p;
    p.ess.clear();
    for (std::size_t j = 0; j < n_ess; ++j) p.ess.push_back({e[j], r[j], l[j]});
    p.control = {k_p, k_i, d, op->v0, op->i0, tau};
    p.p_fc = op->p_fc;
    p.p_load = op->p_load;
    p.c_farad = c_farad;
    p.s_base = s_base;
    p.v_nom = v_nom;
    p.validate();
    return p;
}

inline RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse(is, path);
}

inline RunConfig RunConfig::parse(std::istream& is, const std::string& name) {
    RunConfig cfg;
    // Track which keys appeared so required ones can be enforced per section.
    std::map<std::string, bool> seen;
    std::string section;
    std::string line;
    int lineno = 0;
    OperatingPointConfig op2_block;
    op2_block.label = 2;
    bool have_op2 = false;

    while (std::getline(is, line)) {
        ++lineno;
        const detail::ParsePos pos{name, lineno};
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(pos.str() + ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known = {
                "grid", "operating_point", "operating_point_2",
                "simulation", "step_load", "sweep", "tune_tau"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigError(pos.str() + ": unknown section [" + section + "]");
            if (section == "operating_point_2") have_op2 = true;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(pos.str() + ": expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(pos.str() + ": missing key before '='");
        if (value.empty())
            throw ConfigError(pos.str() + ": missing value for key '" + key + "'");
        if (section.empty())
            throw ConfigError(pos.str() + ": key '" + key + "' appears before any section");
        seen[section + "." + key] = true;

        auto num = [&] { return detail::parse_double(value, pos, key); };
        auto list = [&] { return detail::parse_list(value, pos, key); };
        auto unknown = [&]() -> ConfigError {
            return ConfigError(pos.str() + ": unknown key '" + key + "' in section [" + section +
                               "]");
        };

        if (section == "grid") {
            if (key == "n_ess") {
                const double v = num();
                if (v < 1 || v != std::floor(v))
                    throw ConfigError(pos.str() + ": n_ess must be a positive integer");
                cfg.n_ess = static_cast<std::size_t>(v);
            } else if (key == "r_b_pu") cfg.r_b = list();
            else if (key == "l_b_henry") cfg.l_b_henry = list();
            else if (key == "c_farad") cfg.c_farad = num();
            else if (key == "d_pu") cfg.d = num();
            else if (key == "k_p_pu") cfg.k_p = num();
            else if (key == "k_i_pu") cfg.k_i = num();
            else if (key == "tau_seconds") cfg.tau = num();
            else if (key == "s_base_watt") cfg.s_base = num();
            else if (key == "v_nom_volt") cfg.v_nom = num();
            else throw unknown();
        } else if (section == "operating_point" || section == "operating_point_2") {
            OperatingPointConfig& op = (section == "operating_point") ? cfg.op1 : op2_block;
            if (key == "label") op.label = static_cast<int>(num());
            else if (key == "p_load_pu") op.p_load = num();
            else if (key == "p_fc_pu") op.p_fc = detail::trim(value) == "none"
                                                    ? std::vector<double>{}
                                                    : list();
            else if (key == "e_b_pu") op.e_b = list();
            else if (key == "v0_pu") op.v0 = num();
            else if (key == "i0_pu") op.i0 = num();
            else throw unknown();
        } else if (section == "simulation") {
            if (key == "t_end_seconds") cfg.sim_t_end = num();
            else if (key == "perturb_v_rel") cfg.perturb_v_rel = num();
            else if (key == "sample_dt_seconds") cfg.sample_dt = num();
            else if (key == "rel_tol") cfg.rel_tol = num();
            else if (key == "abs_tol") cfg.abs_tol = num();
            else throw unknown();
        } else if (section == "step_load") {
            if (key == "delta_p_pu") cfg.step_delta_p = num();
            else if (key == "t_switch_seconds") cfg.step_t_switch = num();
            else if (key == "t_end_seconds") cfg.step_t_end = num();
            else throw unknown();
        } else if (section == "sweep") {
            if (key == "c_lo_farad") cfg.sweep_c_lo = num();
            else if (key == "c_hi_farad") cfg.sweep_c_hi = num();
            else if (key == "c_resolution_farad") cfg.sweep_c_resolution = num();
            else if (key == "l_values_henry") cfg.sweep_l_values = list();
            else if (key == "d_values_pu") cfg.sweep_d_values = list();
            else if (key == "bisection") cfg.sweep_bisection = detail::parse_bool(value, pos, key);
            else throw unknown();
        } else { // tune_tau
            if (key == "tau_candidates_seconds") cfg.tau_candidates = list();
            else if (key == "c_values_farad") cfg.tt_c_values = list();
            else if (key == "l_values_henry") cfg.tt_l_values = list();
            else if (key == "d_values_pu") cfg.tt_d_values = list();
            else throw unknown();
        }
    }

    auto require = [&](const char* key) {
        if (!seen.count(key))
            throw ConfigError(name + ": missing required key '" + key + "'");
    };
    require("grid.n_ess");
    require("grid.r_b_pu");
    require("grid.l_b_henry");
    require("grid.c_farad");
    require("grid.d_pu");
    require("grid.k_p_pu");
    require("grid.k_i_pu");
    require("grid.tau_seconds");
    require("operating_point.p_load_pu");
    require("operating_point.p_fc_pu");
    require("operating_point.e_b_pu");
    require("operating_point.v0_pu");
    require("operating_point.i0_pu");
    if (have_op2) {
        require("operating_point_2.p_load_pu");
        require("operating_point_2.p_fc_pu");
        require("operating_point_2.e_b_pu");
        require("operating_point_2.v0_pu");
        require("operating_point_2.i0_pu");
        cfg.op2 = op2_block;
    }

    // Cross-field checks that parsing alone cannot express.
    static_cast<void>(detail::broadcast(cfg.r_b, cfg.n_ess, "r_b_pu", name));
    static_cast<void>(detail::broadcast(cfg.l_b_henry, cfg.n_ess, "l_b_henry", name));
    static_cast<void>(detail::broadcast(cfg.op1.e_b, cfg.n_ess, "e_b_pu", name));
    if (cfg.op2)
        static_cast<void>(detail::broadcast(cfg.op2->e_b, cfg.n_ess, "e_b_pu", name));
    return cfg;
}

inline std::string RunConfig::dump() const {
    std::ostringstream os;
    os << "[grid]\n";
    os << "n_ess = " << n_ess << '\n';
    os << "r_b_pu = " << detail::join_list(r_b) << '\n';
    os << "l_b_henry = " << detail::join_list(l_b_henry) << '\n';
    os << "c_farad = " << fmt_g17(c_farad) << '\n';
    os << "d_pu = " << fmt_g17(d) << '\n';
    os << "k_p_pu = " << fmt_g17(k_p) << '\n';
    os << "k_i_pu = " << fmt_g17(k_i) << '\n';
    os << "tau_seconds = " << fmt_g17(tau) << '\n';
    os << "s_base_watt = " << fmt_g17(s_base) << '\n';
    os << "v_nom_volt = " << fmt_g17(v_nom) << '\n';

    auto dump_op = [&](const OperatingPointConfig& op, const char* header) {
        os << '\n' << header << '\n';
        os << "label = " << op.label << '\n';
        os << "p_load_pu = " << fmt_g17(op.p_load) << '\n';
        os << "p_fc_pu = " << detail::join_list(op.p_fc) << '\n';
        os << "e_b_pu = " << detail::join_list(op.e_b) << '\n';
        os << "v0_pu = " << fmt_g17(op.v0) << '\n';
        os << "i0_pu = " << fmt_g17(op.i0) << '\n';
    };
    dump_op(op1, "[operating_point]");
    if (op2) dump_op(*op2, "[operating_point_2]");

    os << "\n[simulation]\n";
    os << "t_end_seconds = " << fmt_g17(sim_t_end) << '\n';
    os << "perturb_v_rel = " << fmt_g17(perturb_v_rel) << '\n';
    os << "sample_dt_seconds = " << fmt_g17(sample_dt) << '\n';
    os << "rel_tol = " << fmt_g17(rel_tol) << '\n';
    os << "abs_tol = " << fmt_g17(abs_tol) << '\n';

    os << "\n[step_load]\n";
    os << "delta_p_pu = " << fmt_g17(step_delta_p) << '\n';
    os << "t_switch_seconds = " << fmt_g17(step_t_switch) << '\n';
    os << "t_end_seconds = " << fmt_g17(step_t_end) << '\n';

    os << "\n[sweep]\n";
    os << "c_lo_farad = " << fmt_g17(sweep_c_lo) << '\n';
    os << "c_hi_farad = " << fmt_g17(sweep_c_hi) << '\n';
    os << "c_resolution_farad = " << fmt_g17(sweep_c_resolution) << '\n';
    os << "l_values_henry = " << detail::join_list(sweep_l_values) << '\n';
    os << "d_values_pu = " << detail::join_list(sweep_d_values) << '\n';
    os << "bisection = " << (sweep_bisection ? "true" : "false") << '\n';

    os << "\n[tune_tau]\n";
    os << "tau_candidates_seconds = " << detail::join_list(tau_candidates) << '\n';
    os << "c_values_farad = " << detail::join_list(tt_c_values) << '\n';
    os << "l_values_henry = " << detail::join_list(tt_l_values) << '\n';
    os << "d_values_pu = " << detail::join_list(tt_d_values) << '\n';
    return os.str();
}

} // namespace dcgrid
