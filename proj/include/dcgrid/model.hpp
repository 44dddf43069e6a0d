#pragma once

/// Parameter and state types for the single-bus dc microgrid, the per-unit
/// conversion, and the nonlinear right-hand side f(x).
///
/// Model summary: n battery branches feed one bus through averaged dc-dc
/// converters with modulation index alpha_j; each converter tracks a droop
/// voltage reference through a PI regulator and a first-order actuation lag
/// tau; m fuel-cell units and the ship load are ideal constant-power
/// devices whose bus current is P/v.
///
/// Per-unit convention: electrical quantities are in p.u., time stays in
/// seconds. Physical inductance and capacitance enter the dynamics only as
/// time constants L/z_base and C*z_base with z_base = v_nom^2/s_base.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcgrid/errors.hpp"

namespace dcgrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One battery branch: source voltage, series resistance, filter inductance.
struct EssParams {
    double e_b = 0.924;      ///< open-circuit voltage, p.u.
    double r_b = 0.0177;     ///< total branch resistance (internal + filter), p.u.
    double l_b_henry = 1e-3; ///< filter inductance, physical henry
};

/// Controller parameters, shared by all ESS branches.
struct ControlParams {
    double k_p = 2.0;   ///< PI proportional gain, p.u.
    double k_i = 1.0;   ///< PI integral gain, p.u.
    double d = 0.05;    ///< droop coefficient, p.u.
    double v_0 = 1.0;   ///< droop idle voltage, p.u.
    double i_0 = 0.5;   ///< droop idle current, p.u.
    double tau = 9e-4;  ///< converter actuation lag, seconds
};

/// Full physical/control parameterization of the grid.
struct MicrogridParams {
    std::vector<EssParams> ess; ///< n >= 1 battery branches
    ControlParams control;      ///< shared controller
    std::vector<double> p_fc;   ///< m >= 0 fuel-cell powers, p.u.
    double p_load = 2.95;       ///< ship load power, p.u.
    double c_farad = 2e-3;      ///< bus capacitance, physical farad
    double s_base = 1e6;        ///< base power, watt
    double v_nom = 750.0;       ///< nominal bus voltage, volt

    [[nodiscard]] std::size_t n() const { return ess.size(); }
    [[nodiscard]] std::size_t m() const { return p_fc.size(); }
    [[nodiscard]] std::size_t state_dim() const { return 3 * n() + 1; }

    /// Net power the batteries must cover, p.u.
    [[nodiscard]] double p_net() const {
        double fc = 0.0;
        for (double p : p_fc) fc += p;
        return p_load - fc;
    }

    /// Enforces the type invariants; throws std::invalid_argument on violation.
    void validate() const {
        if (ess.empty()) throw std::invalid_argument("MicrogridParams: need at least one ESS branch");
        for (const EssParams& e : ess) {
            if (!(e.e_b > 0.0)) throw std::invalid_argument("EssParams: e_b must be > 0");
            if (!(e.r_b >= 0.0)) throw std::invalid_argument("EssParams: r_b must be >= 0");
            if (!(e.l_b_henry > 0.0)) throw std::invalid_argument("EssParams: l_b_henry must be > 0");
        }
        if (!(control.k_p >= 0.0)) throw std::invalid_argument("ControlParams: k_p must be >= 0");
        if (!(control.k_i > 0.0)) throw std::invalid_argument("ControlParams: k_i must be > 0");
        if (!(control.d >= 0.0)) throw std::invalid_argument("ControlParams: d must be >= 0");
        if (!(control.v_0 > 0.0)) throw std::invalid_argument("ControlParams: v_0 must be > 0");
        if (!(control.tau > 0.0)) throw std::invalid_argument("ControlParams: tau must be > 0");
        for (double p : p_fc)
            if (!(p >= 0.0)) throw std::invalid_argument("MicrogridParams: p_fc entries must be >= 0");
        if (!(p_load >= 0.0)) throw std::invalid_argument("MicrogridParams: p_load must be >= 0");
        if (!(c_farad > 0.0)) throw std::invalid_argument("MicrogridParams: c_farad must be > 0");
        if (!(s_base > 0.0)) throw std::invalid_argument("MicrogridParams: s_base must be > 0");
        if (!(v_nom > 0.0)) throw std::invalid_argument("MicrogridParams: v_nom must be > 0");
    }
};

/// Physical <-> per-unit conversion. Electrical p.u. quantities pass through
/// unchanged; L and C become time constants in seconds.
struct PerUnitScaling {
    double z_base = 0.0; ///< ohm, v_nom^2 / s_base

    static PerUnitScaling from(const MicrogridParams& p) {
        return PerUnitScaling{p.v_nom * p.v_nom / p.s_base};
    }

    [[nodiscard]] double l_pu(double l_henry) const { return l_henry / z_base; }
    [[nodiscard]] double c_pu(double c_farad) const { return c_farad * z_base; }
    [[nodiscard]] double l_physical(double l_seconds) const { return l_seconds * z_base; }
    [[nodiscard]] double c_physical(double c_seconds) const { return c_seconds / z_base; }
};

/// Dynamic state in the fixed layout [ i_B(1..n) | alpha(1..n) | alpha_ref(1..n) | v ].
struct StateVector {
    Vec data;          ///< length 3n+1
    std::size_t n = 0; ///< number of ESS branches

    StateVector() = default;
    StateVector(Vec values, std::size_t branches) : data(std::move(values)), n(branches) {
        if (data.size() != static_cast<Eigen::Index>(3 * n + 1))
            throw std::invalid_argument("StateVector: data length must be 3n+1");
    }

    static StateVector zero(std::size_t branches) {
        return StateVector(Vec::Zero(static_cast<Eigen::Index>(3 * branches + 1)), branches);
    }

    [[nodiscard]] double i_b(std::size_t j) const { return data[static_cast<Eigen::Index>(j)]; }
    [[nodiscard]] double alpha(std::size_t j) const { return data[static_cast<Eigen::Index>(n + j)]; }
    [[nodiscard]] double alpha_ref(std::size_t j) const { return data[static_cast<Eigen::Index>(2 * n + j)]; }
    [[nodiscard]] double v() const { return data[data.size() - 1]; }

    double& i_b(std::size_t j) { return data[static_cast<Eigen::Index>(j)]; }
    double& alpha(std::size_t j) { return data[static_cast<Eigen::Index>(n + j)]; }
    double& alpha_ref(std::size_t j) { return data[static_cast<Eigen::Index>(2 * n + j)]; }
    double& v() { return data[data.size() - 1]; }

    /// True when the dynamics are defined at this state.
    [[nodiscard]] bool physical() const {
        for (std::size_t j = 0; j < n; ++j)
            if (!(alpha(j) > 0.0)) return false;
        return v() > 0.0;
    }
};

/// Internal parameter set with L and C already reduced to time constants.
/// This is what the hot numerical paths consume.
struct PerUnitParams {
    std::size_t n = 0;
    std::vector<double> e_b;  ///< p.u.
    std::vector<double> r_b;  ///< p.u.
    std::vector<double> l_pu; ///< seconds
    double c_pu = 0.0;        ///< seconds
    ControlParams control;
    double p_load = 0.0; ///< p.u.
    double p_fc_total = 0.0;
    double z_base = 0.0;
};

/// Reduces a validated MicrogridParams to the internal per-unit form.
[[nodiscard]] inline PerUnitParams to_per_unit(const MicrogridParams& p) {
    p.validate();
    const PerUnitScaling scale = PerUnitScaling::from(p);
    PerUnitParams out;
    out.n = p.n();
    out.e_b.reserve(out.n);
    out.r_b.reserve(out.n);
    out.l_pu.reserve(out.n);
    for (const EssParams& e : p.ess) {
        out.e_b.push_back(e.e_b);
        out.r_b.push_back(e.r_b);
        out.l_pu.push_back(scale.l_pu(e.l_b_henry));
    }
    out.c_pu = scale.c_pu(p.c_farad);
    out.control = p.control;
    out.p_load = p.p_load;
    out.p_fc_total = p.p_load - p.p_net();
    out.z_base = scale.z_base;
    return out;
}

/// Nonlinear right-hand side, writing dx into `out` (both length 3n+1).
/// Returns false instead of evaluating when alpha_j <= 0 or v <= 0 — the
/// form integrators use to treat singular states as step failures.
inline bool try_eval_rhs(const PerUnitParams& p, const Vec& x, Vec& out) {
    const auto n = static_cast<Eigen::Index>(p.n);
    const double v = x[3 * n];
    if (!(v > 0.0)) return false;
    for (Eigen::Index j = 0; j < n; ++j)
        if (!(x[n + j] > 0.0)) return false;

    const ControlParams& c = p.control;
    out.resize(3 * n + 1);

    // Bus balance first: f_v feeds every alpha_ref derivative.
    double i_bus = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) i_bus += x[j] / x[n + j];
    const double f_v = (i_bus + (p.p_fc_total - p.p_load) / v) / p.c_pu;

    for (Eigen::Index j = 0; j < n; ++j) {
        const double i = x[j];
        const double a = x[n + j];
        const double a_ref = x[2 * n + j];
        const double f_i = (p.e_b[j] - p.r_b[j] * i - v / a) / p.l_pu[j];
        const double f_a = (a_ref - a) / c.tau;
        // g_j = d/dt (i_Bj / alpha_j), the converter's bus-side current slope.
        const double g = f_i / a - (i / (a * a)) * f_a;
        out[j] = f_i;
        out[n + j] = f_a;
        out[2 * n + j] = c.k_p * (-f_v - c.d * g) + c.k_i * (c.v_0 - v - c.d * (i / a - c.i_0));
    }
    out[3 * n] = f_v;
    return true;
}

/// Nonlinear right-hand side f(x) of the grid ODE, as a value-returning
/// convenience; throws SingularState where try_eval_rhs would return false.
[[nodiscard]] inline Vec eval_rhs(const PerUnitParams& p, const Vec& x) {
    Vec out;
    if (!try_eval_rhs(p, x, out))
        throw SingularState("eval_rhs: alpha_j and v must be positive");
    return out;
}

[[nodiscard]] inline StateVector eval_rhs(const MicrogridParams& params, const StateVector& x) {
    if (x.data.size() != static_cast<Eigen::Index>(params.state_dim()))
        throw std::invalid_argument("eval_rhs: state dimension mismatch");
    return StateVector(eval_rhs(to_per_unit(params), x.data), params.n());
}

} // namespace dcgrid
