#pragma once

/// Jacobian assembly at an equilibrium: closed-form partial derivatives of
/// the rhs (analytic_jacobian) cross-validated by central differences
/// (numeric_jacobian). The finite-difference oracle is the arbiter of
/// correctness for the analytic form.

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "dcgrid/equilibrium.hpp"
#include "dcgrid/errors.hpp"
#include "dcgrid/model.hpp"

namespace dcgrid {

/// Dense (3n+1)x(3n+1) system matrix with its block partition metadata.
/// Row/column order is the state layout [ i_B | alpha | alpha_ref | v ].
struct JacobianMatrix {
    Mat entries;       ///< units 1/s
    std::size_t n = 0; ///< ESS branch count

    [[nodiscard]] Eigen::Index dim() const { return entries.rows(); }
    [[nodiscard]] Eigen::Index i_offset() const { return 0; }
    [[nodiscard]] Eigen::Index alpha_offset() const { return static_cast<Eigen::Index>(n); }
    [[nodiscard]] Eigen::Index alpha_ref_offset() const { return static_cast<Eigen::Index>(2 * n); }
    [[nodiscard]] Eigen::Index v_offset() const { return static_cast<Eigen::Index>(3 * n); }
};

/// Closed-form Jacobian at a solved equilibrium.
///
/// The alpha_ref rows apply the full chain rule through the bus equation:
/// d(alpha_ref_j)/dt contains -k_P * dv/dt, and dv/dt sees every branch, so
/// the (alpha_ref, i) and (alpha_ref, alpha) blocks are dense in general.
/// They also contain -k_P*D*g_j, whose alpha_ref_j partial puts
/// k_P*D*i_Bj/(tau*alpha_j^2) on the (alpha_ref, alpha_ref) diagonal.
///
/// With `paper_structure` set, the off-diagonal coupling of those two blocks
/// and the whole (alpha_ref, alpha_ref) block are zeroed, reproducing the
/// published sparsity pattern in which they appear as diagonal/zero blocks.
/// The default is the exact chain rule, which is what finite differences
/// confirm.
[[nodiscard]] inline JacobianMatrix analytic_jacobian(const MicrogridParams& params,
                                                      const Equilibrium& eq,
                                                      bool paper_structure = false) {
    if (!(eq.residual_norm < 1e-9))
        throw NotAtEquilibrium("analytic_jacobian: equilibrium residual above 1e-9");
    const PerUnitParams p = to_per_unit(params);
    if (eq.state.data.size() != static_cast<Eigen::Index>(3 * p.n + 1))
        throw std::invalid_argument("analytic_jacobian: state dimension mismatch");

    const ControlParams& c = p.control;
    const auto n = static_cast<Eigen::Index>(p.n);
    const Vec& x = eq.state.data;
    const double v = x[3 * n];

    Mat a = Mat::Zero(3 * n + 1, 3 * n + 1);

    // f_v row partials; also reused (scaled by -k_P) in every alpha_ref row.
    Vec dfv_di(n);
    Vec dfv_da(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double ak = x[n + k];
        dfv_di[k] = 1.0 / (p.c_pu * ak);
        dfv_da[k] = -x[k] / (p.c_pu * ak * ak);
    }
    const double dfv_dv = (p.p_load - p.p_fc_total) / (p.c_pu * v * v);

    for (Eigen::Index j = 0; j < n; ++j) {
        const double i = x[j];
        const double al = x[n + j];
        const double ar = x[2 * n + j];
        const double lj = p.l_pu[j];
        const double rj = p.r_b[j];
        const double ej = p.e_b[j];

        // f_i row: branch KVL.
        a(j, j) = -rj / lj;
        a(j, n + j) = v / (lj * al * al);
        a(j, 3 * n) = -1.0 / (lj * al);

        // f_alpha row: first-order lag.
        a(n + j, n + j) = -1.0 / c.tau;
        a(n + j, 2 * n + j) = 1.0 / c.tau;

        // Partials of g_j = d/dt(i_Bj/alpha_j), valid at any state; the
        // f_alpha terms vanish at an equilibrium but cost nothing to keep.
        const double dg_di = -rj / (lj * al) + 1.0 / (c.tau * al) - ar / (c.tau * al * al);
        const double dg_da = -(ej - rj * i) / (lj * al * al) + 2.0 * v / (lj * al * al * al) -
                             i / (c.tau * al * al) + 2.0 * i * ar / (c.tau * al * al * al);
        const double dg_dar = -i / (c.tau * al * al);
        const double dg_dv = -1.0 / (lj * al * al);

        // f_alpha_ref row: -k_P * (df_v + D * dg_j) + k_I * d(v_0 - v - D*(i/alpha - i_0)).
        for (Eigen::Index k = 0; k < n; ++k) {
            a(2 * n + j, k) = -c.k_p * dfv_di[k];
            a(2 * n + j, n + k) = -c.k_p * dfv_da[k];
        }
        a(2 * n + j, j) += -c.k_p * c.d * dg_di - c.k_i * c.d / al;
        a(2 * n + j, n + j) += -c.k_p * c.d * dg_da + c.k_i * c.d * i / (al * al);
        a(2 * n + j, 2 * n + j) = -c.k_p * c.d * dg_dar;
        a(2 * n + j, 3 * n) = -c.k_p * (dfv_dv + c.d * dg_dv) - c.k_i;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        a(3 * n, k) = dfv_di[k];
        a(3 * n, n + k) = dfv_da[k];
    }
    a(3 * n, 3 * n) = dfv_dv;

    if (paper_structure) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                if (j != k) {
                    a(2 * n + j, k) = 0.0;
                    a(2 * n + j, n + k) = 0.0;
                }
            }
            a(2 * n + j, 2 * n + j) = 0.0;
        }
    }

    return JacobianMatrix{std::move(a), p.n};
}

/// Central-difference Jacobian at an arbitrary admissible state.
/// Per-column step: h * max(|x_k|, 1). Default h = 1e-6.
[[nodiscard]] inline JacobianMatrix numeric_jacobian(const MicrogridParams& params,
                                                     const StateVector& x,
                                                     double h = 1e-6) {
    const PerUnitParams p = to_per_unit(params);
    if (x.data.size() != static_cast<Eigen::Index>(3 * p.n + 1))
        throw std::invalid_argument("numeric_jacobian: state dimension mismatch");
    const Eigen::Index dim = x.data.size();
    Mat jac(dim, dim);
    Vec xp = x.data;
    Vec fp(dim);
    Vec fm(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const double step = h * std::max(std::abs(x.data[k]), 1.0);
        xp[k] = x.data[k] + step;
        if (!try_eval_rhs(p, xp, fp))
            throw SingularState("numeric_jacobian: forward probe left the domain");
        xp[k] = x.data[k] - step;
        if (!try_eval_rhs(p, xp, fm))
            throw SingularState("numeric_jacobian: backward probe left the domain");
        xp[k] = x.data[k];
        jac.col(k) = (fp - fm) / (2.0 * step);
    }
    return JacobianMatrix{std::move(jac), p.n};
}

} // namespace dcgrid
