#pragma once

/// Eigenvalue computation and the small-signal asymptotic stability
/// condition (S-SASC): every eigenvalue of the system matrix strictly in
/// the open left half-plane.

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dcgrid/errors.hpp"
#include "dcgrid/linearization.hpp"

namespace dcgrid {

/// Spectrum summary for one parameter point.
struct StabilityReport {
    std::vector<std::complex<double>> eigenvalues; ///< sorted (Re desc, Im desc), 1/s
    double r_max = 0.0;    ///< spectral abscissa, 1/s
    bool ssasc = false;    ///< r_max < 0, strict
    double margin = 0.0;   ///< |r_max| when stable, else 0
    bool marginal = false; ///< |r_max| < 1e-9: verdict numerically fragile
};

/// Full spectrum of a dense real nonsymmetric matrix (QR/real-Schur based).
/// Deterministically sorted by (real part descending, imaginary part
/// descending). Complex values arrive in exact conjugate pairs from the
/// real-Schur 2x2 blocks.
[[nodiscard]] inline std::vector<std::complex<double>> eigenvalues(const Mat& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("eigenvalues: matrix must be square");
    if (!a.allFinite())
        throw std::invalid_argument("eigenvalues: matrix must be finite");
    Eigen::EigenSolver<Mat> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eigenvalues: QR iteration did not converge");
    std::vector<std::complex<double>> out(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index k = 0; k < a.rows(); ++k) out[static_cast<std::size_t>(k)] = solver.eigenvalues()[k];
    std::sort(out.begin(), out.end(), [](const auto& lhs, const auto& rhs) {
        if (lhs.real() != rhs.real()) return lhs.real() > rhs.real();
        return lhs.imag() > rhs.imag();
    });
    return out;
}

[[nodiscard]] inline std::vector<std::complex<double>> eigenvalues(const JacobianMatrix& a) {
    return eigenvalues(a.entries);
}

/// Builds a report from an already-computed spectrum.
[[nodiscard]] inline StabilityReport report_from_spectrum(std::vector<std::complex<double>> spectrum) {
    StabilityReport rep;
    rep.eigenvalues = std::move(spectrum);
    double r_max = -std::numeric_limits<double>::infinity();
    for (const auto& ev : rep.eigenvalues) r_max = std::max(r_max, ev.real());
    rep.r_max = r_max;
    rep.ssasc = r_max < 0.0; // strict, no epsilon band
    rep.margin = rep.ssasc ? -r_max : 0.0;
    rep.marginal = std::abs(r_max) < 1e-9;
    return rep;
}

/// Full pipeline: solve_equilibrium -> analytic_jacobian -> eigenvalues.
/// Propagates equilibrium/linearization errors unchanged.
[[nodiscard]] inline StabilityReport assess(const MicrogridParams& params,
                                            bool paper_structure = false) {
    const Equilibrium eq = solve_equilibrium(params);
    const JacobianMatrix jac = analytic_jacobian(params, eq, paper_structure);
    return report_from_spectrum(eigenvalues(jac));
}

} // namespace dcgrid
