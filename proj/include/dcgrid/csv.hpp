#pragma once

/// Small CSV helpers shared by the serialization paths: full-precision
/// number formatting, a tolerant reader for the plot command, and the
/// debug/report emitters that do not belong to a specific sweep.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcgrid/equilibrium.hpp"
#include "dcgrid/linearization.hpp"
#include "dcgrid/stability.hpp"

namespace dcgrid {

/// Shortest round-trippable decimal form.
[[nodiscard]] inline std::string fmt_g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Parsed CSV: header plus string cells. '#'-prefixed lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

[[nodiscard]] inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

[[nodiscard]] inline CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            table.header = split_csv_line(line);
            have_header = true;
        } else {
            table.rows.push_back(split_csv_line(line));
        }
    }
    return table;
}

/// Row-major full-precision matrix dump (linearization debugging aid).
inline void write_matrix_csv(std::ostream& os, const Mat& a) {
    char buf[32];
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17e", a(r, c));
            os << (c == 0 ? "" : ",") << buf;
        }
        os << '\n';
    }
}

/// eigs.csv: one (re, im) row per eigenvalue plus a '#'-prefixed summary
/// line that CSV consumers can skip.
inline void write_eigs_csv(std::ostream& os, const StabilityReport& report) {
    os << "re,im\n";
    for (const auto& ev : report.eigenvalues)
        os << fmt_g17(ev.real()) << ',' << fmt_g17(ev.imag()) << '\n';
    os << "# r_max=" << fmt_g17(report.r_max) << ",ssasc=" << (report.ssasc ? 1 : 0)
       << ",margin=" << fmt_g17(report.margin) << ",marginal=" << (report.marginal ? 1 : 0)
       << '\n';
}

/// equilibrium.csv: quantity,value rows.
inline void write_equilibrium_csv(std::ostream& os, const Equilibrium& eq) {
    os << "quantity,value\n";
    const std::size_t n = eq.state.n;
    for (std::size_t j = 0; j < n; ++j)
        os << "i_B_" << j + 1 << ',' << fmt_g17(eq.state.i_b(j)) << '\n';
    for (std::size_t j = 0; j < n; ++j)
        os << "alpha_" << j + 1 << ',' << fmt_g17(eq.state.alpha(j)) << '\n';
    for (std::size_t j = 0; j < n; ++j)
        os << "alpha_ref_" << j + 1 << ',' << fmt_g17(eq.state.alpha_ref(j)) << '\n';
    os << "v," << fmt_g17(eq.state.v()) << '\n';
    for (std::size_t j = 0; j < n; ++j)
        os << "i_dc_" << j + 1 << ',' << fmt_g17(eq.i_dc[j]) << '\n';
    os << "residual_norm," << fmt_g17(eq.residual_norm) << '\n';
}

} // namespace dcgrid
