#pragma once

/// SVG rendering for the sweep outputs.  The plot command never recomputes
/// anything: it reads a CSV produced by sweep-minc or sweep-rmax, dispatches
/// on the header, and draws.  An empty-but-valid CSV renders empty axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "dcgrid/csv.hpp"
#include "dcgrid/errors.hpp"

namespace dcgrid {

namespace detail {

[[nodiscard]] inline std::string fmt_g3(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

/// Maps data coordinates into an SVG viewport (y axis flipped).
struct Axes {
    double x0, x1, y0, y1;          // data ranges
    double px0, px1, py0, py1;      // pixel box (py0 = top)

    [[nodiscard]] double x(double v) const {
        const double s = (x1 > x0) ? (v - x0) / (x1 - x0) : 0.5;
        return px0 + s * (px1 - px0);
    }
    [[nodiscard]] double y(double v) const {
        const double s = (y1 > y0) ? (v - y0) / (y1 - y0) : 0.5;
        return py1 - s * (py1 - py0);
    }
};

inline void svg_open(std::ostream& os, int w, int h) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
}

inline void svg_text(std::ostream& os, double x, double y, const std::string& s,
                     const std::string& anchor = "start", int size = 12,
                     const std::string& extra = "") {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
       << "\" text-anchor=\"" << anchor << "\"" << (extra.empty() ? "" : " " + extra) << ">" << s
       << "</text>\n";
}

inline void svg_line(std::ostream& os, double x1, double y1, double x2, double y2,
                     const std::string& stroke = "black", double width = 1.0) {
    os << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
       << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
}

/// Axis frame with ticks and numeric labels.
inline void svg_frame(std::ostream& os, const Axes& ax, const std::string& xlabel,
                      const std::string& ylabel) {
    os << "<rect x=\"" << ax.px0 << "\" y=\"" << ax.py0 << "\" width=\"" << ax.px1 - ax.px0
       << "\" height=\"" << ax.py1 - ax.py0 << "\" fill=\"none\" stroke=\"black\"/>\n";
    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double fx = ax.x0 + (ax.x1 - ax.x0) * i / ticks;
        const double fy = ax.y0 + (ax.y1 - ax.y0) * i / ticks;
        const double px = ax.x(fx);
        const double py = ax.y(fy);
        svg_line(os, px, ax.py1, px, ax.py1 + 4);
        svg_text(os, px, ax.py1 + 16, fmt_g3(fx), "middle", 10);
        svg_line(os, ax.px0 - 4, py, ax.px0, py);
        svg_text(os, ax.px0 - 6, py + 3, fmt_g3(fy), "end", 10);
    }
    svg_text(os, (ax.px0 + ax.px1) / 2, ax.py1 + 32, xlabel, "middle", 12);
    svg_text(os, ax.px0 - 46, (ax.py0 + ax.py1) / 2, ylabel, "middle", 12,
             "transform=\"rotate(-90 " + std::to_string(ax.px0 - 46) + ' ' +
                 std::to_string((ax.py0 + ax.py1) / 2) + ")\"");
}

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    return colors;
}

/// Diverging blue-white-red map for the spectral abscissa: negative values
/// (contracting) blue, positive (expanding) red, saturation on a tanh scale.
[[nodiscard]] inline std::string rmax_color(double r, double scale) {
    if (!std::isfinite(r)) return "#b0b0b0";
    const double s = std::tanh(std::abs(r) / (scale > 0 ? scale : 1.0));
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - s)));
    char buf[8];
    if (r < 0)
        std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
    else
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
    return buf;
}

[[nodiscard]] inline std::size_t column(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end())
        throw ConfigError("CSV is missing expected column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

[[nodiscard]] inline std::optional<double> cell_num(const std::vector<std::string>& row,
                                                    std::size_t col) {
    if (col >= row.size() || row[col].empty()) return std::nullopt;
    try {
        return std::stod(row[col]);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace detail

/// Minimum-capacitance curves: one polyline per droop gain, inductance on
/// the x axis.  Rows without a feasible minimum are skipped.
inline void plot_minc_svg(std::ostream& os, const CsvTable& table) {
    using namespace detail;
    const auto cd = column(table, "D");
    const auto cl = column(table, "L_H");
    const auto cc = column(table, "C_min_F");

    // series[d] = sorted (L, C_min)
    std::map<double, std::vector<std::pair<double, double>>> series;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const auto& row : table.rows) {
        const auto d = cell_num(row, cd);
        const auto l = cell_num(row, cl);
        const auto c = cell_num(row, cc);
        if (!d || !l || !c) continue;
        series[*d].emplace_back(*l, *c);
        if (!any) {
            xmin = xmax = *l;
            ymin = ymax = *c;
            any = true;
        }
        xmin = std::min(xmin, *l); xmax = std::max(xmax, *l);
        ymin = std::min(ymin, *c); ymax = std::max(ymax, *c);
    }
    if (any && xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    if (any && ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad; ymax += ypad;

    constexpr int w = 720, h = 480;
    svg_open(os, w, h);
    svg_text(os, w / 2.0, 24, "Minimum stabilizing capacitance", "middle", 15);
    const Axes ax{xmin, xmax, ymin, ymax, 70, w - 140.0, 44, h - 50.0};
    svg_frame(os, ax, "branch inductance L [H]", "C_min [F]");
    if (!any) {
        svg_text(os, (ax.px0 + ax.px1) / 2, (ax.py0 + ax.py1) / 2, "no data", "middle", 14);
        os << "</svg>\n";
        return;
    }

    std::size_t idx = 0;
    for (auto& [d, pts] : series) {
        std::sort(pts.begin(), pts.end());
        const std::string& color = palette()[idx % palette().size()];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (const auto& [x, y] : pts) os << ax.x(x) << ',' << ax.y(y) << ' ';
        os << "\"/>\n";
        for (const auto& [x, y] : pts)
            os << "<circle cx=\"" << ax.x(x) << "\" cy=\"" << ax.y(y)
               << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = 60.0 + 16.0 * static_cast<double>(idx);
        svg_line(os, w - 126.0, ly - 4, w - 106.0, ly - 4, color, 2.0);
        svg_text(os, w - 100.0, ly, "D = " + fmt_g3(d), "start", 11);
        ++idx;
    }
    os << "</svg>\n";
}

/// Spectral-abscissa heat maps: one panel per (operating point, droop gain),
/// capacitance on x, inductance on y, colour by r_max.
inline void plot_rmax_svg(std::ostream& os, const CsvTable& table) {
    using namespace detail;
    const auto cop = column(table, "op");
    const auto cd = column(table, "D");
    const auto cl = column(table, "L_H");
    const auto cc = column(table, "C_F");
    const auto cr = column(table, "r_max");

    struct Cell { double c, l, r; };
    std::map<std::pair<double, double>, std::vector<Cell>> panels; // key (op, D)
    std::set<double> c_all, l_all;
    double rscale = 0.0;
    for (const auto& row : table.rows) {
        const auto op = cell_num(row, cop);
        const auto d = cell_num(row, cd);
        const auto l = cell_num(row, cl);
        const auto c = cell_num(row, cc);
        if (!op || !d || !l || !c) continue;
        const auto r = cell_num(row, cr);
        const double rv = r ? *r : std::numeric_limits<double>::quiet_NaN();
        panels[{*op, *d}].push_back({*c, *l, rv});
        c_all.insert(*c);
        l_all.insert(*l);
        if (std::isfinite(rv)) rscale = std::max(rscale, std::abs(rv));
    }

    const int npanel = std::max<int>(1, static_cast<int>(panels.size()));
    const int cols = std::min(npanel, 3);
    const int rows = (npanel + cols - 1) / cols;
    constexpr int pw = 300, ph = 240;
    const int w = 60 + cols * pw;
    const int h = 60 + rows * ph;
    svg_open(os, w, h);
    svg_text(os, w / 2.0, 22, "Spectral abscissa map (blue stable, red unstable)", "middle", 14);

    if (panels.empty()) {
        const Axes ax{0, 1, 0, 1, 70, w - 40.0, 44, h - 50.0};
        svg_frame(os, ax, "bus capacitance C [F]", "branch inductance L [H]");
        svg_text(os, (ax.px0 + ax.px1) / 2, (ax.py0 + ax.py1) / 2, "no data", "middle", 14);
        os << "</svg>\n";
        return;
    }

    const std::vector<double> cs(c_all.begin(), c_all.end());
    const std::vector<double> ls(l_all.begin(), l_all.end());
    auto index_of = [](const std::vector<double>& v, double x) {
        return static_cast<std::size_t>(
            std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };

    int panel_idx = 0;
    for (const auto& [key, cells] : panels) {
        const int pc = panel_idx % cols;
        const int pr = panel_idx / cols;
        const double ox = 60.0 + pc * pw;
        const double oy = 40.0 + pr * ph;
        const Axes ax{0, static_cast<double>(cs.size()), 0, static_cast<double>(ls.size()),
                      ox, ox + pw - 60.0, oy + 20.0, oy + ph - 50.0};
        for (const auto& cell : cells) {
            const auto ci = index_of(cs, cell.c);
            const auto li = index_of(ls, cell.l);
            const double x = ax.x(static_cast<double>(ci));
            const double y = ax.y(static_cast<double>(li + 1));
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\""
               << (ax.x(1) - ax.x(0)) << "\" height=\"" << (ax.y(0) - ax.y(1))
               << "\" fill=\"" << rmax_color(cell.r, rscale) << "\"/>\n";
        }
        os << "<rect x=\"" << ax.px0 << "\" y=\"" << ax.py0 << "\" width=\"" << ax.px1 - ax.px0
           << "\" height=\"" << ax.py1 - ax.py0 << "\" fill=\"none\" stroke=\"black\"/>\n";
        svg_text(os, (ax.px0 + ax.px1) / 2, oy + 12,
                 "op " + fmt_g3(key.first) + ", D = " + fmt_g3(key.second), "middle", 12);
        svg_text(os, (ax.px0 + ax.px1) / 2, ax.py1 + 16,
                 "C: " + fmt_g3(cs.front()) + " .. " + fmt_g3(cs.back()) + " F", "middle", 10);
        svg_text(os, ax.px0, ax.py0 - 2,
                 "L: " + fmt_g3(ls.front()) + " .. " + fmt_g3(ls.back()) + " H", "start", 10);
        ++panel_idx;
    }
    os << "</svg>\n";
}

/// Dispatch on the CSV header.  Unknown schemas are an error: the plot
/// command only understands the files this tool writes.
inline void plot_csv(std::ostream& os, const CsvTable& table) {
    const auto& h = table.header;
    auto has = [&](const char* name) {
        return std::find(h.begin(), h.end(), name) != h.end();
    };
    if (has("C_min_F") && has("L_H") && has("D")) {
        plot_minc_svg(os, table);
    } else if (has("r_max") && has("C_F") && has("L_H")) {
        plot_rmax_svg(os, table);
    } else {
        std::string header;
        for (std::size_t i = 0; i < h.size(); ++i) header += (i ? "," : "") + h[i];
        throw ConfigError("unrecognized CSV schema (header: '" + header +
                          "'); expected the sweep-minc or sweep-rmax layout");
    }
}

} // namespace dcgrid
