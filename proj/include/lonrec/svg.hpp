#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lonrec/harness.hpp"
#include "lonrec/io.hpp"

namespace lonrec {
namespace svg {

// Self-contained SVG plots of fidelity summaries: one panel of fidelity vs
// sigma (at the m with the most cells) and one of fidelity vs m (at the sigma
// with the most cells), one series per method, error bars from the 1/e
// widths. Output bytes are deterministic functions of the summary rows.

namespace detail {

inline std::string fnum(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* method_color(Method m) {
    switch (m) {
        case Method::brisbane: return "#d62728";
        case Method::bristol: return "#1f77b4";
        case Method::vienna: return "#2ca02c";
        case Method::vienna_reduced: return "#9467bd";
    }
    return "#000000";
}

struct Series {
    Method method;
    std::vector<double> x, y, lo, hi;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::vector<Series> series;
};

inline void render_panel(std::ostringstream& out, const Panel& panel, double ox, double oy,
                         double width, double height) {
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : panel.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.lo[i]);
            y_max = std::max(y_max, s.hi[i]);
        }
    if (x_max <= x_min) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max <= y_min) {
        y_min -= 0.01;
        y_max += 0.01;
    }
    const double x_pad = 0.05 * (x_max - x_min);
    const double y_pad = 0.08 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min -= y_pad;
    y_max += y_pad;

    const double plot_x = ox + 52, plot_y = oy + 28;
    const double plot_w = width - 68, plot_h = height - 66;
    auto px = [&](double x) { return plot_x + plot_w * (x - x_min) / (x_max - x_min); };
    auto py = [&](double y) { return plot_y + plot_h * (y_max - y) / (y_max - y_min); };

    out << "<rect x=\"" << fnum(plot_x) << "\" y=\"" << fnum(plot_y) << "\" width=\""
        << fnum(plot_w) << "\" height=\"" << fnum(plot_h)
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fnum(ox + width / 2) << "\" y=\"" << fnum(oy + 16)
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << panel.title
        << "</text>\n";
    out << "<text x=\"" << fnum(plot_x + plot_w / 2) << "\" y=\"" << fnum(plot_y + plot_h + 32)
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << panel.x_label
        << "</text>\n";
    out << "<text x=\"" << fnum(ox + 14) << "\" y=\"" << fnum(plot_y + plot_h / 2)
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 "
        << fnum(ox + 14) << " " << fnum(plot_y + plot_h / 2) << ")\">fidelity</text>\n";

    for (int t = 0; t <= 4; ++t) {
        const double xv = x_min + (x_max - x_min) * t / 4.0;
        const double yv = y_min + (y_max - y_min) * t / 4.0;
        out << "<line x1=\"" << fnum(px(xv)) << "\" y1=\"" << fnum(plot_y + plot_h) << "\" x2=\""
            << fnum(px(xv)) << "\" y2=\"" << fnum(plot_y + plot_h + 4)
            << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fnum(px(xv)) << "\" y=\"" << fnum(plot_y + plot_h + 16)
            << "\" text-anchor=\"middle\" font-size=\"9\" font-family=\"sans-serif\">" << fnum(xv)
            << "</text>\n";
        out << "<line x1=\"" << fnum(plot_x - 4) << "\" y1=\"" << fnum(py(yv)) << "\" x2=\""
            << fnum(plot_x) << "\" y2=\"" << fnum(py(yv))
            << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fnum(plot_x - 6) << "\" y=\"" << fnum(py(yv) + 3)
            << "\" text-anchor=\"end\" font-size=\"9\" font-family=\"sans-serif\">" << fnum(yv)
            << "</text>\n";
    }

    for (const auto& s : panel.series) {
        const char* color = method_color(s.method);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << "<line x1=\"" << fnum(px(s.x[i])) << "\" y1=\"" << fnum(py(s.lo[i]))
                << "\" x2=\"" << fnum(px(s.x[i])) << "\" y2=\"" << fnum(py(s.hi[i]))
                << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            for (double yv : {s.lo[i], s.hi[i]})
                out << "<line x1=\"" << fnum(px(s.x[i]) - 3) << "\" y1=\"" << fnum(py(yv))
                    << "\" x2=\"" << fnum(px(s.x[i]) + 3) << "\" y2=\"" << fnum(py(yv))
                    << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << (i ? " " : "") << fnum(px(s.x[i])) << "," << fnum(py(s.y[i]));
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << "<circle cx=\"" << fnum(px(s.x[i])) << "\" cy=\"" << fnum(py(s.y[i]))
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
}

} // namespace detail

/// Renders the summary rows into a two-panel SVG document.
inline std::string render_summary_plot(const std::vector<CellSummary>& summaries) {
    if (summaries.empty()) throw Error("render_summary_plot: no summary rows");

    // panel 1: fidelity vs sigma at the m with the most rows
    std::map<int, int> m_counts;
    std::map<double, int> sigma_counts;
    for (const auto& s : summaries) {
        ++m_counts[s.m];
        ++sigma_counts[s.sigma];
    }
    const int panel_m =
        std::max_element(m_counts.begin(), m_counts.end(), [](const auto& a, const auto& b) {
            return a.second < b.second || (a.second == b.second && a.first > b.first);
        })->first;
    const double panel_sigma =
        std::max_element(sigma_counts.begin(), sigma_counts.end(), [](const auto& a, const auto& b) {
            return a.second < b.second || (a.second == b.second && a.first > b.first);
        })->first;

    const std::vector<Method> method_order{Method::vienna, Method::vienna_reduced, Method::brisbane,
                                           Method::bristol};

    auto build_panel = [&](bool vs_sigma) {
        detail::Panel panel;
        panel.title = vs_sigma ? "fidelity vs sigma (m = " + std::to_string(panel_m) + ")"
                               : "fidelity vs m (sigma = " + detail::fnum(panel_sigma) + ")";
        panel.x_label = vs_sigma ? "sigma" : "m";
        for (Method method : method_order) {
            detail::Series series;
            series.method = method;
            for (const auto& s : summaries) {
                if (s.method != method) continue;
                if (vs_sigma && s.m != panel_m) continue;
                if (!vs_sigma && s.sigma != panel_sigma) continue;
                series.x.push_back(vs_sigma ? s.sigma : s.m);
                series.y.push_back(s.fit.mode);
                series.lo.push_back(s.fit.mode - s.fit.err_left);
                series.hi.push_back(s.fit.mode + s.fit.err_right);
            }
            if (series.x.empty()) continue;
            std::vector<std::size_t> order(series.x.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return series.x[a] < series.x[b]; });
            detail::Series sorted;
            sorted.method = method;
            for (std::size_t i : order) {
                sorted.x.push_back(series.x[i]);
                sorted.y.push_back(series.y[i]);
                sorted.lo.push_back(series.lo[i]);
                sorted.hi.push_back(series.hi[i]);
            }
            panel.series.push_back(std::move(sorted));
        }
        return panel;
    };

    const detail::Panel left = build_panel(true);
    const detail::Panel right = build_panel(false);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"400\" "
           "viewBox=\"0 0 900 400\">\n";
    out << "<rect width=\"900\" height=\"400\" fill=\"white\"/>\n";
    detail::render_panel(out, left, 0, 0, 440, 360);
    detail::render_panel(out, right, 440, 0, 440, 360);

    double lx = 60;
    for (Method method : method_order) {
        bool present = false;
        for (const auto& s : summaries)
            if (s.method == method) present = true;
        if (!present) continue;
        out << "<rect x=\"" << detail::fnum(lx) << "\" y=\"372\" width=\"12\" height=\"12\" fill=\""
            << detail::method_color(method) << "\"/>\n";
        out << "<text x=\"" << detail::fnum(lx + 16)
            << "\" y=\"382\" font-size=\"11\" font-family=\"sans-serif\">" << to_string(method)
            << "</text>\n";
        lx += 140;
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace svg
} // namespace lonrec
