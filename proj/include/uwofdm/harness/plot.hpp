#pragma once

// Minimal SVG line plots with a log-scale y axis.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uwofdm/harness/results.hpp"

namespace uwofdm::harness {

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

inline std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return b;
}

} // namespace detail

/// Renders the plot; points with y <= 0 are dropped (log axis).
inline std::string render_svg(const PlotSpec& p) {
    const double w = 720, h = 480, ml = 80, mr = 220, mt = 40, mb = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    require(xmin <= xmax, errc::invalid_argument, "nothing to plot: no positive values");
    if (xmax == xmin) xmax = xmin + 1.0;
    const double ly0 = std::floor(std::log10(ymin)), ly1 = std::max(ly0 + 1.0, std::ceil(std::log10(ymax)));
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return mt + (ly1 - std::log10(y)) / (ly1 - ly0) * (h - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::xml_escape(p.title)
       << "</text>\n";
    for (double e = ly0; e <= ly1 + 1e-9; e += 1.0) {
        const double y = py(std::pow(10.0, e));
        os << "<line x1=\"" << ml << "\" x2=\"" << w - mr << "\" y1=\"" << detail::num(y) << "\" y2=\""
           << detail::num(y) << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << detail::num(y + 4) << "\" text-anchor=\"end\">1e" << e
           << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        os << "<text x=\"" << detail::num(px(xv)) << "\" y=\"" << h - mb + 18 << "\" text-anchor=\"middle\">"
           << detail::num(xv) << "</text>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
       << detail::xml_escape(p.x_label) << "</text>\n";
    os << "<text transform=\"translate(20," << (mt + h - mb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << detail::xml_escape(p.y_label) << "</text>\n";
    for (std::size_t si = 0; si < p.series.size(); ++si) {
        const auto& s = p.series[si];
        const char* col = colors[si % 10];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0)) continue;
            pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
            os << "<circle cx=\"" << detail::num(px(s.x[i])) << "\" cy=\"" << detail::num(py(s.y[i]))
               << "\" r=\"3\" fill=\"" << col << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        const double ly = mt + 14.0 + 18.0 * static_cast<double>(si);
        os << "<line x1=\"" << w - mr + 10 << "\" x2=\"" << w - mr + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
           << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << w - mr + 36 << "\" y=\"" << ly + 4 << "\">" << detail::xml_escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

using RowFilter = std::function<bool(const ResultRow&)>;

/// One curve per (system, tier) for MSE tables and per (system, tier,
/// epsilon) for BER tables.
inline PlotSpec plot_from_table(const ResultTable& t, const std::string& title, const RowFilter& keep = {}) {
    PlotSpec p;
    p.title = title;
    const bool ber = t.kind == ExperimentKind::ber_sweep;
    p.x_label = ber ? "Eb/N0 [dB]" : "epsilon";
    p.y_label = ber ? "BER" : "BMSE per data symbol";
    std::map<std::string, std::size_t> index;
    for (const auto& r : t.rows) {
        if (keep && !keep(r)) continue;
        std::string label = r.system + " " + r.tier;
        if (ber) label += " eps=" + detail::num(r.epsilon);
        auto it = index.find(label);
        if (it == index.end()) {
            it = index.emplace(label, p.series.size()).first;
            p.series.push_back(PlotSeries{label, {}, {}});
        }
        p.series[it->second].x.push_back(ber ? r.ebn0_db : r.epsilon);
        p.series[it->second].y.push_back(r.value);
    }
    return p;
}

/// Writes `path` (SVG). Refuses an empty selection.
inline void emit_plots(const ResultTable& t, const std::string& path, const std::string& title = "",
                       const RowFilter& keep = {}) {
    const PlotSpec p = plot_from_table(t, title, keep);
    require(!p.series.empty(), errc::io_error, "refusing to write " + path + ": the row selection is empty");
    write_text(path, render_svg(p));
}

} // namespace uwofdm::harness
