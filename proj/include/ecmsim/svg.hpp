#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ecmsim/errors.hpp"
#include "ecmsim/io.hpp"

// Self-contained SVG line charts: one polyline per series, a legend, and
// optional horizontal reference lines. No dependencies, static output.

namespace ecmsim::svg {

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

struct RefLine {
    double y;
    std::string label;
};

namespace detail {

inline const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<RefLine> reference_lines;
    int width = 960;
    int height = 540;
};

inline std::string render_svg_lines_to_string(const std::vector<Series>& series,
                                              const ChartSpec& spec) {
    if (series.empty()) throw ValidationError("svg chart needs at least one series");
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    bool first = true;
    for (const auto& s : series) {
        if (s.xs.empty() || s.xs.size() != s.ys.size()) {
            throw ValidationError("svg series \"" + s.label + "\" is empty or ragged");
        }
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) {
                throw ValidationError("svg series \"" + s.label + "\" has non-finite values");
            }
            if (first) {
                x_min = x_max = s.xs[i];
                y_min = y_max = s.ys[i];
                first = false;
            }
            x_min = std::min(x_min, s.xs[i]);
            x_max = std::max(x_max, s.xs[i]);
            y_min = std::min(y_min, s.ys[i]);
            y_max = std::max(y_max, s.ys[i]);
        }
    }
    for (const auto& ref : spec.reference_lines) {
        if (!std::isfinite(ref.y)) throw ValidationError("reference line is non-finite");
        y_min = std::min(y_min, ref.y);
        y_max = std::max(y_max, ref.y);
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
    const double x_pad = 0.02 * (x_max - x_min);
    const double y_pad = 0.06 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min -= y_pad;
    y_max += y_pad;

    const double left = 70, right = 24, top = 42, bottom = 52;
    const double plot_w = spec.width - left - right;
    const double plot_h = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) {
        return top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
    };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(spec.width) + "\" height=\"" + std::to_string(spec.height) +
           "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
           std::to_string(spec.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty()) {
        out += "<text x=\"" + detail::num(spec.width / 2.0) +
               "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" +
               detail::escape(spec.title) + "</text>\n";
    }

    // axes rectangle and ticks
    out += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(top) +
           "\" width=\"" + detail::num(plot_w) + "\" height=\"" + detail::num(plot_h) +
           "\" fill=\"none\" stroke=\"#333333\"/>\n";
    const int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
        const double fx = x_min + (x_max - x_min) * t / ticks;
        const double fy = y_min + (y_max - y_min) * t / ticks;
        char label[32];
        out += "<line x1=\"" + detail::num(px(fx)) + "\" y1=\"" + detail::num(top + plot_h) +
               "\" x2=\"" + detail::num(px(fx)) + "\" y2=\"" +
               detail::num(top + plot_h + 5) + "\" stroke=\"#333333\"/>\n";
        std::snprintf(label, sizeof(label), "%.4g", fx);
        out += "<text x=\"" + detail::num(px(fx)) + "\" y=\"" +
               detail::num(top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               label + "</text>\n";
        out += "<line x1=\"" + detail::num(left - 5) + "\" y1=\"" + detail::num(py(fy)) +
               "\" x2=\"" + detail::num(left) + "\" y2=\"" + detail::num(py(fy)) +
               "\" stroke=\"#333333\"/>\n";
        std::snprintf(label, sizeof(label), "%.4g", fy);
        out += "<text x=\"" + detail::num(left - 9) + "\" y=\"" +
               detail::num(py(fy) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               label + "</text>\n";
    }
    out += "<text x=\"" + detail::num(left + plot_w / 2) + "\" y=\"" +
           detail::num(spec.height - 12.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           detail::escape(spec.x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + detail::num(top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 16 " +
           detail::num(top + plot_h / 2) + ")\">" + detail::escape(spec.y_label) +
           "</text>\n";

    for (const auto& ref : spec.reference_lines) {
        out += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(py(ref.y)) +
               "\" x2=\"" + detail::num(left + plot_w) + "\" y2=\"" +
               detail::num(py(ref.y)) +
               "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
        if (!ref.label.empty()) {
            out += "<text x=\"" + detail::num(left + plot_w - 6) + "\" y=\"" +
                   detail::num(py(ref.y) - 4) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
                   "fill=\"#666666\">" +
                   detail::escape(ref.label) + "</text>\n";
        }
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = detail::kPalette[s % detail::kPaletteSize];
        std::string points;
        for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
            points += detail::num(px(series[s].xs[i])) + "," +
                      detail::num(py(series[s].ys[i])) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
    }

    // legend
    const double legend_x = left + 12;
    double legend_y = top + 16;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = detail::kPalette[s % detail::kPaletteSize];
        out += "<line x1=\"" + detail::num(legend_x) + "\" y1=\"" +
               detail::num(legend_y - 4) + "\" x2=\"" + detail::num(legend_x + 22) +
               "\" y2=\"" + detail::num(legend_y - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + detail::num(legend_x + 28) + "\" y=\"" +
               detail::num(legend_y) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" +
               detail::escape(series[s].label) + "</text>\n";
        legend_y += 16;
    }
    out += "</svg>\n";
    return out;
}

inline void render_svg_lines(const std::vector<Series>& series, const ChartSpec& spec,
                             const std::string& path) {
    io::atomic_write_text(path, render_svg_lines_to_string(series, spec));
}

}  // namespace ecmsim::svg
