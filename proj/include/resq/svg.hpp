#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace resq::svg {

// Minimal dependency-free SVG plotting for batch reports: line/scatter series
// on linear or log axes. Output is deterministic for identical inputs.

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool points_only = false;
    std::string label;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 520;
};

namespace detail {

inline std::string escape(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o.push_back(c);
        }
    }
    return o;
}

inline std::string num(double v)
{
    std::ostringstream ss;
    ss << std::setprecision(8) << v;
    return ss.str();
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;
    double transform(double v) const { return log ? std::log10(v) : v; }
    bool valid(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

inline std::vector<double> linear_ticks(double lo, double hi)
{
    const double range = hi - lo;
    if (!(range > 0.0)) return {lo};
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * range; v += step)
        t.push_back(v);
    return t;
}

inline std::string tick_label(double v, bool log_axis)
{
    std::ostringstream ss;
    if (log_axis) {
        ss << "1e" << int(std::lround(v));  // v is the decade exponent
    } else {
        ss << std::setprecision(6) << v;
    }
    return ss.str();
}

}  // namespace detail

inline std::string render(const PlotSpec& spec, const std::vector<Series>& series)
{
    using namespace detail;
    const double ml = 70, mr = 20, mt = spec.title.empty() ? 16 : 36, mb = 46;
    const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;

    Axis ax{0, 1, spec.log_x}, ay{0, 1, spec.log_y};
    bool any = false;
    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!ax.valid(s.x[i]) || !ay.valid(s.y[i])) continue;
            const double tx = ax.transform(s.x[i]), ty = ay.transform(s.y[i]);
            if (!any) {
                xlo = xhi = tx;
                ylo = yhi = ty;
                any = true;
            }
            xlo = std::min(xlo, tx);
            xhi = std::max(xhi, tx);
            ylo = std::min(ylo, ty);
            yhi = std::max(yhi, ty);
        }
    if (!any) {
        xlo = ylo = 0;
        xhi = yhi = 1;
    }
    if (xhi - xlo < 1e-12) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (yhi - ylo < 1e-12) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    const double xpad = 0.04 * (xhi - xlo), ypad = 0.06 * (yhi - ylo);
    xlo -= xpad;
    xhi += xpad;
    ylo -= ypad;
    yhi += ypad;

    auto px = [&](double tx) { return ml + (tx - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double ty) { return mt + ph - (ty - ylo) / (yhi - ylo) * ph; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
        << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
        << ' ' << spec.height << "\">\n";
    out << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" fill=\"white\"/>\n";

    // gridlines + tick labels
    auto emit_ticks = [&](const Axis& axis, double lo, double hi, bool is_x) {
        std::vector<double> ticks;
        if (axis.log) {
            int d0 = int(std::ceil(lo)), d1 = int(std::floor(hi));
            int step = std::max(1, (d1 - d0) / 8 + ((d1 - d0) % 8 ? 1 : 0));
            for (int d = d0; d <= d1; d += step) ticks.push_back(d);
        } else {
            ticks = linear_ticks(lo, hi);
        }
        for (double t : ticks) {
            if (is_x) {
                const double x = px(t);
                out << "<line x1=\"" << num(x) << "\" y1=\"" << num(mt) << "\" x2=\""
                    << num(x) << "\" y2=\"" << num(mt + ph)
                    << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
                out << "<text x=\"" << num(x) << "\" y=\"" << num(mt + ph + 16)
                    << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">"
                    << escape(tick_label(t, axis.log)) << "</text>\n";
            } else {
                const double y = py(t);
                out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(y) << "\" x2=\""
                    << num(ml + pw) << "\" y2=\"" << num(y)
                    << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
                out << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(y + 4)
                    << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333333\">"
                    << escape(tick_label(t, axis.log)) << "</text>\n";
            }
        }
    };
    emit_ticks(ax, xlo, xhi, true);
    emit_ticks(ay, ylo, yhi, false);

    out << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            if (ax.valid(s.x[i]) && ay.valid(s.y[i]))
                pts.emplace_back(px(ax.transform(s.x[i])), py(ay.transform(s.y[i])));
        if (pts.empty()) continue;
        if (s.points_only) {
            for (const auto& [x, y] : pts)
                out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y)
                    << "\" r=\"3\" fill=\"" << escape(s.color) << "\"/>\n";
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << escape(s.color)
                << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts) out << num(x) << ',' << num(y) << ' ';
            out << "\"/>\n";
        }
    }

    // legend
    double ly = mt + 14;
    for (const auto& s : series) {
        if (s.label.empty()) continue;
        out << "<rect x=\"" << num(ml + pw - 150) << "\" y=\"" << num(ly - 9)
            << "\" width=\"10\" height=\"10\" fill=\"" << escape(s.color) << "\"/>\n";
        out << "<text x=\"" << num(ml + pw - 135) << "\" y=\"" << num(ly)
            << "\" font-size=\"11\" fill=\"#333333\">" << escape(s.label)
            << "</text>\n";
        ly += 16;
    }

    if (!spec.title.empty())
        out << "<text x=\"" << num(ml + pw / 2) << "\" y=\"22\" font-size=\"14\" "
               "text-anchor=\"middle\" fill=\"#000000\">"
            << escape(spec.title) << "</text>\n";
    out << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(mt + ph + 36)
        << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#000000\">"
        << escape(spec.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(mt + ph / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#000000\" "
           "transform=\"rotate(-90 16 "
        << num(mt + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace resq::svg
