#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace plgate::cli {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170; // legend column
constexpr double kTop = 40;
constexpr double kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// XML comments may not contain "--".
std::string comment_safe(std::string s) {
    for (std::size_t p = s.find("--"); p != std::string::npos; p = s.find("--", p)) {
        s.replace(p, 2, "- -");
    }
    return s;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

// Round step for about `target` ticks.
double tick_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (const double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

std::string tick_label(double v, double step) {
    char buf[32];
    const int digits = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
    std::snprintf(buf, sizeof buf, "%.*f", std::min(digits, 6), std::abs(v) < step * 1e-9 ? 0.0 : v);
    return buf;
}

void header(std::ostringstream& os, const std::string& title, const std::string& x_label, const std::string& y_label) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << xml_escape(title) << "</text>\n";
    os << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"" << px(kHeight - 12)
       << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << px((kTop + kHeight - kBottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";
}

void y_axis(std::ostringstream& os, const Range& y, double x0, double x1, double y0, double y1) {
    const double step = tick_step(y.hi - y.lo, 5);
    for (double v = std::ceil(y.lo / step) * step; v <= y.hi + step * 1e-9; v += step) {
        const double py = y1 - (v - y.lo) / (y.hi - y.lo) * (y1 - y0);
        os << "<line x1=\"" << px(x0) << "\" y1=\"" << px(py) << "\" x2=\"" << px(x1) << "\" y2=\"" << px(py)
           << "\" stroke=\"#e6e6e6\"/>\n";
        os << "<text x=\"" << px(x0 - 6) << "\" y=\"" << px(py + 4) << "\" text-anchor=\"end\">"
           << tick_label(v, step) << "</text>\n";
    }
    os << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(x1 - x0) << "\" height=\""
       << px(y1 - y0) << "\" fill=\"none\" stroke=\"#333\"/>\n";
}

} // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string render_svg(const LineChart& c) {
    Range xr;
    Range yr;
    for (const auto& s : c.series) {
        for (const double v : s.x) {
            xr.add(v);
        }
        for (const double v : s.y) {
            yr.add(v);
        }
    }
    xr.finish();
    yr.finish();
    const double pad = 0.05 * (yr.hi - yr.lo);
    yr.lo -= pad;
    yr.hi += pad;

    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kTop;
    const double y1 = kHeight - kBottom;
    auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

    std::ostringstream os;
    header(os, c.title, c.x_label, c.y_label);
    os << "<!-- data\n";
    for (const auto& s : c.series) {
        os << "series " << comment_safe(s.name) << '\n';
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            os << num(s.x[i]) << ' ' << num(s.y[i]) << '\n';
        }
    }
    os << "-->\n";

    y_axis(os, yr, x0, x1, y0, y1);
    const double xstep = tick_step(xr.hi - xr.lo, 6);
    for (double v = std::ceil(xr.lo / xstep) * xstep; v <= xr.hi + xstep * 1e-9; v += xstep) {
        os << "<text x=\"" << px(sx(v)) << "\" y=\"" << px(y1 + 16) << "\" text-anchor=\"middle\">"
           << tick_label(v, xstep) << "</text>\n";
    }

    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.6\"";
        if (s.dashed) {
            os << " stroke-dasharray=\"6 4\"";
        }
        os << " points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            os << (i ? " " : "") << px(sx(s.x[i])) << ',' << px(sy(s.y[i]));
        }
        os << "\"/>\n";
        if (s.markers) {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
                os << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\"" << px(sy(s.y[i])) << "\" r=\"3\" fill=\""
                   << colour << "\"/>\n";
            }
        }
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << px(x1 + 14) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(x1 + 38) << "\" y2=\""
           << px(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
           << "/>\n";
        os << "<text x=\"" << px(x1 + 44) << "\" y=\"" << px(ly + 4) << "\">" << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_svg(const BarChart& c) {
    Range yr;
    yr.add(0.0);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        const double e = i < c.errors.size() ? c.errors[i] : 0.0;
        yr.add(c.values[i] + e);
        yr.add(c.values[i] - e);
    }
    yr.finish();
    yr.hi += 0.05 * (yr.hi - yr.lo);

    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kTop;
    const double y1 = kHeight - kBottom;
    auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

    std::ostringstream os;
    header(os, c.title, c.x_label, c.y_label);
    os << "<!-- data\n";
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        os << comment_safe(i < c.labels.size() ? c.labels[i] : std::to_string(i)) << ' ' << num(c.values[i]);
        if (i < c.errors.size()) {
            os << ' ' << num(c.errors[i]);
        }
        os << '\n';
    }
    os << "-->\n";
    y_axis(os, yr, x0, x1, y0, y1);

    const double slot = (x1 - x0) / static_cast<double>(std::max<std::size_t>(c.values.size(), 1));
    const double bar = slot * 0.6;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
        const double top = sy(std::max(c.values[i], 0.0));
        const double bottom = sy(std::min(c.values[i], 0.0));
        const bool hot = i < c.highlight.size() && c.highlight[i];
        os << "<rect x=\"" << px(cx - bar / 2) << "\" y=\"" << px(top) << "\" width=\"" << px(bar) << "\" height=\""
           << px(bottom - top) << "\" fill=\"" << (hot ? kPalette[1] : kPalette[0]) << "\"/>\n";
        if (i < c.errors.size() && c.errors[i] > 0.0) {
            const double hi = sy(c.values[i] + c.errors[i]);
            const double lo = sy(c.values[i] - c.errors[i]);
            os << "<path d=\"M" << px(cx) << ',' << px(lo) << "V" << px(hi) << "M" << px(cx - 5) << ',' << px(hi)
               << "H" << px(cx + 5) << "M" << px(cx - 5) << ',' << px(lo) << "H" << px(cx + 5)
               << "\" stroke=\"#222\" fill=\"none\"/>\n";
        }
        const std::string label = i < c.labels.size() ? c.labels[i] : std::to_string(i + 1);
        os << "<text x=\"" << px(cx) << "\" y=\"" << px(y1 + 16) << "\" text-anchor=\"middle\">" << xml_escape(label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace plgate::cli
