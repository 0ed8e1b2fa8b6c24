#pragma once

// Minimal self-contained SVG charts. Every chart embeds its numbers in an XML
// comment so a plot can be read back without the program that drew it.

#include <string>
#include <vector>

namespace plgate::cli {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
    bool markers = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

struct BarChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> labels;
    std::vector<double> values;
    std::vector<double> errors; ///< half-height of the error bar; may be empty
    std::vector<bool> highlight; ///< drawn in the accent colour; may be empty
};

std::string render_svg(const LineChart& c);
std::string render_svg(const BarChart& c);

/// Escapes &, <, > and quotes for attribute and text content.
std::string xml_escape(const std::string& s);

} // namespace plgate::cli
