#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mrdl::metrics {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // scatter points instead of a polyline
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    double width = 640;
    double height = 440;
};

/// Self-contained SVG: axes with ticks, one colour per series, legend.
std::string render_svg(const LinePlot& plot);
void write_svg(const std::filesystem::path& path, const LinePlot& plot);

}  // namespace mrdl::metrics
