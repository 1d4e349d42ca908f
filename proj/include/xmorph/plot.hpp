#pragma once

#include "xmorph/eval.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xmorph {

struct ChartSeries {
    std::string label;
    std::string color;  // any SVG color
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> spread;  // optional +/- band, same length as y
    bool dashed = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    std::optional<double> y_min, y_max;
    int width = 640;
    int height = 420;
};

std::string render_svg(const LineChart& chart);
void write_svg(const LineChart& chart, const std::filesystem::path& path);

// One chart per "task_method" key: repeat-mean baseline and transfer curves
// with +/- one std bands, plus A_all as a dashed line.
std::map<std::string, LineChart> report_charts(const std::vector<ReportRow>& rows);

}  // namespace xmorph
