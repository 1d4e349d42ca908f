#include "xmorph/plot.hpp"

#include "xmorph/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace xmorph {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string exact(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string escape(const std::string& s) {
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

// 1, 2, 5 x 10^k step giving roughly `target` intervals.
double nice_step(double span, int target) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= f * mag) return f * mag;
    }
    return 10.0 * mag;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
    const double left = 64, right = 150, top = 40, bottom = 56;
    const double w = chart.width, h = chart.height;
    const double pw = w - left - right, ph = h - top - bottom;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : chart.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double sp = i < s.spread.size() ? s.spread[i] : 0.0;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - sp);
            ymax = std::max(ymax, s.y[i] + sp);
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (chart.y_min) ymin = *chart.y_min;
    if (chart.y_max) ymax = *chart.y_max;
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (1.0 - (std::clamp(y, ymin, ymax) - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << chart.height
      << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(chart.title) << "</text>\n";

    const double ystep = nice_step(ymax - ymin, 5);
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
        o << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(y)) << "\" y2=\""
          << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
          << "</text>\n";
    }
    const double xstep = nice_step(xmax - xmin, 6);
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
        o << "<line x1=\"" << num(px(x)) << "\" x2=\"" << num(px(x)) << "\" y1=\"" << num(top + ph) << "\" y2=\""
          << num(top + ph + 4) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << num(x)
          << "</text>\n";
    }
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 14) << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";

    int legend = 0;
    for (const auto& s : chart.series) {
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (n == 0) continue;
        if (s.spread.size() >= n) {
            o << "<polygon class=\"band\" fill=\"" << s.color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < n; ++i) o << num(px(s.x[i])) << ',' << num(py(s.y[i] + s.spread[i])) << ' ';
            for (std::size_t i = n; i-- > 0;) o << num(px(s.x[i])) << ',' << num(py(s.y[i] - s.spread[i])) << ' ';
            o << "\"/>\n";
        }
        o << "<polyline class=\"series\" data-label=\"" << escape(s.label) << "\" fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < n; ++i) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        o << "\"/>\n";
        for (std::size_t i = 0; i < n && !s.dashed; ++i) {
            o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
              << "\" data-x=\"" << exact(s.x[i]) << "\" data-y=\"" << exact(s.y[i]) << "\"/>\n";
        }
        const double ly = top + 12 + 18 * legend++;
        o << "<line x1=\"" << num(left + pw + 12) << "\" x2=\"" << num(left + pw + 36) << "\" y1=\"" << num(ly)
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
          << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        o << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg(const LineChart& chart, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << render_svg(chart);
}

std::map<std::string, LineChart> report_charts(const std::vector<ReportRow>& rows) {
    // key -> condition -> budget -> accuracies
    std::map<std::string, std::map<std::string, std::map<int, std::vector<double>>>> grouped;
    for (const auto& r : rows) grouped[r.task + "_" + r.method][r.condition][r.budget].push_back(r.accuracy);

    std::map<std::string, LineChart> charts;
    for (const auto& [key, conditions] : grouped) {
        LineChart chart;
        chart.title = key;
        chart.x_label = key.rfind("objectId", 0) == 0 ? "trials per object" : "target objects";
        chart.y_label = "accuracy (%)";
        chart.y_min = 0.0;
        chart.y_max = 100.0;
        auto stats = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return std::pair{mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
        };
        std::vector<double> xs;
        for (const std::string name : {"baseline", "transfer"}) {
            const auto it = conditions.find(name);
            if (it == conditions.end()) continue;
            ChartSeries s;
            s.label = name;
            s.color = name == "baseline" ? "#1f77b4" : "#d62728";
            for (const auto& [budget, acc] : it->second) {
                const auto [mean, sd] = stats(acc);
                s.x.push_back(budget);
                s.y.push_back(mean);
                s.spread.push_back(sd);
            }
            if (xs.empty()) xs = s.x;
            chart.series.push_back(std::move(s));
        }
        if (const auto it = conditions.find("reference"); it != conditions.end() && !xs.empty()) {
            std::vector<double> all;
            for (const auto& [_, acc] : it->second) all.insert(all.end(), acc.begin(), acc.end());
            ChartSeries s;
            s.label = "all data";
            s.color = "#555555";
            s.dashed = true;
            s.x = {xs.front(), xs.back()};
            s.y = {stats(all).first, stats(all).first};
            chart.series.push_back(std::move(s));
        }
        charts[key] = std::move(chart);
    }
    return charts;
}

}  // namespace xmorph
