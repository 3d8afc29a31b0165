#include "halmarket/charts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "halmarket/types.hpp"

namespace halmarket {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 72.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 48.0;
constexpr double kMarginBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double span = hi - lo;
        lo -= 0.05 * span;
        hi += 0.05 * span;
    }
};

double tick_step(const Range& r, int target) {
    const double raw = (r.hi - r.lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_line_chart_svg(const ChartSpec& spec) {
    Range xr, yr;
    for (const auto& s : spec.series)
        for (const auto& [x, y] : s.points) {
            xr.include(x);
            if (std::isfinite(y)) {
                xr.include(x);
                yr.include(y);
            }
        }
    if (spec.marker) {
        xr.include(spec.marker->x);
        yr.include(spec.marker->y);
    }
    xr.pad();
    yr.pad();

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto sy = [&](double y) { return kMarginTop + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           xml_escape(spec.title) + "</text>\n";

    // axes
    svg += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(kMarginTop + plot_h) + "\" x2=\"" +
           num(kMarginLeft + plot_w) + "\" y2=\"" + num(kMarginTop + plot_h) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(kMarginTop) + "\" x2=\"" +
           num(kMarginLeft) + "\" y2=\"" + num(kMarginTop + plot_h) + "\" stroke=\"black\"/>\n";

    const double xstep = tick_step(xr, 8);
    for (double x = std::ceil(xr.lo / xstep) * xstep; x <= xr.hi + 1e-12; x += xstep) {
        svg += "<line x1=\"" + num(sx(x)) + "\" y1=\"" + num(kMarginTop + plot_h) + "\" x2=\"" +
               num(sx(x)) + "\" y2=\"" + num(kMarginTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(sx(x)) + "\" y=\"" + num(kMarginTop + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + num(x) +
               "</text>\n";
    }
    const double ystep = tick_step(yr, 6);
    for (double y = std::ceil(yr.lo / ystep) * ystep; y <= yr.hi + 1e-12; y += ystep) {
        svg += "<line x1=\"" + num(kMarginLeft - 5) + "\" y1=\"" + num(sy(y)) + "\" x2=\"" +
               num(kMarginLeft) + "\" y2=\"" + num(sy(y)) + "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(sy(y)) + "\" x2=\"" +
               num(kMarginLeft + plot_w) + "\" y2=\"" + num(sy(y)) +
               "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
        svg += "<text x=\"" + num(kMarginLeft - 9) + "\" y=\"" + num(sy(y) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(y) +
               "</text>\n";
    }

    svg += "<text x=\"" + num(kMarginLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(spec.x_label) +
           "</text>\n";
    svg += "<text x=\"18\" y=\"" + num(kMarginTop + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
           num(kMarginTop + plot_h / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";

    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        const auto& s = spec.series[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string path;
        bool pen_down = false;
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(y)) {
                pen_down = false;  // break the line at inactive points
                continue;
            }
            path += pen_down ? " L " : " M ";
            path += num(sx(x)) + " " + num(sy(y));
            pen_down = true;
        }
        if (!path.empty())
            svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"1.8\"/>\n";
    }

    if (spec.marker) {
        const double mx = sx(spec.marker->x);
        svg += "<line x1=\"" + num(mx) + "\" y1=\"" + num(kMarginTop) + "\" x2=\"" + num(mx) +
               "\" y2=\"" + num(kMarginTop + plot_h) +
               "\" stroke=\"#555555\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n";
        svg += "<circle cx=\"" + num(mx) + "\" cy=\"" + num(sy(spec.marker->y)) +
               "\" r=\"3.5\" fill=\"#555555\"/>\n";
        svg += "<text x=\"" + num(mx + 6) + "\" y=\"" + num(kMarginTop + 14) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(spec.marker->label) + "</text>\n";
    }

    // legend
    const double lx = kMarginLeft + plot_w - 150.0;
    double ly = kMarginTop + 10.0;
    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 22) +
               "\" y2=\"" + num(ly) + "\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(spec.series[i].label) +
               "</text>\n";
        ly += 18.0;
    }

    svg += "</svg>\n";
    return svg;
}

std::vector<CsvRow> parse_sweep_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (start <= line.size()) {
            const std::size_t comma = std::min(line.find(',', start), line.size());
            fields.push_back(line.substr(start, comma - start));
            if (comma == line.size()) break;
            start = comma + 1;
        }
        if (fields.size() != 13)
            throw ValidationError("sweep CSV: expected 13 fields, got " +
                                  std::to_string(fields.size()));

        auto as_double = [&](std::string_view f) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size())
                throw ValidationError("sweep CSV: bad number '" + std::string(f) + "'");
            return v;
        };

        CsvRow row;
        row.mu = as_double(fields[0]);
        row.delta = as_double(fields[1]);
        row.beta = as_double(fields[2]);
        row.model = std::string(fields[3]);
        row.effort = as_double(fields[4]);
        row.price = as_double(fields[5]);
        row.hallucination = as_double(fields[6]);
        row.welfare = as_double(fields[7]);
        row.v_high = as_double(fields[8]);
        row.v_low = as_double(fields[9]);
        row.delta_lower = as_double(fields[10]);
        row.binding = std::string(fields[11]);
        row.active = fields[12] == "true";
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace halmarket
