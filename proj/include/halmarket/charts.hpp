#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace halmarket {

struct ChartSeries {
    std::string label;
    // NaN y values break the polyline (used for inactive market points)
    std::vector<std::pair<double, double>> points;
};

struct ChartMarker {
    double x = 0.0;
    double y = 0.0;
    std::string label;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    std::optional<ChartMarker> marker;
};

/// Minimal self-contained SVG line chart: axes, ticks, series, legend and an
/// optional crossing marker. Output bytes are a pure function of the inputs.
std::string render_line_chart_svg(const ChartSpec& spec);

/// One parsed row of the fixed-schema sweep CSV.
struct CsvRow {
    double mu, delta, beta;
    std::string model;
    double effort, price, hallucination, welfare, v_high, v_low, delta_lower;
    std::string binding;
    bool active;
};

std::vector<CsvRow> parse_sweep_csv(std::string_view text);

}  // namespace halmarket
