#include "halmarket/figures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "halmarket/charts.hpp"

namespace halmarket {

namespace {

constexpr double kDefaultMuLo = 0.05;
constexpr double kDefaultMuHi = 0.95;
constexpr double kDefaultMuStep = 0.05;

std::string label_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<double> figure_mu_grid(const Scenario& sc) {
    if (!sc.mu_grid.empty()) return sc.mu_grid;
    std::vector<double> grid;
    for (double mu = kDefaultMuLo; mu <= kDefaultMuHi + 1e-12; mu += kDefaultMuStep)
        grid.push_back(mu);
    return grid;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// One chart series per distinct secondary value, first-appearance order.
// With break_at_inactive, inactive rows become NaN points and cut the polyline.
template <typename KeyFn, typename ValueFn>
std::vector<ChartSeries> group_series(const std::vector<CsvRow>& rows, KeyFn key, ValueFn value,
                                      const std::string& label_prefix,
                                      bool break_at_inactive = true) {
    std::vector<ChartSeries> series;
    std::vector<std::string> labels;
    for (const auto& row : rows) {
        const std::string label = label_prefix + key(row);
        std::size_t idx = labels.size();
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) {
                idx = i;
                break;
            }
        if (idx == labels.size()) {
            labels.push_back(label);
            series.push_back(ChartSeries{label, {}});
        }
        const double y = (break_at_inactive && !row.active)
                             ? std::numeric_limits<double>::quiet_NaN()
                             : value(row);
        series[idx].points.emplace_back(row.mu, y);
    }
    return series;
}

}  // namespace

FiguresReport make_figures(const Scenario& scenario, const std::filesystem::path& out_dir,
                           int threads) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

    FiguresReport report;
    const std::vector<double> mu_grid = figure_mu_grid(scenario);

    auto write_csv = [&](const std::string& stem, const std::vector<SweepRow>& rows) {
        const std::filesystem::path path = out_dir / (stem + ".csv");
        write_file(path, sweep_csv(rows));
        report.written.push_back(path);
        return path;
    };
    auto write_svg = [&](const std::string& stem, const ChartSpec& spec) {
        const std::filesystem::path path = out_dir / (stem + ".svg");
        write_file(path, render_line_chart_svg(spec));
        report.written.push_back(path);
    };

    // effort over mu, one series per discount factor
    {
        SweepRequest req;
        req.axis = SweepAxis::Mu;
        req.grid = mu_grid;
        req.threads = threads;
        if (!scenario.delta_list.empty()) req.by = SweepAxis::Delta;
        const auto csv_path = write_csv("effort_by_delta", run_sweep(scenario, req));

        ChartSpec spec;
        spec.title = "Equilibrium verification effort by discount factor";
        spec.x_label = "high-type share mu";
        spec.y_label = "equilibrium effort";
        spec.series = group_series(
            parse_sweep_csv(read_file(csv_path)),
            [](const CsvRow& r) { return label_number(r.delta); },
            [](const CsvRow& r) { return r.effort; }, "delta = ");
        write_svg("effort_by_delta", spec);
    }

    // effort over mu, one series per verification efficacy
    {
        SweepRequest req;
        req.axis = SweepAxis::Mu;
        req.grid = mu_grid;
        req.threads = threads;
        if (!scenario.beta_list.empty()) req.by = SweepAxis::Beta;
        const auto csv_path = write_csv("effort_by_beta", run_sweep(scenario, req));

        ChartSpec spec;
        spec.title = "Equilibrium verification effort by verification efficacy";
        spec.x_label = "high-type share mu";
        spec.y_label = "equilibrium effort";
        spec.series = group_series(
            parse_sweep_csv(read_file(csv_path)),
            [](const CsvRow& r) { return label_number(r.beta); },
            [](const CsvRow& r) { return r.effort; }, "beta = ");
        write_svg("effort_by_beta", spec);
    }

    // forced-model welfare over mu, with the switch point marked
    {
        std::vector<SweepRow> rows;
        for (const auto& model : scenario.catalog.models) {
            SweepRequest req;
            req.axis = SweepAxis::Mu;
            req.grid = mu_grid;
            req.threads = threads;
            req.forced_model = model.id;
            const std::vector<SweepRow> part = run_sweep(scenario, req);
            rows.insert(rows.end(), part.begin(), part.end());
        }
        const auto csv_path = write_csv("welfare_by_model", rows);

        const std::vector<CsvRow> parsed = parse_sweep_csv(read_file(csv_path));
        ChartSpec spec;
        spec.title = "Welfare under each upstream model";
        spec.x_label = "high-type share mu";
        spec.y_label = "welfare";
        // welfare is plotted for inactive points too: it is the planner value
        // of the forced choice, and the gap locates the switch
        spec.series = group_series(
            parsed, [](const CsvRow& r) { return r.model; },
            [](const CsvRow& r) { return r.welfare; }, "model ", /*break_at_inactive=*/false);

        if (spec.series.size() == 2 &&
            spec.series[0].points.size() == spec.series[1].points.size()) {
            const auto& s0 = spec.series[0].points;
            const auto& s1 = spec.series[1].points;
            for (std::size_t i = 1; i < s0.size(); ++i) {
                const double g0 = s1[i - 1].second - s0[i - 1].second;
                const double g1 = s1[i].second - s0[i].second;
                if (!std::isfinite(g0) || !std::isfinite(g1)) continue;
                if ((g0 < 0.0) != (g1 < 0.0)) {
                    const double t = g0 / (g0 - g1);
                    const double mx = s0[i - 1].first + t * (s0[i].first - s0[i - 1].first);
                    const double my = s0[i - 1].second + t * (s0[i].second - s0[i - 1].second);
                    spec.marker = ChartMarker{mx, my, "switch at mu = " + label_number(mx)};
                    break;
                }
            }
            if (!spec.marker)
                report.warnings.push_back(
                    "welfare_by_model: no model switch inside the mu grid; chart emitted without "
                    "a crossing marker");
        }
        write_svg("welfare_by_model", spec);

        if (scenario.catalog.models.size() >= 2) {
            report.crossing =
                find_welfare_crossing(scenario, scenario.catalog.models[0].id,
                                      scenario.catalog.models[1].id, mu_grid, threads);
            if (!report.crossing->found)
                report.warnings.push_back("welfare crossing not bracketed by the mu grid between "
                                          "models '" +
                                          scenario.catalog.models[0].id + "' and '" +
                                          scenario.catalog.models[1].id + "'");
        }
    }

    return report;
}

}  // namespace halmarket
