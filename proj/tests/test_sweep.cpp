#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "halmarket/charts.hpp"
#include "halmarket/figures.hpp"
#include "halmarket/scenario.hpp"
#include "halmarket/sweep.hpp"

using namespace halmarket;

namespace {

Scenario preset() {
    return load_scenario(std::string(HALMARKET_SCENARIO_DIR) + "/paper_3_3.scenario");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("sweep rows follow the grid and the fixed CSV schema") {
    const Scenario sc = preset();
    SweepRequest req;
    req.axis = SweepAxis::Mu;
    req.grid = {0.2, 0.5, 0.8};
    const auto rows = run_sweep(sc, req);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mu == 0.2);
    CHECK(rows[2].mu == 0.8);
    CHECK(rows[0].delta == 0.95);
    CHECK(rows[0].beta == 0.70);

    const std::string csv = sweep_csv(rows);
    CHECK(csv.substr(0, csv.find('\n')) ==
          "mu,delta,beta,model,effort,price,hallucination,welfare,v_high,v_low,delta_lower,"
          "binding,active");
    CHECK(csv.find('\r') == std::string::npos);  // LF endings only
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    // 12-significant-digit round trip
    const auto parsed = parse_sweep_csv(csv);
    REQUIRE(parsed.size() == 3);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(std::abs(parsed[i].effort - rows[i].result.contract.effort) <=
              1e-11 * std::max(1.0, std::abs(rows[i].result.contract.effort)));
        CHECK(std::abs(parsed[i].welfare - rows[i].result.welfare) <=
              1e-11 * std::abs(rows[i].result.welfare));
        CHECK(parsed[i].model == rows[i].result.contract.model.id);
        CHECK(parsed[i].active == rows[i].result.active);
    }
}

TEST_CASE("secondary axis expands schedules in scenario list order") {
    const Scenario sc = preset();  // delta_list = 0.75, 0.85, 0.95
    SweepRequest req;
    req.axis = SweepAxis::Mu;
    req.grid = {0.3, 0.6};
    req.by = SweepAxis::Delta;
    const auto rows = run_sweep(sc, req);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].delta == 0.75);
    CHECK(rows[1].delta == 0.75);
    CHECK(rows[2].delta == 0.85);
    CHECK(rows[5].delta == 0.95);
    CHECK(rows[0].mu == 0.3);
    CHECK(rows[1].mu == 0.6);
}

TEST_CASE("delta = 0 grid points route to the spot benchmark") {
    const Scenario sc = preset();
    SweepRequest req;
    req.axis = SweepAxis::Delta;
    req.grid = {0.0, 0.5, 0.95};
    const auto rows = run_sweep(sc, req);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].result.contract.effort == 0.0);
    CHECK(rows[0].result.contract.price == rows[0].result.contract.model.wholesale_fee);
}

TEST_CASE("forced-model sweeps restrict the catalog") {
    const Scenario sc = preset();
    SweepRequest req;
    req.axis = SweepAxis::Mu;
    req.grid = {0.2, 0.5, 0.8};
    req.forced_model = "A";
    for (const auto& row : run_sweep(sc, req)) CHECK(row.result.contract.model.id == "A");

    req.forced_model = "Z";
    CHECK_THROWS_AS(run_sweep(sc, req), ValidationError);
}

TEST_CASE("sweep validation") {
    const Scenario sc = preset();
    SweepRequest req;
    req.axis = SweepAxis::Mu;
    req.grid = {0.5, 0.4};
    CHECK_THROWS_AS(run_sweep(sc, req), ValidationError);
    req.grid = {0.0, 0.5};
    CHECK_THROWS_AS(run_sweep(sc, req), ValidationError);
    req.grid = {0.2, 0.5};
    req.by = SweepAxis::Mu;
    CHECK_THROWS_AS(run_sweep(sc, req), ValidationError);
    CHECK_THROWS_AS(parse_axis("sigma"), ValidationError);

    // secondary axis without the matching scenario list
    Scenario bare = sc;
    bare.beta_list.clear();
    req.by = SweepAxis::Beta;
    CHECK_THROWS_AS(run_sweep(bare, req), ValidationError);
}

TEST_CASE("sweep output is identical across worker counts") {
    const Scenario sc = preset();
    SweepRequest req;
    req.axis = SweepAxis::Mu;
    req.grid = {0.2, 0.35, 0.5, 0.65, 0.8};
    req.by = SweepAxis::Delta;
    req.threads = 1;
    const std::string serial = sweep_csv(run_sweep(sc, req));
    req.threads = 8;
    const std::string parallel = sweep_csv(run_sweep(sc, req));
    CHECK(serial == parallel);
}

TEST_CASE("welfare crossing detection on the preset") {
    const Scenario sc = preset();
    std::vector<double> scan;
    for (double mu = 0.05; mu < 0.955; mu += 0.05) scan.push_back(mu);
    const CrossingReport report = find_welfare_crossing(sc, "A", "B", scan, 2);
    CHECK(report.found);
    CHECK(report.sign_changes == 1);
    CHECK(report.mu_star > 0.15);
    CHECK(report.mu_star < 0.40);
    CHECK(report.model_low == "A");
    CHECK(report.model_high == "B");
}

TEST_CASE("chart rendering is deterministic and marks gaps") {
    ChartSpec spec;
    spec.title = "demo";
    spec.x_label = "x";
    spec.y_label = "y";
    ChartSeries s;
    s.label = "s1";
    s.points = {{0.1, 1.0}, {0.2, std::numeric_limits<double>::quiet_NaN()}, {0.3, 2.0}};
    spec.series.push_back(s);
    spec.marker = ChartMarker{0.25, 1.5, "switch at mu = 0.25"};

    const std::string svg1 = render_line_chart_svg(spec);
    const std::string svg2 = render_line_chart_svg(spec);
    CHECK(svg1 == svg2);
    CHECK(svg1.find("<svg") == 0);
    CHECK(svg1.find("switch at mu = 0.25") != std::string::npos);
    // the NaN point splits the series into two single-point path commands
    CHECK(std::count(svg1.begin(), svg1.end(), 'M') >= 2);
}

TEST_CASE("figures command writes charts derived from their CSVs") {
    Scenario sc = preset();
    sc.mu_grid = {0.1, 0.2, 0.3, 0.4, 0.5};  // keep the run small
    const std::filesystem::path out =
        std::filesystem::current_path() / "figures_test_out";
    std::filesystem::remove_all(out);

    const FiguresReport report = make_figures(sc, out, 4);
    for (const char* name : {"effort_by_delta.csv", "effort_by_delta.svg", "effort_by_beta.csv",
                             "effort_by_beta.svg", "welfare_by_model.csv", "welfare_by_model.svg"})
        CHECK(std::filesystem::exists(out / name));

    REQUIRE(report.crossing.has_value());
    CHECK(report.crossing->found);  // switch near mu = 0.26 lies inside [0.1, 0.5]
    const std::string welfare_svg = slurp(out / "welfare_by_model.svg");
    CHECK(welfare_svg.find("switch at mu") != std::string::npos);

    // three series in the patience chart, one per delta in the preset list
    const std::string effort_svg = slurp(out / "effort_by_delta.svg");
    CHECK(effort_svg.find("delta = 0.75") != std::string::npos);
    CHECK(effort_svg.find("delta = 0.85") != std::string::npos);
    CHECK(effort_svg.find("delta = 0.95") != std::string::npos);

    // byte determinism of the whole figure set
    const std::filesystem::path out2 =
        std::filesystem::current_path() / "figures_test_out_repeat";
    std::filesystem::remove_all(out2);
    make_figures(sc, out2, 1);
    for (const char* name : {"effort_by_delta.csv", "effort_by_delta.svg", "welfare_by_model.csv",
                             "welfare_by_model.svg"})
        CHECK(slurp(out / name) == slurp(out2 / name));
}

TEST_CASE("degenerate single-delta scenario yields a one-series chart") {
    Scenario sc = preset();
    sc.delta_list.clear();
    sc.mu_grid = {0.3, 0.5, 0.7};
    const std::filesystem::path out =
        std::filesystem::current_path() / "figures_test_single_delta";
    std::filesystem::remove_all(out);
    make_figures(sc, out, 1);
    const std::string svg = slurp(out / "effort_by_delta.svg");
    CHECK(svg.find("delta = 0.95") != std::string::npos);
    CHECK(svg.find("delta = 0.75") == std::string::npos);
}

TEST_CASE("crossing outside the grid range only warns") {
    Scenario sc = preset();
    sc.mu_grid = {0.5, 0.6, 0.7};  // switch point ~0.26 not bracketed
    const std::filesystem::path out =
        std::filesystem::current_path() / "figures_test_no_crossing";
    std::filesystem::remove_all(out);
    const FiguresReport report = make_figures(sc, out, 1);
    CHECK_FALSE(report.warnings.empty());
    const std::string svg = slurp(out / "welfare_by_model.svg");
    CHECK(svg.find("switch at mu") == std::string::npos);
}
