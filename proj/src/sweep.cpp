#include "halmarket/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "halmarket/model_core.hpp"
#include "halmarket/solver.hpp"
#include "parallel.hpp"

namespace halmarket {

namespace {

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct GridPoint {
    double mu, delta, beta;
};

EquilibriumResult solve_point(const ModelCatalog& catalog, const Scenario& sc,
                              const GridPoint& pt) {
    const UserPopulation pop = sc.population(pt.mu);
    if (pt.delta == 0.0) return spot_equilibrium(catalog, pop);
    const MarketParams params{pt.delta, pt.beta};
    return solve_equilibrium(catalog, pop, sc.cost, params, sc.solver);
}

void check_axis_value(SweepAxis axis, double v) {
    switch (axis) {
        case SweepAxis::Mu:
            if (!(v > 0.0 && v < 1.0))
                throw ValidationError("sweep grid: mu values must lie strictly in (0,1)");
            break;
        case SweepAxis::Delta:
            if (!(v >= 0.0 && v < 1.0))
                throw ValidationError("sweep grid: delta values must lie in [0,1)");
            break;
        case SweepAxis::Beta:
            if (!(v > 0.0)) throw ValidationError("sweep grid: beta values must be > 0");
            break;
    }
}

}  // namespace

const char* to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Mu: return "mu";
        case SweepAxis::Delta: return "delta";
        case SweepAxis::Beta: return "beta";
    }
    return "?";
}

SweepAxis parse_axis(std::string_view name) {
    if (name == "mu") return SweepAxis::Mu;
    if (name == "delta") return SweepAxis::Delta;
    if (name == "beta") return SweepAxis::Beta;
    throw ValidationError("unknown sweep axis '" + std::string(name) +
                          "' (expected mu, delta or beta)");
}

std::vector<SweepRow> run_sweep(const Scenario& scenario, const SweepRequest& request) {
    if (request.grid.empty()) throw ValidationError("sweep grid: must be non-empty");
    for (std::size_t i = 0; i < request.grid.size(); ++i) {
        check_axis_value(request.axis, request.grid[i]);
        if (i > 0 && !(request.grid[i] > request.grid[i - 1]))
            throw ValidationError("sweep grid: must be strictly increasing");
    }
    if (request.by && *request.by == request.axis)
        throw ValidationError("sweep: secondary axis must differ from the primary axis");

    ModelCatalog catalog = scenario.catalog;
    if (request.forced_model) {
        const UpstreamModel* m = scenario.catalog.find(*request.forced_model);
        if (!m)
            throw ValidationError("sweep: model '" + *request.forced_model +
                                  "' is not in the catalog");
        catalog.models = {*m};
    }

    std::vector<double> secondary{0.0};  // placeholder when no secondary axis
    if (request.by) {
        switch (*request.by) {
            case SweepAxis::Mu: secondary = scenario.mu_grid; break;
            case SweepAxis::Delta: secondary = scenario.delta_list; break;
            case SweepAxis::Beta: secondary = scenario.beta_list; break;
        }
        if (secondary.empty())
            throw ValidationError(std::string("sweep: secondary axis '") + to_string(*request.by) +
                                  "' requires the matching list/grid in the scenario");
        for (double v : secondary) check_axis_value(*request.by, v);
    }

    auto value_for = [&](SweepAxis which, double axis_value, double by_value) {
        if (which == request.axis) return axis_value;
        if (request.by && which == *request.by) return by_value;
        switch (which) {
            case SweepAxis::Mu: return scenario.require_mu();
            case SweepAxis::Delta: return scenario.require_delta();
            case SweepAxis::Beta: return scenario.require_beta();
        }
        return 0.0;
    };

    std::vector<GridPoint> points;
    points.reserve(secondary.size() * request.grid.size());
    for (double by_value : secondary)
        for (double axis_value : request.grid)
            points.push_back(GridPoint{value_for(SweepAxis::Mu, axis_value, by_value),
                                       value_for(SweepAxis::Delta, axis_value, by_value),
                                       value_for(SweepAxis::Beta, axis_value, by_value)});

    std::vector<SweepRow> rows(points.size());
    detail::parallel_for(static_cast<std::int64_t>(points.size()), request.threads,
                         [&](std::int64_t i) {
                             const GridPoint& pt = points[static_cast<std::size_t>(i)];
                             rows[static_cast<std::size_t>(i)] =
                                 SweepRow{pt.mu, pt.delta, pt.beta, solve_point(catalog, scenario, pt)};
                         });
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const auto& row : rows) {
        const EquilibriumResult& r = row.result;
        out += csv_number(row.mu);
        out += ',';
        out += csv_number(row.delta);
        out += ',';
        out += csv_number(row.beta);
        out += ',';
        out += r.contract.model.id;
        out += ',';
        out += csv_number(r.contract.effort);
        out += ',';
        out += csv_number(r.contract.price);
        out += ',';
        out += csv_number(r.hallucination_rate);
        out += ',';
        out += csv_number(r.welfare);
        out += ',';
        out += csv_number(r.value_high);
        out += ',';
        out += csv_number(r.value_low);
        out += ',';
        out += csv_number(r.delta_lower);
        out += ',';
        out += to_string(r.binding_type);
        out += ',';
        out += r.active ? "true" : "false";
        out += '\n';
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

CrossingReport find_welfare_crossing(const Scenario& scenario, const std::string& model_a,
                                     const std::string& model_b, std::span<const double> mu_scan,
                                     int threads) {
    const UpstreamModel* a = scenario.catalog.find(model_a);
    const UpstreamModel* b = scenario.catalog.find(model_b);
    if (!a || !b)
        throw ValidationError("crossing: both model ids must be in the catalog");
    if (mu_scan.size() < 2)
        throw ValidationError("crossing: need at least two scan points");

    ModelCatalog only_a, only_b;
    only_a.models = {*a};
    only_b.models = {*b};

    auto gap = [&](double mu) {
        GridPoint pt{mu, scenario.require_delta(), scenario.require_beta()};
        return solve_point(only_b, scenario, pt).welfare - solve_point(only_a, scenario, pt).welfare;
    };

    std::vector<double> gaps(mu_scan.size());
    detail::parallel_for(static_cast<std::int64_t>(mu_scan.size()), threads, [&](std::int64_t i) {
        gaps[static_cast<std::size_t>(i)] = gap(mu_scan[static_cast<std::size_t>(i)]);
    });

    CrossingReport report;
    std::size_t first_bracket = mu_scan.size();
    for (std::size_t i = 1; i < mu_scan.size(); ++i) {
        if ((gaps[i - 1] < 0.0) != (gaps[i] < 0.0)) {
            ++report.sign_changes;
            if (first_bracket == mu_scan.size()) first_bracket = i;
        }
    }
    if (first_bracket == mu_scan.size()) return report;

    double lo = mu_scan[first_bracket - 1];
    double hi = mu_scan[first_bracket];
    double glo = gaps[first_bracket - 1];
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double gmid = gap(mid);
        if ((gmid < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gmid;
        } else {
            hi = mid;
        }
    }
    report.found = true;
    report.mu_star = 0.5 * (lo + hi);
    report.model_low = glo < 0.0 ? model_a : model_b;
    report.model_high = glo < 0.0 ? model_b : model_a;
    return report;
}

}  // namespace halmarket
