#include "halmarket/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace halmarket {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct ParseContext {
    std::string source;
    int line = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
    }
};

double parse_double(const ParseContext& ctx, std::string_view key, std::string_view text) {
    const std::string_view v = trim(text);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        ctx.fail("key '" + std::string(key) + "': cannot parse number from '" + std::string(v) + "'");
    return out;
}

std::int64_t parse_int(const ParseContext& ctx, std::string_view key, std::string_view text) {
    const std::string_view v = trim(text);
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        ctx.fail("key '" + std::string(key) + "': cannot parse integer from '" + std::string(v) + "'");
    return out;
}

std::uint64_t parse_uint(const ParseContext& ctx, std::string_view key, std::string_view text) {
    const std::string_view v = trim(text);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        ctx.fail("key '" + std::string(key) + "': cannot parse unsigned integer from '" +
                 std::string(v) + "'");
    return out;
}

std::vector<double> parse_grid_or_fail(const ParseContext& ctx, std::string_view key,
                                       std::string_view text) {
    try {
        return parse_grid(text);
    } catch (const ValidationError& e) {
        ctx.fail("key '" + std::string(key) + "': " + e.what());
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
    const std::string_view v = trim(text);
    if (v.empty()) throw ValidationError("empty grid specification");

    const std::size_t colons = static_cast<std::size_t>(std::count(v.begin(), v.end(), ':'));
    if (colons == 2) {
        // lo:hi:step, endpoints inclusive up to rounding
        double parts[3];
        std::size_t start = 0;
        for (int i = 0; i < 3; ++i) {
            const std::size_t end = (i < 2) ? v.find(':', start) : v.size();
            const std::string_view piece = trim(v.substr(start, end - start));
            const auto [ptr, ec] =
                std::from_chars(piece.data(), piece.data() + piece.size(), parts[i]);
            if (ec != std::errc{} || ptr != piece.data() + piece.size())
                throw ValidationError("cannot parse grid bound '" + std::string(piece) + "'");
            start = end + 1;
        }
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0)) throw ValidationError("grid step must be > 0");
        if (!(hi >= lo)) throw ValidationError("grid upper bound must be >= lower bound");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> grid(count);
        for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
        return grid;
    }

    std::vector<double> values;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t end = std::min(v.find(',', start), v.size());
        const std::string_view piece = trim(v.substr(start, end - start));
        if (piece.empty()) throw ValidationError("empty element in list");
        double x = 0.0;
        const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), x);
        if (ec != std::errc{} || ptr != piece.data() + piece.size())
            throw ValidationError("cannot parse list element '" + std::string(piece) + "'");
        values.push_back(x);
        if (end == v.size()) break;
        start = end + 1;
    }
    return values;
}

double Scenario::require_mu() const {
    if (!mu)
        throw ValidationError(
            "population.mu: this operation needs a scalar mu (only mu_grid was given)");
    return *mu;
}

double Scenario::require_delta() const {
    if (!delta)
        throw ValidationError(
            "params.delta: this operation needs a scalar delta (only delta_list was given)");
    return *delta;
}

double Scenario::require_beta() const {
    if (!beta)
        throw ValidationError(
            "params.beta: this operation needs a scalar beta (only beta_list was given)");
    return *beta;
}

UserPopulation Scenario::population(double mu_value) const {
    return UserPopulation{high, low, mu_value};
}

void Scenario::validate() const {
    UserPopulation pop{high, low, mu ? *mu : 0.5};
    pop.validate(/*allow_mu_endpoints=*/false);
    catalog.validate();
    cost.validate();

    if (!mu && mu_grid.empty())
        throw ValidationError("population: either mu or mu_grid is required");
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0 && mu_grid[i] < 1.0))
            throw ValidationError("population.mu_grid: values must lie strictly in (0,1)");
        if (i > 0 && !(mu_grid[i] > mu_grid[i - 1]))
            throw ValidationError("population.mu_grid: must be strictly increasing");
    }

    if (!delta && delta_list.empty())
        throw ValidationError("params: either delta or delta_list is required");
    if (!beta && beta_list.empty())
        throw ValidationError("params: either beta or beta_list is required");
    for (double d : delta_list)
        if (!(d >= 0.0 && d < 1.0))
            throw ValidationError("params.delta_list: values must lie in [0,1)");
    for (double b : beta_list)
        if (!(b > 0.0)) throw ValidationError("params.beta_list: values must be > 0");
    if (delta && !(*delta >= 0.0 && *delta < 1.0))
        throw ValidationError("params.delta: must lie in [0,1)");
    if (beta && !(*beta > 0.0)) throw ValidationError("params.beta: must be > 0");

    sim.validate();
    solver.validate(catalog);
}

Scenario parse_scenario(std::string_view text, std::string_view source_name) {
    Scenario sc;
    ParseContext ctx{std::string(source_name), 0};

    std::string section;        // current section name, lower-case kind
    std::string model_id;       // current model id when inside [model ...]
    UpstreamModel model;        // accumulator for the current model section
    bool model_fee_set = false, model_h0_set = false;
    std::set<std::string> seen_keys;  // section-qualified, to reject duplicates

    auto flush_model = [&]() {
        if (section != "model") return;
        if (!model_fee_set) ctx.fail("[model " + model_id + "]: missing key 'wholesale_fee'");
        if (!model_h0_set)
            ctx.fail("[model " + model_id + "]: missing key 'baseline_hallucination'");
        sc.catalog.models.push_back(model);
    };

    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        lines.push_back(text.substr(start, end - start));
        if (end == text.size()) break;
        start = end + 1;
    }

    for (std::string_view raw : lines) {
        ++ctx.line;
        std::string_view line = trim(raw);
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = trim(line.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') ctx.fail("malformed section header '" + std::string(line) + "'");
            flush_model();
            const std::string_view inner = trim(line.substr(1, line.size() - 2));
            if (inner == "population" || inner == "params" || inner == "cost" ||
                inner == "solver" || inner == "sim") {
                section = std::string(inner);
            } else if (inner.substr(0, 5) == "model") {
                const std::string_view id = trim(inner.substr(5));
                if (id.empty()) ctx.fail("[model] section needs an id, e.g. [model A]");
                section = "model";
                model_id = std::string(id);
                model = UpstreamModel{model_id, 0.0, 0.0};
                model_fee_set = model_h0_set = false;
            } else {
                ctx.fail("unknown section [" + std::string(inner) + "]");
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            ctx.fail("expected 'key = value', got '" + std::string(line) + "'");
        const std::string key{trim(line.substr(0, eq))};
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) ctx.fail("key '" + key + "' appears before any section header");
        if (!seen_keys.insert(section + (section == "model" ? " " + model_id : "") + "." + key)
                 .second)
            ctx.fail("duplicate key '" + key + "' in section [" + section + "]");

        if (section == "population") {
            if (key == "v_high") sc.high.value = parse_double(ctx, key, value);
            else if (key == "alpha_high") sc.high.aversion = parse_double(ctx, key, value);
            else if (key == "v_low") sc.low.value = parse_double(ctx, key, value);
            else if (key == "alpha_low") sc.low.aversion = parse_double(ctx, key, value);
            else if (key == "mu") sc.mu = parse_double(ctx, key, value);
            else if (key == "mu_grid") sc.mu_grid = parse_grid_or_fail(ctx, key, value);
            else ctx.fail("unknown key '" + key + "' in section [population]");
        } else if (section == "model") {
            if (key == "wholesale_fee") {
                model.wholesale_fee = parse_double(ctx, key, value);
                model_fee_set = true;
            } else if (key == "baseline_hallucination") {
                model.baseline_hallucination = parse_double(ctx, key, value);
                model_h0_set = true;
            } else {
                ctx.fail("unknown key '" + key + "' in section [model " + model_id + "]");
            }
        } else if (section == "params") {
            if (key == "delta") sc.delta = parse_double(ctx, key, value);
            else if (key == "delta_list") sc.delta_list = parse_grid_or_fail(ctx, key, value);
            else if (key == "beta") sc.beta = parse_double(ctx, key, value);
            else if (key == "beta_list") sc.beta_list = parse_grid_or_fail(ctx, key, value);
            else ctx.fail("unknown key '" + key + "' in section [params]");
        } else if (section == "cost") {
            if (key == "a") sc.cost.coefficient = parse_double(ctx, key, value);
            else if (key == "gamma") sc.cost.exponent = parse_double(ctx, key, value);
            else ctx.fail("unknown key '" + key + "' in section [cost]");
        } else if (section == "solver") {
            if (key == "effort_grid_points")
                sc.solver.effort_grid_points = static_cast<int>(parse_int(ctx, key, value));
            else if (key == "refine_tolerance") sc.solver.refine_tolerance = parse_double(ctx, key, value);
            else if (key == "h_floor") sc.solver.h_floor = parse_double(ctx, key, value);
            else if (key == "fd_step") sc.solver.fd_step = parse_double(ctx, key, value);
            else if (key == "model_tiebreak") {
                if (value == "lower_fee") sc.solver.model_tiebreak = SolverConfig::TieBreak::LowerFee;
                else if (value == "catalog_order")
                    sc.solver.model_tiebreak = SolverConfig::TieBreak::FirstInCatalog;
                else ctx.fail("key 'model_tiebreak': expected lower_fee or catalog_order");
            } else ctx.fail("unknown key '" + key + "' in section [solver]");
        } else if (section == "sim") {
            if (key == "cohort_size") sc.sim.cohort_size = parse_int(ctx, key, value);
            else if (key == "seed") sc.sim.seed = parse_uint(ctx, key, value);
            else if (key == "horizon") sc.sim.horizon = parse_int(ctx, key, value);
            else if (key == "deviation_period") sc.sim.deviation_period = parse_int(ctx, key, value);
            else ctx.fail("unknown key '" + key + "' in section [sim]");
        }
    }
    flush_model();

    ctx.line = 0;
    try {
        sc.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(ctx.source + ": " + e.what());
    }
    if (sc.cost.exponent != 2.0)
        std::cerr << "warning: cost.gamma = " << sc.cost.exponent
                  << ": uniqueness of the interior optimum relies on sufficiently convex costs\n";
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read scenario file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string emit_scenario(const Scenario& sc) {
    std::ostringstream out;
    out << "[population]\n";
    out << "v_high = " << format_double(sc.high.value) << "\n";
    out << "alpha_high = " << format_double(sc.high.aversion) << "\n";
    out << "v_low = " << format_double(sc.low.value) << "\n";
    out << "alpha_low = " << format_double(sc.low.aversion) << "\n";
    if (sc.mu) out << "mu = " << format_double(*sc.mu) << "\n";
    if (!sc.mu_grid.empty()) out << "mu_grid = " << format_list(sc.mu_grid) << "\n";

    for (const auto& m : sc.catalog.models) {
        out << "\n[model " << m.id << "]\n";
        out << "wholesale_fee = " << format_double(m.wholesale_fee) << "\n";
        out << "baseline_hallucination = " << format_double(m.baseline_hallucination) << "\n";
    }

    out << "\n[params]\n";
    if (sc.delta) out << "delta = " << format_double(*sc.delta) << "\n";
    if (!sc.delta_list.empty()) out << "delta_list = " << format_list(sc.delta_list) << "\n";
    if (sc.beta) out << "beta = " << format_double(*sc.beta) << "\n";
    if (!sc.beta_list.empty()) out << "beta_list = " << format_list(sc.beta_list) << "\n";

    out << "\n[cost]\n";
    out << "a = " << format_double(sc.cost.coefficient) << "\n";
    out << "gamma = " << format_double(sc.cost.exponent) << "\n";

    out << "\n[solver]\n";
    out << "effort_grid_points = " << sc.solver.effort_grid_points << "\n";
    out << "refine_tolerance = " << format_double(sc.solver.refine_tolerance) << "\n";
    out << "h_floor = " << format_double(sc.solver.h_floor) << "\n";
    out << "fd_step = " << format_double(sc.solver.fd_step) << "\n";
    out << "model_tiebreak = "
        << (sc.solver.model_tiebreak == SolverConfig::TieBreak::LowerFee ? "lower_fee"
                                                                         : "catalog_order")
        << "\n";

    out << "\n[sim]\n";
    out << "cohort_size = " << sc.sim.cohort_size << "\n";
    out << "seed = " << sc.sim.seed << "\n";
    out << "horizon = " << sc.sim.horizon << "\n";
    if (sc.sim.deviation_period) out << "deviation_period = " << *sc.sim.deviation_period << "\n";
    return out.str();
}

}  // namespace halmarket
