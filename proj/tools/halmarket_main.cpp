#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "halmarket/figures.hpp"
#include "halmarket/market_sim.hpp"
#include "halmarket/model_core.hpp"
#include "halmarket/scenario.hpp"
#include "halmarket/solver.hpp"
#include "halmarket/sweep.hpp"

namespace {

using nlohmann::json;
using namespace halmarket;

constexpr int kExitOk = 0;
constexpr int kExitWarning = 1;   // completed, but checks failed or stats degenerate
constexpr int kExitInactive = 2;  // no active market
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

json result_json(const EquilibriumResult& r) {
    return json{{"active", r.active},
                {"model", r.contract.model.id},
                {"price", r.contract.price},
                {"effort", r.contract.effort},
                {"hallucination", r.hallucination_rate},
                {"welfare", r.welfare},
                {"value_high", r.value_high},
                {"value_low", r.value_low},
                {"agent_value", r.agent_value},
                {"rent_factor", r.rent_factor},
                {"delta_lower", r.delta_lower},
                {"binding", to_string(r.binding_type)},
                {"kappa", r.kappa},
                {"zero_effort_fallback", r.zero_effort_fallback},
                {"participation_constrained", r.participation_constrained}};
}

void print_result(const EquilibriumResult& r, const Scenario& sc) {
    std::cout << "status:            " << (r.active ? "active" : "inactive") << "\n";
    std::cout << "model:             " << r.contract.model.id
              << "  (fee " << fmt(r.contract.model.wholesale_fee) << ", baseline hallucination "
              << fmt(r.contract.model.baseline_hallucination) << ")\n";
    std::cout << "price:             " << fmt(r.contract.price) << "\n";
    std::cout << "effort:            " << fmt(r.contract.effort) << "\n";
    std::cout << "hallucination:     " << fmt(r.hallucination_rate) << "\n";
    std::cout << "welfare:           " << fmt(r.welfare) << "\n";
    std::cout << "value high type:   " << fmt(r.value_high) << "\n";
    std::cout << "value low type:    " << fmt(r.value_low) << "\n";
    std::cout << "agent value:       " << fmt(r.agent_value) << "\n";
    std::cout << "rent factor:       " << fmt(r.rent_factor) << "\n";
    std::cout << "delta lower bound: " << fmt(r.delta_lower) << "\n";
    std::cout << "binding type:      " << to_string(r.binding_type) << "  (kappa "
              << fmt(r.kappa) << ", threshold " << fmt(1.0 / (1.0 + r.kappa)) << ")\n";
    if (r.zero_effort_fallback)
        std::cout << "note:              no positive effort sustainable; zero-effort contract\n";
    if (r.participation_constrained)
        std::cout << "note:              effort limited by a participation constraint\n";
    if (r.contract.effort > 0.0 && sc.delta && *sc.delta > 0.0) {
        const FocReport foc =
            foc_residual(r.contract.model, r.contract.effort, sc.population(), sc.cost,
                         sc.market_params(), sc.solver.fd_step);
        std::cout << "foc residual:      " << fmt(foc.residual)
                  << (foc.second_order_ok ? "  (second order ok)" : "  (second order NOT ok)")
                  << "\n";
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

void maybe_write_json(const std::optional<std::string>& out_dir, const std::string& name,
                      const json& payload) {
    if (!out_dir) return;
    ensure_dir(*out_dir);
    write_file(std::filesystem::path(*out_dir) / name, payload.dump(2) + "\n");
}

EquilibriumResult solve_scenario(const Scenario& sc, int threads) {
    (void)threads;
    const UserPopulation pop = sc.population();
    if (sc.require_delta() == 0.0) return spot_equilibrium(sc.catalog, pop);
    return solve_equilibrium(sc.catalog, pop, sc.cost, sc.market_params(), sc.solver);
}

int run_solve(const std::string& scenario_path, const std::optional<std::string>& out_dir,
              int threads) {
    const Scenario sc = load_scenario(scenario_path);
    const EquilibriumResult res = solve_scenario(sc, threads);
    print_result(res, sc);
    maybe_write_json(out_dir, "solve.json", result_json(res));
    return res.active ? kExitOk : kExitInactive;
}

int run_sweep_cmd(const std::string& scenario_path, const std::string& axis_name,
                  const std::string& grid_spec, const std::optional<std::string>& by_name,
                  const std::optional<std::string>& forced_model, const std::string& out_dir,
                  int threads) {
    const Scenario sc = load_scenario(scenario_path);
    SweepRequest req;
    req.axis = parse_axis(axis_name);
    req.grid = parse_grid(grid_spec);
    if (by_name) req.by = parse_axis(*by_name);
    req.forced_model = forced_model;
    req.threads = threads;

    const std::vector<SweepRow> rows = run_sweep(sc, req);
    ensure_dir(out_dir);
    const std::filesystem::path csv_path = std::filesystem::path(out_dir) / "sweep.csv";
    write_file(csv_path, sweep_csv(rows));
    std::cout << "wrote " << rows.size() << " rows to " << csv_path.string() << "\n";
    return kExitOk;
}

int run_figures(const std::string& scenario_path, const std::string& out_dir, int threads) {
    const Scenario sc = load_scenario(scenario_path);
    const FiguresReport report = make_figures(sc, out_dir, threads);
    for (const auto& path : report.written) std::cout << "wrote " << path.string() << "\n";
    if (report.crossing && report.crossing->found) {
        std::cout << "model switch: mu = " << fmt(report.crossing->mu_star) << "  ("
                  << report.crossing->model_low << " below, " << report.crossing->model_high
                  << " above; sign changes on grid: " << report.crossing->sign_changes << ")\n";
    }
    for (const auto& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
    return kExitOk;
}

struct SimulateFlags {
    std::optional<std::string> model;
    std::optional<double> price;
    std::optional<double> effort;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> cohort;
    std::optional<std::int64_t> deviation_period;
};

int run_simulate(const std::string& scenario_path, const std::optional<std::string>& out_dir,
                 const SimulateFlags& flags, int threads) {
    Scenario sc = load_scenario(scenario_path);
    if (flags.seed) sc.sim.seed = *flags.seed;
    if (flags.cohort) sc.sim.cohort_size = *flags.cohort;
    if (flags.deviation_period) sc.sim.deviation_period = *flags.deviation_period;
    sc.sim.threads = threads;

    Contract contract;
    if (flags.model || flags.price || flags.effort) {
        if (!flags.model)
            throw ValidationError("simulate: a contract override needs at least --model");
        const UpstreamModel* m = sc.catalog.find(*flags.model);
        if (!m) throw ValidationError("simulate: model '" + *flags.model + "' not in catalog");
        contract.model = *m;
        contract.effort = flags.effort.value_or(0.0);
        contract.price = flags.price.value_or(
            enforcement_price(*m, contract.effort, sc.cost, sc.market_params()));
    } else {
        const EquilibriumResult res = solve_scenario(sc, threads);
        if (!res.active) {
            std::cout << "market is inactive at these parameters; refusing to simulate.\n";
            std::cout << "  value_high = " << fmt(res.value_high)
                      << ", value_low = " << fmt(res.value_low) << " (participation needs both >= 0)\n";
            if (res.contract.effort > 0.0)
                std::cout << "  delta = " << fmt(sc.require_delta())
                          << " vs activity threshold delta_lower = " << fmt(res.delta_lower) << "\n";
            std::cout << "  pass an explicit contract with --model/--price/--effort to override.\n";
            return kExitInactive;
        }
        contract = res.contract;
    }

    const MarketParams params = sc.market_params();
    const UserPopulation pop = sc.population();
    const double h = hallucination_prob(contract.model, contract.effort, params.beta);
    const double analytic_high = lifetime_value(pop.high, h, contract.price, params.delta);
    const double analytic_low = lifetime_value(pop.low, h, contract.price, params.delta);
    const double analytic_agent = continuation_value(contract, sc.cost, params);

    const SimResult sim = simulate_relationships(contract, pop, sc.cost, params, sc.sim);

    std::cout << "contract: model " << contract.model.id << ", price " << fmt(contract.price)
              << ", effort " << fmt(contract.effort) << ", hallucination " << fmt(h) << "\n";
    std::cout << "cohort " << sim.cohort_size << " per type, horizon " << sim.horizon << ", seed "
              << sc.sim.seed << "\n\n";

    bool se_degenerate = false;
    int checks_failed = 0;
    auto line = [&](const char* name, const Estimate& est, double analytic) {
        std::cout << name << "  estimate " << fmt(est.mean);
        if (std::isnan(est.se)) {
            std::cout << "  se n/a";
            se_degenerate = true;
        } else {
            std::cout << "  se " << fmt(est.se);
        }
        std::cout << "  analytic " << fmt(analytic);
        if (!std::isnan(est.se) && est.se > 0.0) {
            const double z = std::abs(est.mean - analytic) / est.se;
            const bool ok = z <= 3.0;
            checks_failed += ok ? 0 : 1;
            std::cout << "  |z| " << fmt(z) << (ok ? "  [ok]" : "  [FAIL > 3 SE]");
        }
        std::cout << "\n";
    };
    line("value high ", sim.value_high, analytic_high);
    line("value low  ", sim.value_low, analytic_low);
    line("agent value", sim.agent_value, analytic_agent);
    std::cout << "hallucination rate " << fmt(sim.halluc_rate) << "  (analytic " << fmt(h) << ")\n";
    std::cout << "mean relationship length " << fmt(sim.mean_relationship_length) << "\n";

    json payload{{"contract",
                  {{"model", contract.model.id},
                   {"price", contract.price},
                   {"effort", contract.effort}}},
                 {"seed", sc.sim.seed},
                 {"cohort_size", sim.cohort_size},
                 {"horizon", sim.horizon},
                 {"estimates",
                  {{"value_high", {{"mean", sim.value_high.mean}, {"se", sim.value_high.se}}},
                   {"value_low", {{"mean", sim.value_low.mean}, {"se", sim.value_low.se}}},
                   {"agent_value", {{"mean", sim.agent_value.mean}, {"se", sim.agent_value.se}}},
                   {"halluc_rate", sim.halluc_rate},
                   {"mean_relationship_length", sim.mean_relationship_length}}},
                 {"analytic",
                  {{"value_high", analytic_high},
                   {"value_low", analytic_low},
                   {"agent_value", analytic_agent},
                   {"halluc_rate", h}}}};

    if (sc.sim.deviation_period) {
        const DeviationVerdict verdict =
            deviation_experiment(contract, pop, sc.cost, params, sc.sim);
        std::cout << "deviation gain " << fmt(verdict.gain.mean) << "  se "
                  << fmt(verdict.gain.se) << "  -> "
                  << (verdict.no_profitable_deviation ? "no profitable deviation"
                                                      : "PROFITABLE deviation")
                  << "\n";
        payload["deviation"] = {{"period", *sc.sim.deviation_period},
                                {"gain_mean", verdict.gain.mean},
                                {"gain_se", verdict.gain.se},
                                {"no_profitable_deviation", verdict.no_profitable_deviation}};
    }

    // NaN SEs are not representable in JSON; emit null via the default dump
    maybe_write_json(out_dir, "simulate.json", payload);

    if (se_degenerate) {
        std::cerr << "warning: cohort too small for standard errors\n";
        return kExitWarning;
    }
    if (checks_failed > 0) {
        std::cerr << "warning: " << checks_failed << " estimate(s) beyond 3 SE of the analytic value\n";
        return kExitWarning;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relational-contract market lab for AI answer services under hallucination risk"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir_sweep = ".";
    std::string out_dir_figures = ".";
    std::optional<std::string> out_dir_opt;
    int threads = 1;

    std::string axis_name = "mu";
    std::string grid_spec;
    std::optional<std::string> by_name;
    std::optional<std::string> forced_model;
    SimulateFlags sim_flags;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario file")->required();
        cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        // seed only affects the stochastic subcommand; accepted everywhere for
        // uniform scripting
        cmd->add_option("--seed", sim_flags.seed, "override the scenario seed");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the equilibrium for one scenario");
    add_common(solve);
    solve->add_option("--out", out_dir_opt, "directory for solve.json");

    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep);
    sweep->add_option("--axis", axis_name, "sweep axis: mu, delta or beta")->required();
    sweep->add_option("--grid", grid_spec, "grid as lo:hi:step or comma list")->required();
    sweep->add_option("--by", by_name, "secondary axis drawn from the scenario's list");
    sweep->add_option("--model", forced_model, "restrict the catalog to one model id");
    sweep->add_option("--out", out_dir_sweep, "output directory (sweep.csv)");

    CLI::App* figures = app.add_subcommand("figures", "render the standard charts + CSVs");
    add_common(figures);
    figures->add_option("--out", out_dir_figures, "output directory");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo validation of a contract");
    add_common(simulate);
    simulate->add_option("--out", out_dir_opt, "directory for simulate.json");
    simulate->add_option("--cohort", sim_flags.cohort, "override cohort size per type");
    simulate->add_option("--deviation-period", sim_flags.deviation_period,
                         "run the one-shot-deviation experiment at this period");
    simulate->add_option("--model", sim_flags.model, "contract override: model id");
    simulate->add_option("--price", sim_flags.price, "contract override: price");
    simulate->add_option("--effort", sim_flags.effort,
                         "contract override: effort (price defaults to the enforcement price)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (solve->parsed()) return run_solve(scenario_path, out_dir_opt, threads);
        if (sweep->parsed())
            return run_sweep_cmd(scenario_path, axis_name, grid_spec, by_name, forced_model,
                                 out_dir_sweep, threads);
        if (figures->parsed()) return run_figures(scenario_path, out_dir_figures, threads);
        if (simulate->parsed()) return run_simulate(scenario_path, out_dir_opt, sim_flags, threads);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
