#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halmarket/market_sim.hpp"
#include "halmarket/solver.hpp"
#include "halmarket/types.hpp"

namespace halmarket {

/// Everything a run needs, as read from a line-oriented key/value scenario
/// file with [population], [model <id>], [params], [cost], [solver] and [sim]
/// sections. mu, delta and beta each accept either a scalar or a grid/list;
/// operations that need a scalar say so when only a list was given.
struct Scenario {
    UserType high;
    UserType low;
    std::optional<double> mu;
    std::vector<double> mu_grid;

    ModelCatalog catalog;

    std::optional<double> delta;
    std::vector<double> delta_list;
    std::optional<double> beta;
    std::vector<double> beta_list;

    CostFunction cost;
    SolverConfig solver;
    SimConfig sim;

    double require_mu() const;
    double require_delta() const;
    double require_beta() const;

    UserPopulation population(double mu_value) const;
    UserPopulation population() const { return population(require_mu()); }
    MarketParams market_params() const { return MarketParams{require_delta(), require_beta()}; }

    void validate() const;
};

Scenario parse_scenario(std::string_view text, std::string_view source_name = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical re-emission; parse(emit(s)) reproduces the same domain values.
std::string emit_scenario(const Scenario& scenario);

/// Parses "lo:hi:step" (inclusive) or a comma-separated list of numbers.
std::vector<double> parse_grid(std::string_view text);

}  // namespace halmarket
