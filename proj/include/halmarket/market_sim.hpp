#pragma once

#include <cstdint>
#include <optional>

#include "halmarket/types.hpp"

namespace halmarket {

struct SimConfig {
    std::int64_t cohort_size = 100000;  // user lifetimes per type
    std::uint64_t seed = 0;
    std::int64_t horizon = 0;  // periods; 0 derives the smallest T with delta^T < 1e-8
    std::optional<std::int64_t> deviation_period;  // one secret zero-effort period
    int threads = 1;

    void validate() const;
    std::int64_t resolve_horizon(double delta) const;
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;  // NaN when the sample is too small to estimate spread
};

struct SimResult {
    Estimate value_high;  // mean discounted realized utility, high-type cohort
    Estimate value_low;
    Estimate agent_value;  // mean discounted profit per relationship
    double halluc_rate = 0.0;
    double mean_relationship_length = 0.0;
    double relationship_length_se = 0.0;
    std::optional<Estimate> deviation_gain;  // present when deviation_period is configured
    std::int64_t cohort_size = 0;
    std::int64_t horizon = 0;
};

/// Simulates user lifetimes under a fixed contract: each period the user pays
/// the price, the agent pays the wholesale fee and effort cost, a hallucination
/// ends the relationship after inflicting the aversion loss. Discounted sums are
/// averaged per cohort with standard errors. Bit-identical for a fixed seed and
/// config regardless of worker count.
SimResult simulate_relationships(const Contract& contract, const UserPopulation& pop,
                                 const CostFunction& cost, const MarketParams& params,
                                 const SimConfig& cfg);

struct DeviationVerdict {
    Estimate gain;  // discounted profit difference, deviant minus honest arm
    bool no_profitable_deviation = false;  // gain.mean <= 3 * gain.se
};

/// One-shot-deviation test with common random numbers across the honest and
/// deviant arms. At the enforcement price the gain is statistically null.
DeviationVerdict deviation_experiment(const Contract& contract, const UserPopulation& pop,
                                      const CostFunction& cost, const MarketParams& params,
                                      const SimConfig& cfg);

struct StationaryReport {
    bool mass_constant = false;
    std::int64_t population = 0;
    std::int64_t periods = 0;
    double mean_replacement_flow = 0.0;
    double replacement_flow_se = 0.0;
};

/// Overlapping-cohorts accounting check: every exit is replaced one-for-one in
/// the next period, so the active mass stays exactly constant.
StationaryReport stationary_population_check(const Contract& contract, const UserPopulation& pop,
                                             const MarketParams& params, const SimConfig& cfg);

}  // namespace halmarket
