#include "halmarket/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "halmarket/model_core.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace halmarket {

namespace {

constexpr double kHorizonTailWeight = 1e-8;

Estimate summarize(const std::vector<double>& samples) {
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double x : samples) sum += x;
    const double mean = sum / n;
    if (samples.size() < 2)
        return Estimate{mean, std::numeric_limits<double>::quiet_NaN()};
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return Estimate{mean, sd / std::sqrt(n)};
}

struct LifetimeOutcome {
    double user_value = 0.0;
    double agent_value = 0.0;
    std::int32_t length = 0;
    bool hallucinated = false;
};

LifetimeOutcome run_lifetime(detail::SplitMix64 rng, const UserType& user, double hallucination,
                             double price, double margin, double delta, std::int64_t horizon) {
    LifetimeOutcome out;
    double disc = 1.0;
    for (std::int64_t t = 0; t < horizon; ++t) {
        const bool hall = rng.uniform() < hallucination;
        out.agent_value += disc * margin;
        out.user_value += disc * ((hall ? -user.aversion : user.value) - price);
        ++out.length;
        if (hall) {
            out.hallucinated = true;
            break;
        }
        disc *= delta;
    }
    return out;
}

}  // namespace

void SimConfig::validate() const {
    if (cohort_size < 1) throw ValidationError("sim.cohort_size: must be >= 1");
    if (horizon < 0) throw ValidationError("sim.horizon: must be >= 1 (or 0 to derive)");
    if (deviation_period && *deviation_period < 0)
        throw ValidationError("sim.deviation_period: must be >= 0");
    if (threads < 1) throw ValidationError("sim.threads: must be >= 1");
}

std::int64_t SimConfig::resolve_horizon(double delta) const {
    if (horizon > 0) return horizon;
    if (delta <= 0.0) return 1;
    auto t = static_cast<std::int64_t>(
        std::ceil(std::log(kHorizonTailWeight) / std::log(delta)));
    t = std::max<std::int64_t>(t, 1);
    while (std::pow(delta, static_cast<double>(t)) >= kHorizonTailWeight) ++t;
    return t;
}

SimResult simulate_relationships(const Contract& contract, const UserPopulation& pop,
                                 const CostFunction& cost, const MarketParams& params,
                                 const SimConfig& cfg) {
    contract.validate();
    pop.validate();
    cost.validate();
    params.validate();
    cfg.validate();

    const std::int64_t horizon = cfg.resolve_horizon(params.delta);
    if (cfg.deviation_period && *cfg.deviation_period >= horizon)
        throw ValidationError("sim.deviation_period: must be < horizon");

    const double h = hallucination_prob(contract.model, contract.effort, params.beta);
    const double margin =
        contract.price - contract.model.wholesale_fee - effort_cost(cost, contract.effort);
    const std::int64_t n = cfg.cohort_size;

    std::vector<double> high_values(static_cast<std::size_t>(n));
    std::vector<double> low_values(static_cast<std::size_t>(n));
    std::vector<double> agent_values(static_cast<std::size_t>(2 * n));
    std::vector<std::int32_t> lengths(static_cast<std::size_t>(2 * n));
    std::vector<char> hallucinated(static_cast<std::size_t>(2 * n));

    // lifetime index space: [0, n) high cohort, [n, 2n) low cohort
    detail::parallel_for(2 * n, cfg.threads, [&](std::int64_t i) {
        const bool is_high = i < n;
        const UserType& user = is_high ? pop.high : pop.low;
        const LifetimeOutcome out =
            run_lifetime(detail::stream_for(cfg.seed, static_cast<std::uint64_t>(i)), user, h,
                         contract.price, margin, params.delta, horizon);
        if (is_high)
            high_values[static_cast<std::size_t>(i)] = out.user_value;
        else
            low_values[static_cast<std::size_t>(i - n)] = out.user_value;
        agent_values[static_cast<std::size_t>(i)] = out.agent_value;
        lengths[static_cast<std::size_t>(i)] = out.length;
        hallucinated[static_cast<std::size_t>(i)] = out.hallucinated ? 1 : 0;
    });

    SimResult result;
    result.cohort_size = n;
    result.horizon = horizon;
    result.value_high = summarize(high_values);
    result.value_low = summarize(low_values);
    result.agent_value = summarize(agent_values);

    std::int64_t total_periods = 0;
    std::int64_t total_events = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        total_periods += lengths[i];
        total_events += hallucinated[i];
    }
    result.halluc_rate =
        total_periods > 0 ? static_cast<double>(total_events) / static_cast<double>(total_periods)
                          : 0.0;

    std::vector<double> length_samples(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i)
        length_samples[i] = static_cast<double>(lengths[i]);
    const Estimate len = summarize(length_samples);
    result.mean_relationship_length = len.mean;
    result.relationship_length_se = len.se;

    if (cfg.deviation_period) {
        const std::int64_t d = *cfg.deviation_period;
        const double h0 = contract.model.baseline_hallucination;
        const double shirk_margin = contract.price - contract.model.wholesale_fee;
        std::vector<double> gains(static_cast<std::size_t>(2 * n));
        detail::parallel_for(2 * n, cfg.threads, [&](std::int64_t i) {
            // separate index block so the paired arms stay independent of the
            // estimation cohort above
            auto rng = detail::stream_for(cfg.seed, static_cast<std::uint64_t>(2 * n + i));
            bool honest_alive = true;
            bool deviant_alive = true;
            double honest_pv = 0.0;
            double deviant_pv = 0.0;
            double disc = 1.0;
            for (std::int64_t t = 0; t < horizon && (honest_alive || deviant_alive); ++t) {
                const double u = rng.uniform();  // common random numbers for both arms
                if (honest_alive) {
                    honest_pv += disc * margin;
                    if (u < h) honest_alive = false;
                }
                if (deviant_alive) {
                    const bool shirking = (t == d);
                    deviant_pv += disc * (shirking ? shirk_margin : margin);
                    if (u < (shirking ? h0 : h)) deviant_alive = false;
                }
                disc *= params.delta;
            }
            gains[static_cast<std::size_t>(i)] = deviant_pv - honest_pv;
        });
        result.deviation_gain = summarize(gains);
    }

    return result;
}

DeviationVerdict deviation_experiment(const Contract& contract, const UserPopulation& pop,
                                      const CostFunction& cost, const MarketParams& params,
                                      const SimConfig& cfg) {
    if (!cfg.deviation_period)
        throw ConfigError("deviation_experiment: sim.deviation_period must be set");
    const SimResult res = simulate_relationships(contract, pop, cost, params, cfg);
    DeviationVerdict verdict;
    verdict.gain = *res.deviation_gain;
    verdict.no_profitable_deviation =
        std::isnan(verdict.gain.se) ? verdict.gain.mean <= 0.0
                                    : verdict.gain.mean <= 3.0 * verdict.gain.se;
    return verdict;
}

StationaryReport stationary_population_check(const Contract& contract, const UserPopulation& pop,
                                             const MarketParams& params, const SimConfig& cfg) {
    contract.validate();
    pop.validate();
    params.validate();
    cfg.validate();

    const double h = hallucination_prob(contract.model, contract.effort, params.beta);
    const std::int64_t population = cfg.cohort_size;
    const std::int64_t periods = cfg.resolve_horizon(params.delta);

    std::vector<detail::SplitMix64> active;
    active.reserve(static_cast<std::size_t>(population));
    std::uint64_t next_index = 0;
    for (std::int64_t i = 0; i < population; ++i)
        active.push_back(detail::stream_for(cfg.seed, next_index++));

    StationaryReport report;
    report.population = population;
    report.periods = periods;
    report.mass_constant = true;

    std::vector<double> flows(static_cast<std::size_t>(periods), 0.0);
    std::int64_t pending_inflow = 0;
    for (std::int64_t t = 0; t < periods; ++t) {
        // replacement inflow equals last period's exits; mass must be exact
        for (std::int64_t i = 0; i < pending_inflow; ++i)
            active.push_back(detail::stream_for(cfg.seed, next_index++));
        flows[static_cast<std::size_t>(t)] = static_cast<double>(pending_inflow);
        if (static_cast<std::int64_t>(active.size()) != population) {
            report.mass_constant = false;
            break;
        }
        std::int64_t exits = 0;
        std::erase_if(active, [&](detail::SplitMix64& rng) {
            const bool hall = rng.uniform() < h;
            exits += hall ? 1 : 0;
            return hall;
        });
        pending_inflow = exits;
        if (static_cast<std::int64_t>(active.size()) + exits != population) {
            report.mass_constant = false;
            break;
        }
    }

    // first period has no predecessor exits; summarize the steady flows only
    std::vector<double> steady(flows.begin() + std::min<std::int64_t>(1, periods), flows.end());
    if (!steady.empty()) {
        const Estimate flow = summarize(steady);
        report.mean_replacement_flow = flow.mean;
        report.replacement_flow_se = flow.se;
    }
    return report;
}

}  // namespace halmarket
