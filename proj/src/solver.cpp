#include "halmarket/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "halmarket/model_core.hpp"
#include "parallel.hpp"

namespace halmarket {

namespace {

constexpr double kParticipationTol = 1e-12;
constexpr double kActivityTol = 1e-10;

// Discounted-surplus term of the planner objective, S(e) / D(e).
double surplus_term(const UpstreamModel& model, double effort, const UserPopulation& pop,
                    const CostFunction& cost, const MarketParams& params) {
    const double h = hallucination_prob(model, effort, params.beta);
    const double s = (1.0 - h) * pop.value_avg() - h * pop.aversion_avg() -
                     model.wholesale_fee - effort_cost(cost, effort);
    return s / (1.0 - params.delta * (1.0 - h));
}

// Incentive-rent term c(e) / (delta * (h0 - h)), 0 at e = 0 by continuity.
double rent_term(const UpstreamModel& model, double effort, const CostFunction& cost,
                 const MarketParams& params) {
    if (effort == 0.0) return 0.0;
    const double h = hallucination_prob(model, effort, params.beta);
    return effort_cost(cost, effort) /
           (params.delta * (model.baseline_hallucination - h));
}

// Closed-form dW/de, used to polish the grid winner. The public FOC report
// cross-checks by finite differences instead.
double welfare_slope(const UpstreamModel& model, double effort, const UserPopulation& pop,
                     const CostFunction& cost, const MarketParams& params) {
    const double h = hallucination_prob(model, effort, params.beta);
    const double dh = -params.beta * h;
    const double c = effort_cost(cost, effort);
    const double dc = cost.coefficient * cost.exponent * std::pow(effort, cost.exponent - 1.0);

    const double s = (1.0 - h) * pop.value_avg() - h * pop.aversion_avg() -
                     model.wholesale_fee - c;
    const double ds = -dh * (pop.value_avg() + pop.aversion_avg()) - dc;
    const double denom = 1.0 - params.delta * (1.0 - h);
    const double ddenom = params.delta * dh;
    const double surplus_slope = (ds * denom - s * ddenom) / (denom * denom);

    const double wedge = model.baseline_hallucination - h;
    const double rent_slope = (dc * wedge - c * (-dh)) / (params.delta * wedge * wedge);

    return surplus_slope - rent_slope;
}

// Golden-section maximization of W(m, .) on [lo, hi].
double golden_section(const UpstreamModel& model, const UserPopulation& pop,
                      const CostFunction& cost, const MarketParams& params, double lo, double hi,
                      double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = welfare(model, x1, pop, cost, params);
    double f2 = welfare(model, x2, pop, cost, params);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = welfare(model, x2, pop, cost, params);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = welfare(model, x1, pop, cost, params);
        }
    }
    return 0.5 * (a + b);
}

// Drive the analytic slope to zero inside a bracket with a sign change.
// Returns the refined point, or nullopt when the bracket has no sign change.
std::optional<double> polish_stationary_point(const UpstreamModel& model,
                                              const UserPopulation& pop, const CostFunction& cost,
                                              const MarketParams& params, double lo, double hi) {
    if (!(lo > 0.0)) lo = std::nextafter(0.0, 1.0) + 1e-12;
    double glo = welfare_slope(model, lo, pop, cost, params);
    double ghi = welfare_slope(model, hi, pop, cost, params);
    if (!(glo > 0.0 && ghi < 0.0)) return std::nullopt;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double g = welfare_slope(model, mid, pop, cost, params);
        if (g == 0.0) return mid;
        if (g > 0.0) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
            ghi = g;
        }
    }
    return 0.5 * (lo + hi);
}

struct Participation {
    double price = 0.0;
    double value_high = 0.0;
    double value_low = 0.0;
    bool ok = false;
};

Participation participation_at(const UpstreamModel& model, double effort,
                               const UserPopulation& pop, const CostFunction& cost,
                               const MarketParams& params) {
    Participation out;
    out.price = enforcement_price(model, effort, cost, params);
    const double h = hallucination_prob(model, effort, params.beta);
    out.value_high = lifetime_value(pop.high, h, out.price, params.delta);
    out.value_low = lifetime_value(pop.low, h, out.price, params.delta);
    out.ok = out.value_high >= -kParticipationTol && out.value_low >= -kParticipationTol;
    return out;
}

double participation_margin(const UpstreamModel& model, double effort, const UserPopulation& pop,
                            const CostFunction& cost, const MarketParams& params) {
    const Participation p = participation_at(model, effort, pop, cost, params);
    return std::min(p.value_high, p.value_low);
}

// Locate the participation boundary between a feasible and an infeasible effort.
double bisect_participation_boundary(const UpstreamModel& model, const UserPopulation& pop,
                                     const CostFunction& cost, const MarketParams& params,
                                     double feasible_e, double infeasible_e) {
    for (int i = 0; i < 100 && std::abs(infeasible_e - feasible_e) > 1e-12; ++i) {
        const double mid = 0.5 * (feasible_e + infeasible_e);
        if (participation_margin(model, mid, pop, cost, params) >= 0.0)
            feasible_e = mid;
        else
            infeasible_e = mid;
    }
    return feasible_e;
}

struct ModelCandidate {
    double effort = 0.0;
    double objective = -std::numeric_limits<double>::infinity();
    bool participates = false;
    bool constrained = false;
};

// Best effort for one model subject to both participation constraints at the
// enforcement price. If the unconstrained optimum violates participation, the
// feasible sub-intervals of [0, e_max] are searched instead.
ModelCandidate constrained_best_effort(const UpstreamModel& model, const UserPopulation& pop,
                                       const CostFunction& cost, const MarketParams& params,
                                       const SolverConfig& cfg) {
    ModelCandidate out;
    const EffortSolution unconstrained = optimal_effort(model, pop, cost, params, cfg);
    out.effort = unconstrained.effort;
    out.objective = welfare(model, unconstrained.effort, pop, cost, params);
    if (participation_at(model, unconstrained.effort, pop, cost, params).ok) {
        out.participates = true;
        return out;
    }

    const double e_max = cfg.effort_cap(model, params.beta);
    const int n = cfg.effort_grid_points;
    std::vector<double> grid(static_cast<std::size_t>(n));
    std::vector<char> feasible(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        grid[static_cast<std::size_t>(i)] = e_max * static_cast<double>(i) / (n - 1);
        feasible[static_cast<std::size_t>(i)] =
            participation_margin(model, grid[static_cast<std::size_t>(i)], pop, cost, params) >= 0.0;
    }

    ModelCandidate best;  // participates stays false if no feasible grid point exists
    int i = 0;
    while (i < n) {
        if (!feasible[static_cast<std::size_t>(i)]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && feasible[static_cast<std::size_t>(j + 1)]) ++j;

        double lo = grid[static_cast<std::size_t>(i)];
        double hi = grid[static_cast<std::size_t>(j)];
        if (i > 0)
            lo = bisect_participation_boundary(model, pop, cost, params, lo,
                                               grid[static_cast<std::size_t>(i - 1)]);
        if (j + 1 < n)
            hi = bisect_participation_boundary(model, pop, cost, params, hi,
                                               grid[static_cast<std::size_t>(j + 1)]);

        // best grid point inside the run, then refine locally within [lo, hi]
        int k_best = i;
        double w_best = welfare(model, grid[static_cast<std::size_t>(i)], pop, cost, params);
        for (int k = i + 1; k <= j; ++k) {
            const double w = welfare(model, grid[static_cast<std::size_t>(k)], pop, cost, params);
            if (w > w_best) {
                w_best = w;
                k_best = k;
            }
        }
        double blo = (k_best > i) ? grid[static_cast<std::size_t>(k_best - 1)] : lo;
        double bhi = (k_best < j) ? grid[static_cast<std::size_t>(k_best + 1)] : hi;
        blo = std::max(blo, lo);
        bhi = std::min(bhi, hi);
        double e_run = golden_section(model, pop, cost, params, blo, bhi, cfg.refine_tolerance);
        if (auto polished = polish_stationary_point(model, pop, cost, params,
                                                    std::max(blo, 1e-12), bhi)) {
            if (*polished >= lo && *polished <= hi) e_run = *polished;
        }
        double w_run = welfare(model, e_run, pop, cost, params);
        for (double edge : {lo, hi}) {
            const double w_edge = welfare(model, edge, pop, cost, params);
            if (w_edge > w_run) {
                w_run = w_edge;
                e_run = edge;
            }
        }
        if (participation_margin(model, e_run, pop, cost, params) < -kParticipationTol) {
            // refinement stepped over the boundary; clamp back to the feasible edge
            e_run = (std::abs(e_run - lo) < std::abs(e_run - hi)) ? lo : hi;
            w_run = welfare(model, e_run, pop, cost, params);
        }
        if (!best.participates || w_run > best.objective) {
            best.effort = e_run;
            best.objective = w_run;
            best.participates = true;
            best.constrained = true;
        }
        i = j + 1;
    }

    if (best.participates) return best;
    return out;  // unconstrained candidate, flagged as non-participating
}

bool candidate_beats(const ModelCandidate& a, const UpstreamModel& ma, const ModelCandidate& b,
                     const UpstreamModel& mb, SolverConfig::TieBreak tiebreak) {
    if (a.objective != b.objective) return a.objective > b.objective;
    if (tiebreak == SolverConfig::TieBreak::LowerFee && ma.wholesale_fee != mb.wholesale_fee)
        return ma.wholesale_fee < mb.wholesale_fee;
    return false;  // catalog order: the incumbent wins
}

EquilibriumResult assemble_result(const UpstreamModel& model, double effort,
                                  const UserPopulation& pop, const CostFunction& cost,
                                  const MarketParams& params) {
    EquilibriumResult r;
    r.contract.model = model;
    r.contract.effort = effort;
    r.contract.price = enforcement_price(model, effort, cost, params);
    r.hallucination_rate = hallucination_prob(model, effort, params.beta);
    r.welfare = welfare(model, effort, pop, cost, params);
    r.value_high = lifetime_value(pop.high, r.hallucination_rate, r.contract.price, params.delta);
    r.value_low = lifetime_value(pop.low, r.hallucination_rate, r.contract.price, params.delta);
    r.agent_value = continuation_value(r.contract, cost, params);
    r.rent_factor = effort > 0.0 ? rent_factor(model, effort, params) : 0.0;
    r.delta_lower = effort > 0.0 ? delta_lower(model, effort, pop.low, cost, params.beta).value : 0.0;
    r.binding_type = binding_type(pop, r.hallucination_rate);
    r.kappa = pop.sensitivity_ratio();
    return r;
}

}  // namespace

void SolverConfig::validate(const ModelCatalog& catalog) const {
    if (effort_grid_points < 16)
        throw ValidationError("solver.effort_grid_points: must be >= 16");
    if (!(refine_tolerance > 0.0 && refine_tolerance < 1.0))
        throw ValidationError("solver.refine_tolerance: must lie in (0,1)");
    if (!(h_floor > 0.0) || !(h_floor < catalog.min_baseline_hallucination()))
        throw ValidationError(
            "solver.h_floor: must be positive and below every catalog baseline hallucination");
    if (!(fd_step > 0.0 && fd_step < 1.0))
        throw ValidationError("solver.fd_step: must lie in (0,1)");
}

double SolverConfig::effort_cap(const UpstreamModel& model, double beta) const {
    return std::log(model.baseline_hallucination / h_floor) / beta;
}

EquilibriumResult spot_equilibrium(const ModelCatalog& catalog, const UserPopulation& pop) {
    catalog.validate();
    pop.validate();

    const UpstreamModel* best = nullptr;
    double best_objective = -std::numeric_limits<double>::infinity();
    for (const auto& m : catalog.models) {
        const double h0 = m.baseline_hallucination;
        const double u_high = per_period_utility(pop.high, h0, m.wholesale_fee);
        const double u_low = per_period_utility(pop.low, h0, m.wholesale_fee);
        const double objective = pop.mu * u_high + (1.0 - pop.mu) * u_low;
        const bool wins = !best || objective > best_objective ||
                          (objective == best_objective && m.wholesale_fee < best->wholesale_fee);
        if (wins) {
            best = &m;
            best_objective = objective;
        }
    }

    EquilibriumResult r;
    r.contract.model = *best;
    r.contract.price = best->wholesale_fee;
    r.contract.effort = 0.0;
    r.hallucination_rate = best->baseline_hallucination;
    r.welfare = best_objective;
    r.value_high = per_period_utility(pop.high, r.hallucination_rate, r.contract.price);
    r.value_low = per_period_utility(pop.low, r.hallucination_rate, r.contract.price);
    r.agent_value = 0.0;
    r.rent_factor = 0.0;
    r.delta_lower = 0.0;
    r.binding_type = binding_type(pop, r.hallucination_rate);
    r.kappa = pop.sensitivity_ratio();
    r.active = r.value_high >= 0.0 && r.value_low >= 0.0;
    return r;
}

EffortSolution optimal_effort(const UpstreamModel& model, const UserPopulation& pop,
                              const CostFunction& cost, const MarketParams& params,
                              const SolverConfig& cfg) {
    if (!(params.delta > 0.0))
        throw ValidationError("optimal_effort: requires delta > 0 (delta = 0 is the spot regime)");

    const double e_max = cfg.effort_cap(model, params.beta);
    const int n = cfg.effort_grid_points;

    int i_best = 0;
    double w_best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double e = e_max * static_cast<double>(i) / (n - 1);
        const double w = welfare(model, e, pop, cost, params);
        if (w > w_best) {
            w_best = w;
            i_best = i;
        }
    }

    const double lo = e_max * static_cast<double>(std::max(0, i_best - 1)) / (n - 1);
    const double hi = e_max * static_cast<double>(std::min(n - 1, i_best + 1)) / (n - 1);
    double e_star = golden_section(model, pop, cost, params, lo, hi, cfg.refine_tolerance);
    if (auto polished = polish_stationary_point(model, pop, cost, params, lo, hi))
        e_star = *polished;

    // the corner always competes
    if (welfare(model, 0.0, pop, cost, params) >= welfare(model, e_star, pop, cost, params))
        e_star = 0.0;

    EffortSolution sol;
    sol.effort = e_star;
    if (e_star == 0.0) {
        // one-sided diagnostics at the corner
        const double s = cfg.fd_step;
        FocReport foc;
        foc.effort = 0.0;
        foc.corner = true;
        foc.lhs_derivative = (surplus_term(model, s, pop, cost, params) -
                              surplus_term(model, 0.0, pop, cost, params)) / s;
        foc.rhs_derivative = rent_term(model, s, cost, params) / s;
        foc.residual = foc.lhs_derivative - foc.rhs_derivative;
        foc.second_order_ok =
            welfare(model, s, pop, cost, params) <= welfare(model, 0.0, pop, cost, params);
        sol.foc = foc;
    } else {
        sol.foc = foc_residual(model, e_star, pop, cost, params, cfg.fd_step);
    }
    return sol;
}

EquilibriumResult solve_equilibrium(const ModelCatalog& catalog, const UserPopulation& pop,
                                    const CostFunction& cost, const MarketParams& params,
                                    const SolverConfig& cfg) {
    catalog.validate();
    pop.validate();
    cost.validate();
    params.validate();
    cfg.validate(catalog);
    if (params.delta == 0.0)
        throw ValidationError(
            "solve_equilibrium: delta = 0 is the spot regime; use spot_equilibrium");

    std::vector<ModelCandidate> candidates(catalog.models.size());
    for (std::size_t i = 0; i < catalog.models.size(); ++i)
        candidates[i] = constrained_best_effort(catalog.models[i], pop, cost, params, cfg);

    std::size_t winner = catalog.models.size();
    for (std::size_t i = 0; i < catalog.models.size(); ++i) {
        if (!candidates[i].participates) continue;
        if (winner == catalog.models.size() ||
            candidate_beats(candidates[i], catalog.models[i], candidates[winner],
                            catalog.models[winner], cfg.model_tiebreak))
            winner = i;
    }

    if (winner == catalog.models.size()) {
        // no participating contract at all: report the best raw candidate, inactive
        std::size_t diag = 0;
        for (std::size_t i = 1; i < catalog.models.size(); ++i)
            if (candidate_beats(candidates[i], catalog.models[i], candidates[diag],
                                catalog.models[diag], cfg.model_tiebreak))
                diag = i;
        EquilibriumResult r = assemble_result(catalog.models[diag], candidates[diag].effort, pop,
                                              cost, params);
        r.active = false;
        return r;
    }

    const ModelCandidate& chosen = candidates[winner];
    EquilibriumResult r = assemble_result(catalog.models[winner], chosen.effort, pop, cost, params);
    r.participation_constrained = chosen.constrained;
    const bool patient_enough =
        chosen.effort == 0.0 || params.delta >= r.delta_lower - kActivityTol;
    r.active = patient_enough;
    r.zero_effort_fallback = r.active && chosen.effort == 0.0;
    return r;
}

FocReport foc_residual(const UpstreamModel& model, double effort, const UserPopulation& pop,
                       const CostFunction& cost, const MarketParams& params, double fd_step) {
    if (!(effort > 0.0)) throw std::domain_error("foc_residual: effort must be > 0");

    double s = fd_step * std::max(1.0, effort);
    if (effort - s <= 0.0) s = 0.5 * effort;

    FocReport foc;
    foc.effort = effort;
    foc.lhs_derivative = (surplus_term(model, effort + s, pop, cost, params) -
                          surplus_term(model, effort - s, pop, cost, params)) /
                         (2.0 * s);
    foc.rhs_derivative =
        (rent_term(model, effort + s, cost, params) - rent_term(model, effort - s, cost, params)) /
        (2.0 * s);
    foc.residual = foc.lhs_derivative - foc.rhs_derivative;

    // wider step for curvature: the second difference cancels ~12 digits
    double s2 = std::max(s, 1e-4 * std::max(1.0, effort));
    if (effort - s2 <= 0.0) s2 = 0.5 * effort;
    const double w_mid = welfare(model, effort, pop, cost, params);
    const double w_lo = welfare(model, effort - s2, pop, cost, params);
    const double w_hi = welfare(model, effort + s2, pop, cost, params);
    foc.second_order_ok = (w_hi - 2.0 * w_mid + w_lo) < 0.0;
    return foc;
}

double cross_partial(const UpstreamModel& model, double effort, const UserPopulation& pop,
                     const MarketParams& params) {
    if (!(effort > 0.0)) throw std::domain_error("cross_partial: effort must be > 0");
    if (!(params.delta > 0.0 && params.delta < 1.0))
        throw std::domain_error("cross_partial: delta must lie in (0,1)");
    const double h = hallucination_prob(model, effort, params.beta);
    const double denom = 1.0 - params.delta * (1.0 - h);
    const double gap = (pop.high.value - pop.low.value) +
                       (1.0 - params.delta) * (pop.high.aversion - pop.low.aversion);
    return params.beta * h * gap / (denom * denom);
}

std::vector<MuScheduleRow> comparative_static_mu(const ModelCatalog& catalog,
                                                 const UserPopulation& pop_template,
                                                 const CostFunction& cost,
                                                 const MarketParams& params,
                                                 std::span<const double> mu_grid,
                                                 const SolverConfig& cfg, int threads) {
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0 && mu_grid[i] < 1.0))
            throw ValidationError("mu_grid: values must lie strictly in (0,1)");
        if (i > 0 && !(mu_grid[i] > mu_grid[i - 1]))
            throw ValidationError("mu_grid: must be strictly increasing");
    }

    std::vector<MuScheduleRow> rows(mu_grid.size());
    detail::parallel_for(static_cast<std::int64_t>(mu_grid.size()), threads, [&](std::int64_t i) {
        UserPopulation pop = pop_template;
        pop.mu = mu_grid[static_cast<std::size_t>(i)];
        rows[static_cast<std::size_t>(i)] =
            MuScheduleRow{pop.mu, solve_equilibrium(catalog, pop, cost, params, cfg)};
    });
    return rows;
}

}  // namespace halmarket
