#pragma once

#include <span>
#include <vector>

#include "halmarket/types.hpp"

namespace halmarket {

struct SolverConfig {
    int effort_grid_points = 2048;   // dense scan before local refinement
    double refine_tolerance = 1e-9;  // bracket width at which refinement stops, in effort units
    double h_floor = 1e-6;           // sets e_max = ln(h0 / h_floor) / beta
    double fd_step = 1e-6;           // relative step for finite-difference diagnostics
    enum class TieBreak { LowerFee, FirstInCatalog };
    TieBreak model_tiebreak = TieBreak::LowerFee;

    void validate(const ModelCatalog& catalog) const;
    double effort_cap(const UpstreamModel& model, double beta) const;
};

/// First-order-condition diagnostics at a candidate effort level.
struct FocReport {
    double effort = 0.0;
    double lhs_derivative = 0.0;  // marginal discounted user surplus
    double rhs_derivative = 0.0;  // marginal incentive rent
    double residual = 0.0;        // lhs - rhs
    bool second_order_ok = false;
    bool corner = false;  // maximizer sits at effort 0
};

/// Spot benchmark (delta = 0): zero effort, price at wholesale fee, model chosen
/// by the mu-weighted average of per-period utilities. Active only if the
/// contract is acceptable to both user types.
EquilibriumResult spot_equilibrium(const ModelCatalog& catalog, const UserPopulation& pop);

struct EffortSolution {
    double effort = 0.0;
    FocReport foc;
};

/// Unconstrained welfare maximizer over effort in [0, e_max] for a fixed model:
/// dense grid scan, then local refinement of the winning bracket.
EffortSolution optimal_effort(const UpstreamModel& model, const UserPopulation& pop,
                              const CostFunction& cost, const MarketParams& params,
                              const SolverConfig& cfg = {});

/// Full relational equilibrium: per-model optimal effort, participation filtering
/// at the enforcement price, welfare argmax across the catalog, activity check
/// against the patience threshold.
EquilibriumResult solve_equilibrium(const ModelCatalog& catalog, const UserPopulation& pop,
                                    const CostFunction& cost, const MarketParams& params,
                                    const SolverConfig& cfg = {});

/// Finite-difference check of the interior first-order condition at `effort`.
FocReport foc_residual(const UpstreamModel& model, double effort, const UserPopulation& pop,
                       const CostFunction& cost, const MarketParams& params,
                       double fd_step = 1e-6);

/// Analytic cross-partial d2W/(de dmu) = beta*h*[(v_H-v_L) + (1-delta)*(alpha_H-alpha_L)]
///                                        / (1 - delta*(1-h))^2.
double cross_partial(const UpstreamModel& model, double effort, const UserPopulation& pop,
                     const MarketParams& params);

struct MuScheduleRow {
    double mu = 0.0;
    EquilibriumResult result;
};

/// Equilibrium schedule over a strictly increasing mu grid in (0,1). Rows are
/// ordered by grid index regardless of how the per-point solves are scheduled.
std::vector<MuScheduleRow> comparative_static_mu(const ModelCatalog& catalog,
                                                 const UserPopulation& pop_template,
                                                 const CostFunction& cost,
                                                 const MarketParams& params,
                                                 std::span<const double> mu_grid,
                                                 const SolverConfig& cfg = {}, int threads = 1);

}  // namespace halmarket
